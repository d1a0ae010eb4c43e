//! Experiment execution and output writing for the benchmark commands.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use ma_core::{
    gaussian_case, lscheme_solve, newton_solve, oscillating_case, write_field_csv, CoreError,
    Grid, InitialGuess, InnerSolver, InnerSolverOptions, LschemeConfig, NewtonLinear,
    ProblemCase, SolveReport, SolverChoice,
};

/// Which benchmark problem to construct.
#[derive(Debug, Clone, Serialize)]
pub struct CaseSpec {
    pub name: String,
    pub sigma: f64,
    pub mu: (f64, f64),
    pub eps_s: f64,
    pub l: u32,
}

pub const CASE_NAMES: [&str; 3] = ["gaussian", "gaussian-curvature", "oscillating"];

impl CaseSpec {
    pub fn build(&self) -> Result<ProblemCase> {
        let case = match self.name.as_str() {
            "gaussian" => gaussian_case(self.sigma, self.mu, false),
            "gaussian-curvature" => gaussian_case(self.sigma, self.mu, true),
            "oscillating" => oscillating_case(self.sigma, self.mu, self.eps_s, self.l),
            other => {
                bail!(
                    "unknown case '{other}', valid: {}",
                    CASE_NAMES.join(", ")
                )
            }
        };
        case.map_err(|e| anyhow!("cannot construct case '{}': {e}", self.name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Lscheme,
    Newton,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Lscheme => "lscheme",
            Scheme::Newton => "newton",
        }
    }
}

impl FromStr for Scheme {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lscheme" => Ok(Scheme::Lscheme),
            "newton" => Ok(Scheme::Newton),
            other => bail!("unknown scheme '{other}', valid: lscheme, newton"),
        }
    }
}

/// Fully resolved configuration of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub case: CaseSpec,
    pub n: usize,
    pub scheme: Scheme,
    pub solver: String,
    pub green_m: usize,
    pub init: String,
    pub eta: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub lambda_thresh: f64,
    pub sign: String,
}

impl Experiment {
    pub fn config(&self) -> Result<LschemeConfig> {
        let sign = match self.sign.as_str() {
            "convex" => ma_core::CurvatureSign::Convex,
            "concave" => ma_core::CurvatureSign::Concave,
            other => bail!("unknown sign '{other}', valid: convex, concave"),
        };
        Ok(LschemeConfig {
            eta: self.eta,
            lambda_thresh: self.lambda_thresh,
            delta_tol: self.tol,
            i_max: self.max_iters,
            sign,
            ..Default::default()
        })
    }

    pub fn initial_guess(&self) -> Result<InitialGuess> {
        parse_init(&self.init)
    }

    /// Runs the experiment once; the wall time includes solver preparation
    /// (factorisations, preconditioner setup, kernel assembly).
    pub fn execute(&self) -> Result<(SolveReport, f64)> {
        let case = self.case.build()?;
        let grid = Grid::new(self.n)
            .map_err(|e| anyhow!("invalid grid size {}: {e}", self.n))?;
        let cfg = self.config()?;
        let init = self.initial_guess()?;
        let start = Instant::now();
        let report = match self.scheme {
            Scheme::Lscheme => {
                let choice = SolverChoice::from_str(&self.solver)
                    .map_err(|e| anyhow!("{e}"))?;
                let opts = InnerSolverOptions {
                    green_truncation: self.green_m,
                    ..Default::default()
                };
                let solver = InnerSolver::prepare(choice, &grid, &opts)?;
                lscheme_solve(&case, &grid, &init, &cfg, &solver)?
            }
            Scheme::Newton => {
                let linear = match self.solver.as_str() {
                    "cg" => NewtonLinear::default(),
                    "direct" => NewtonLinear::Direct,
                    other => bail!("newton supports solvers 'cg' and 'direct', got '{other}'"),
                };
                newton_solve(&case, &grid, &init, &cfg, &linear)?
            }
        };
        Ok((report, start.elapsed().as_secs_f64() * 1e3))
    }

    /// Runs `reps` repetitions and reports the first result with the median
    /// wall time; all non-timing output is deterministic across repetitions.
    pub fn execute_timed(&self, reps: usize) -> Result<(SolveReport, f64)> {
        let reps = reps.max(1);
        let mut first = None;
        let mut walls = Vec::with_capacity(reps);
        for _ in 0..reps {
            let (report, wall) = self.execute()?;
            walls.push(wall);
            if first.is_none() {
                first = Some(report);
            }
        }
        walls.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok((first.unwrap(), walls[walls.len() / 2]))
    }
}

pub fn parse_init(s: &str) -> Result<InitialGuess> {
    if s == "exact" {
        return Ok(InitialGuess::Exact);
    }
    if let Some(c) = s.strip_prefix("convex:") {
        let c: f64 = c.parse().context("initial-guess constant")?;
        return Ok(InitialGuess::ConvexBump(c));
    }
    if let Some(c) = s.strip_prefix("saddle:") {
        let c: f64 = c.parse().context("initial-guess constant")?;
        return Ok(InitialGuess::SaddleBump(c));
    }
    bail!("unknown initial guess '{s}', valid: convex:<C>, saddle:<C>, exact")
}

/// One cell of a sweep or comparison.
pub enum CellOutcome {
    Solved { report: SolveReport, wall_ms: f64 },
    /// Construction or preparation failed; `kind` distinguishes the
    /// documented capacity error from everything else.
    Failed { kind: &'static str, message: String },
}

pub fn run_cell(exp: &Experiment, reps: usize) -> CellOutcome {
    match exp.execute_timed(reps) {
        Ok((report, wall_ms)) => CellOutcome::Solved { report, wall_ms },
        Err(err) => {
            let kind = match err.downcast_ref::<CoreError>() {
                Some(CoreError::CapacityExceeded(_)) => "capacity-error",
                _ => "error",
            };
            CellOutcome::Failed {
                kind,
                message: format!("{err:#}"),
            }
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:e}"),
        _ => "NA".to_string(),
    }
}

/// `history.csv`: one row per outer iteration.
pub fn write_history_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "i,update_l2,res_l2,res_inf,lambda,inner_iters,wall_ms")?;
    for r in &report.history {
        let lambda = if r.lambda.is_finite() {
            format!("{:e}", r.lambda)
        } else {
            "NA".to_string()
        };
        let inner = r
            .inner_iters
            .map(|k| k.to_string())
            .unwrap_or_else(|| "NA".to_string());
        writeln!(
            f,
            "{},{:e},{:e},{:e},{},{},{:.4}",
            r.i, r.update_l2, r.res_l2, r.res_inf, lambda, inner, r.wall_ms
        )?;
    }
    Ok(())
}

/// `report.json`: configuration echo plus the solve report.
pub fn write_report_json(path: &Path, exp: &Experiment, report: &SolveReport) -> Result<()> {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        config: &'a Experiment,
        #[serde(flatten)]
        report: &'a SolveReport,
    }
    let json = serde_json::to_string_pretty(&Wrapper {
        config: exp,
        report,
    })?;
    fs::write(path, json)?;
    Ok(())
}

pub fn write_solution_csv(path: &Path, exp: &Experiment, report: &SolveReport) -> Result<()> {
    let case = exp.case.build()?;
    let grid = Grid::new(exp.n)?;
    let bc = case.sample_gamma(&grid)?;
    let mut f = fs::File::create(path)?;
    write_field_csv(&mut f, &grid, &report.final_u, &bc)?;
    Ok(())
}

pub const SWEEP_HEADER: &str =
    "n,scheme,solver,status,iterations,wall_ms,error_l2,error_l2_scaled,error_inf,mean_inner_iters";

pub fn sweep_row(n: usize, scheme: Scheme, solver: &str, outcome: &CellOutcome) -> String {
    match outcome {
        CellOutcome::Solved { report, wall_ms } => format!(
            "{},{},{},{},{},{:.3},{},{},{},{}",
            n,
            scheme.name(),
            solver,
            report.status.name(),
            report.iterations,
            wall_ms,
            fmt_opt(report.error_l2),
            fmt_opt(report.error_l2_scaled),
            fmt_opt(report.error_inf),
            fmt_opt(report.mean_inner_iters()),
        ),
        CellOutcome::Failed { kind, .. } => format!(
            "{},{},{},{kind},NA,NA,NA,NA,NA,NA",
            n,
            scheme.name(),
            solver
        ),
    }
}

pub const COMPARE_HEADER: &str = "n,lscheme_status,lscheme_iterations,lscheme_wall_ms,\
newton_status,newton_iterations,newton_wall_ms,cg_iters_preconditioned,cg_iters_unpreconditioned";

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Caps sweep parallelism from `MA_BENCH_THREADS` when set.
pub fn thread_pool() -> Result<Option<rayon::ThreadPool>> {
    match std::env::var("MA_BENCH_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => {
            let k: usize = v
                .parse()
                .with_context(|| format!("MA_BENCH_THREADS must be a positive integer, got '{v}'"))?;
            if k == 0 {
                bail!("MA_BENCH_THREADS must be positive");
            }
            Ok(Some(
                rayon::ThreadPoolBuilder::new().num_threads(k).build()?,
            ))
        }
    }
}
