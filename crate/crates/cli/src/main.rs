//! `ma-bench`: benchmark harness for the Monge-Ampere solvers.
//!
//! Three subcommands: `run` executes a single experiment, `sweep` crosses
//! grid sizes, schemes and solvers into a CSV table, and `compare` produces
//! the L-scheme vs Newton side-by-side including mean inner-iteration counts
//! with and without preconditioning.
//!
//! Exit codes: 0 when the solve converged or stagnated at the floating-point
//! floor, 2 when it hit the iteration cap or diverged, 1 on usage errors.

mod exec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use exec::{
    ensure_out_dir, parse_init, run_cell, sweep_row, thread_pool, write_history_csv,
    write_report_json, write_solution_csv, CaseSpec, CellOutcome, Experiment, Scheme,
    COMPARE_HEADER, SWEEP_HEADER,
};
use ma_core::{SolveStatus, SolverChoice};

#[derive(Parser)]
#[command(name = "ma-bench", version, about = "Monge-Ampere solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment; writes report.json and history.csv
    Run(RunArgs),
    /// Cross grid sizes, schemes and solvers; writes sweep.csv
    Sweep(SweepArgs),
    /// L-scheme vs Newton across grid sizes; writes compare.csv
    Compare(CompareArgs),
}

#[derive(Args)]
struct CaseArgs {
    /// Problem case: gaussian | gaussian-curvature | oscillating
    #[arg(long)]
    case: String,
    /// Gaussian width
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Gaussian centre as "x,y"
    #[arg(long, default_value = "0.5,0.5")]
    mu: String,
    /// Perturbation amplitude of the oscillating case
    #[arg(long = "eps-s", default_value_t = 2e-4)]
    eps_s: f64,
    /// Perturbation frequency of the oscillating case
    #[arg(long, default_value_t = 12)]
    l: u32,
}

#[derive(Args)]
struct SolveArgs {
    /// Outer scheme: lscheme | newton (sweep accepts a comma list)
    #[arg(long, default_value = "lscheme")]
    scheme: String,
    /// Inner solver: direct | cg | pcg-ilu | pcg-mg | green (sweep accepts a
    /// comma list; newton supports cg and direct, defaulting to cg)
    #[arg(long)]
    solver: Option<String>,
    /// Series truncation for the green solver
    #[arg(long = "green-m", default_value_t = 50)]
    green_m: usize,
    /// Initial guess: convex:<C> | saddle:<C> | exact
    #[arg(long, default_value = "convex:30")]
    init: String,
    /// Safety factor on the measured Hessian eigenvalue
    #[arg(long, default_value_t = 1.5)]
    eta: f64,
    /// Update 2-norm convergence tolerance
    #[arg(long, default_value_t = 1e-16)]
    tol: f64,
    #[arg(long = "max-iters", default_value_t = 1500)]
    max_iters: usize,
    /// Upper clamp on the lumped constant
    #[arg(long = "lambda-thresh", default_value_t = 1e8)]
    lambda_thresh: f64,
    /// Lumped-constant sign: convex | concave
    #[arg(long, default_value = "convex")]
    sign: String,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Timing repetitions (medians in sweep/compare)
    #[arg(long, default_value_t = 3)]
    reps: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Grid size (interior nodes per axis)
    #[arg(long)]
    n: String,
    #[command(flatten)]
    solve: SolveArgs,
    /// Also write the final iterate as solution.csv
    #[arg(long)]
    dump_solution: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Comma-separated grid sizes (at least two)
    #[arg(long)]
    n: String,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Comma-separated grid sizes
    #[arg(long)]
    n: String,
    #[command(flatten)]
    solve: SolveArgs,
}

fn parse_mu(s: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        anyhow::bail!("--mu expects \"x,y\", got '{s}'");
    }
    Ok((parts[0].trim().parse()?, parts[1].trim().parse()?))
}

fn parse_n_list(s: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let n: usize = part.trim().parse().map_err(|_| {
            anyhow::anyhow!("--n expects positive integers, got '{}'", part.trim())
        })?;
        if n == 0 {
            anyhow::bail!("--n entries must be positive");
        }
        out.push(n);
    }
    Ok(out)
}

fn case_spec(args: &CaseArgs) -> anyhow::Result<CaseSpec> {
    if !exec::CASE_NAMES.contains(&args.case.as_str()) {
        anyhow::bail!(
            "unknown case '{}', valid: {}",
            args.case,
            exec::CASE_NAMES.join(", ")
        );
    }
    Ok(CaseSpec {
        name: args.case.clone(),
        sigma: args.sigma,
        mu: parse_mu(&args.mu)?,
        eps_s: args.eps_s,
        l: args.l,
    })
}

fn solver_name(scheme: Scheme, arg: &Option<String>) -> anyhow::Result<String> {
    match (scheme, arg) {
        (Scheme::Lscheme, None) => Ok("pcg-mg".to_string()),
        (Scheme::Lscheme, Some(s)) => {
            s.parse::<SolverChoice>()
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            Ok(s.clone())
        }
        (Scheme::Newton, None) => Ok("cg".to_string()),
        (Scheme::Newton, Some(s)) if s == "cg" || s == "direct" => Ok(s.clone()),
        (Scheme::Newton, Some(s)) => {
            anyhow::bail!("newton supports solvers 'cg' and 'direct', got '{s}'")
        }
    }
}

fn experiment(
    case: CaseSpec,
    n: usize,
    scheme: Scheme,
    solver: String,
    args: &SolveArgs,
) -> Experiment {
    Experiment {
        case,
        n,
        scheme,
        solver,
        green_m: args.green_m,
        init: args.init.clone(),
        eta: args.eta,
        tol: args.tol,
        max_iters: args.max_iters,
        lambda_thresh: args.lambda_thresh,
        sign: args.sign.clone(),
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let ns = parse_n_list(&args.n)?;
    if ns.len() != 1 {
        anyhow::bail!("run expects a single --n value, got {:?}", ns);
    }
    let scheme: Scheme = args.solve.scheme.parse()?;
    let solver = solver_name(scheme, &args.solve.solver)?;
    parse_init(&args.solve.init)?;
    let spec = case_spec(&args.case)?;
    let exp = experiment(spec, ns[0], scheme, solver, &args.solve);
    // constructing the case early surfaces parameter errors as usage errors
    exp.case.build()?;
    let (report, wall_ms) = exp.execute()?;

    ensure_out_dir(&args.solve.out)?;
    write_report_json(&args.solve.out.join("report.json"), &exp, &report)?;
    write_history_csv(&args.solve.out.join("history.csv"), &report)?;
    if args.dump_solution {
        write_solution_csv(&args.solve.out.join("solution.csv"), &exp, &report)?;
    }
    let fmt = |v: Option<f64>| match v {
        Some(x) => format!("{x:.6e}"),
        None => "NA".to_string(),
    };
    println!(
        "status={} iterations={} error_l2={} error_l2_scaled={} error_inf={} wall_ms={:.3}",
        report.status.name(),
        report.iterations,
        fmt(report.error_l2),
        fmt(report.error_l2_scaled),
        fmt(report.error_inf),
        wall_ms
    );
    Ok(match report.status {
        SolveStatus::Converged | SolveStatus::Stagnated => ExitCode::SUCCESS,
        SolveStatus::MaxIters | SolveStatus::Diverged => ExitCode::from(2),
    })
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let ns = parse_n_list(&args.n)?;
    if ns.len() < 2 {
        anyhow::bail!("sweep expects at least two --n values, got {:?}", ns);
    }
    let schemes: Vec<Scheme> = args
        .solve
        .scheme
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<anyhow::Result<_>>()?;
    let spec = case_spec(&args.case)?;
    parse_init(&args.solve.init)?;

    let mut cells: Vec<Experiment> = Vec::new();
    for &n in &ns {
        for &scheme in &schemes {
            let solvers: Vec<String> = match &args.solve.solver {
                None => vec![solver_name(scheme, &None)?],
                Some(list) => list
                    .split(',')
                    .map(|s| solver_name(scheme, &Some(s.trim().to_string())))
                    .collect::<anyhow::Result<_>>()?,
            };
            for solver in solvers {
                cells.push(experiment(spec.clone(), n, scheme, solver, &args.solve));
            }
        }
    }

    let reps = args.solve.reps;
    let outcomes: Vec<CellOutcome> = match thread_pool()? {
        Some(pool) => pool.install(|| cells.par_iter().map(|e| run_cell(e, reps)).collect()),
        None => cells.par_iter().map(|e| run_cell(e, reps)).collect(),
    };

    ensure_out_dir(&args.solve.out)?;
    let path = args.solve.out.join("sweep.csv");
    let mut body = String::from(SWEEP_HEADER);
    body.push('\n');
    for (exp, outcome) in cells.iter().zip(&outcomes) {
        if let CellOutcome::Failed { message, .. } = outcome {
            eprintln!(
                "cell n={} scheme={} solver={}: {message}",
                exp.n,
                exp.scheme.name(),
                exp.solver
            );
        }
        body.push_str(&sweep_row(exp.n, exp.scheme, &exp.solver, outcome));
        body.push('\n');
    }
    std::fs::write(&path, body)?;
    println!("wrote {} ({} cells)", path.display(), cells.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<ExitCode> {
    let ns = parse_n_list(&args.n)?;
    let spec = case_spec(&args.case)?;
    parse_init(&args.solve.init)?;
    let ls_solver = solver_name(Scheme::Lscheme, &args.solve.solver)?;
    let reps = args.solve.reps;

    struct Row {
        n: usize,
        lscheme: CellOutcome,
        newton: CellOutcome,
        cg_pre: Option<f64>,
        cg_unpre: Option<f64>,
    }

    let jobs: Vec<usize> = ns.clone();
    let spec_ref = &spec;
    let solve_ref = &args.solve;
    let ls_solver_ref = &ls_solver;
    let compute = |n: usize| -> Row {
        let ls = run_cell(
            &experiment(
                spec_ref.clone(),
                n,
                Scheme::Lscheme,
                ls_solver_ref.clone(),
                solve_ref,
            ),
            reps,
        );
        let newton = run_cell(
            &experiment(spec_ref.clone(), n, Scheme::Newton, "cg".to_string(), solve_ref),
            reps,
        );
        // Table-style mean inner CG iteration counts, with multigrid
        // preconditioning and without
        let pre_outcome = if ls_solver_ref == "pcg-mg" {
            None
        } else {
            Some(run_cell(
                &experiment(
                    spec_ref.clone(),
                    n,
                    Scheme::Lscheme,
                    "pcg-mg".into(),
                    solve_ref,
                ),
                1,
            ))
        };
        let unpre = run_cell(
            &experiment(spec_ref.clone(), n, Scheme::Lscheme, "cg".into(), solve_ref),
            1,
        );
        let mean_of = |o: &CellOutcome| match o {
            CellOutcome::Solved { report, .. } => report.mean_inner_iters(),
            CellOutcome::Failed { .. } => None,
        };
        let cg_pre = match &pre_outcome {
            None => mean_of(&ls),
            Some(o) => mean_of(o),
        };
        let cg_unpre = mean_of(&unpre);
        Row {
            n,
            lscheme: ls,
            newton,
            cg_pre,
            cg_unpre,
        }
    };
    let rows: Vec<Row> = match thread_pool()? {
        Some(pool) => pool.install(|| jobs.par_iter().map(|&n| compute(n)).collect()),
        None => jobs.par_iter().map(|&n| compute(n)).collect(),
    };

    ensure_out_dir(&args.solve.out)?;
    let path = args.solve.out.join("compare.csv");
    let mut body = String::from(COMPARE_HEADER);
    body.push('\n');
    let side = |o: &CellOutcome| -> (String, String, String) {
        match o {
            CellOutcome::Solved { report, wall_ms } => (
                report.status.name().to_string(),
                report.iterations.to_string(),
                format!("{wall_ms:.3}"),
            ),
            CellOutcome::Failed { kind, .. } => (kind.to_string(), "NA".into(), "NA".into()),
        }
    };
    let fmt_mean = |v: Option<f64>| match v {
        Some(x) => format!("{x:e}"),
        None => "NA".to_string(),
    };
    for row in &rows {
        let (ls_s, ls_i, ls_w) = side(&row.lscheme);
        let (nw_s, nw_i, nw_w) = side(&row.newton);
        body.push_str(&format!(
            "{},{ls_s},{ls_i},{ls_w},{nw_s},{nw_i},{nw_w},{},{}\n",
            row.n,
            fmt_mean(row.cg_pre),
            fmt_mean(row.cg_unpre)
        ));
    }
    std::fs::write(&path, body)?;
    println!("wrote {} ({} grid sizes)", path.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
