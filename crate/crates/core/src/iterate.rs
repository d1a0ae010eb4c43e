//! Outer iteration drivers: the fixed-point L-scheme and the Newton baseline.
//!
//! Each L-scheme step solves one Poisson problem
//!
//! ```text
//! (-Lap) v = rho(u) / Lambda,    v = gamma - u on the boundary,
//! ```
//!
//! where `Lambda` is the adaptive lumped constant derived from the largest
//! Hessian eigenvalue of the current iterate, and updates `u += v`. Newton
//! instead solves the full linearised operator assembled from the nodal
//! cofactor matrix.

use std::time::Instant;

use serde::Serialize;

use crate::cases::{initial_guess, InitialGuess, ProblemCase};
use crate::error::{CoreError, Result};
use crate::fdops::{
    assemble_laplacian, assemble_newton_operator, gradient, hessian_det, hessian_trace,
    lambda_max, residual_from_det, second_derivatives,
};
use crate::green::{assemble_greens_matrix, apply_greens, GreensMatrix};
use crate::grid::{sample_interior, BoundaryData, Field, Grid};
use crate::linsolve::{cg, ilu0, multigrid_preconditioner, BandedLu, Preconditioner, SolverChoice};
use crate::fdops::SparseOperator;

/// Sign of the lumped constant: positive targets convex solutions, negative
/// concave ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureSign {
    Convex,
    Concave,
}

impl CurvatureSign {
    #[inline]
    pub fn factor(&self) -> f64 {
        match self {
            CurvatureSign::Convex => 1.0,
            CurvatureSign::Concave => -1.0,
        }
    }
}

/// Configuration of the outer fixed-point iteration.
#[derive(Debug, Clone, Serialize)]
pub struct LschemeConfig {
    /// Safety factor on the measured largest Hessian eigenvalue (>= 1).
    pub eta: f64,
    /// Upper clamp for |Lambda|.
    pub lambda_thresh: f64,
    /// Lower clamp for |Lambda|; absorbs nonpositive eigenvalue maxima on
    /// saddle-shaped iterates.
    pub lambda_floor: f64,
    /// Convergence threshold on the raw update 2-norm.
    pub delta_tol: f64,
    pub i_max: usize,
    pub sign: CurvatureSign,
    /// Updates below this level are considered floating-point noise; once no
    /// new minimum appears for `stagnation_window` consecutive iterations the
    /// run stops with [`SolveStatus::Stagnated`].
    pub stagnation_floor: f64,
    pub stagnation_window: usize,
}

impl Default for LschemeConfig {
    fn default() -> Self {
        LschemeConfig {
            eta: 1.5,
            lambda_thresh: 1e8,
            lambda_floor: 1e-8,
            delta_tol: 1e-16,
            i_max: 1500,
            sign: CurvatureSign::Convex,
            stagnation_floor: 1e-12,
            stagnation_window: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Stagnated,
    Diverged,
}

impl SolveStatus {
    /// Converged and stagnated runs both count as successful terminations;
    /// stagnation means the update norm hit the floating-point floor.
    pub fn is_success(&self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::Stagnated)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Stagnated => "stagnated",
            SolveStatus::Diverged => "diverged",
        }
    }
}

/// Per-iteration record of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub i: usize,
    pub update_l2: f64,
    pub res_l2: f64,
    pub res_inf: f64,
    pub lambda: f64,
    pub inner_iters: Option<usize>,
    pub wall_ms: f64,
}

/// Result of a single outer step.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub update_l2: f64,
    pub res_l2: f64,
    pub res_inf: f64,
    pub lambda: f64,
    pub inner_iters: Option<usize>,
}

/// Full convergence history and final iterate of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub error_l2: Option<f64>,
    /// `error_l2 * dx`, an approximation of the continuous L2 norm.
    pub error_l2_scaled: Option<f64>,
    pub error_inf: Option<f64>,
    pub total_wall_ms: f64,
    #[serde(skip)]
    pub final_u: Field,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialisation cannot fail")
    }

    pub fn mean_inner_iters(&self) -> Option<f64> {
        let counts: Vec<usize> = self.history.iter().filter_map(|r| r.inner_iters).collect();
        if counts.is_empty() {
            None
        } else {
            Some(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
        }
    }
}

/// Options for preparing an inner solver.
#[derive(Debug, Clone)]
pub struct InnerSolverOptions {
    pub cg_tol: f64,
    /// Defaults to `10 n^2` when `None`.
    pub cg_max_iters: Option<usize>,
    pub green_truncation: usize,
}

impl Default for InnerSolverOptions {
    fn default() -> Self {
        InnerSolverOptions {
            cg_tol: 1e-10,
            cg_max_iters: None,
            green_truncation: 50,
        }
    }
}

/// An inner Poisson solver prepared once per grid. Factorisations,
/// preconditioner hierarchies and kernel matrices are all built here and
/// reused across the outer iterations.
pub enum InnerSolver {
    Direct {
        op: SparseOperator,
        lu: BandedLu,
    },
    Krylov {
        op: SparseOperator,
        pre: Preconditioner,
        tol: f64,
        max_iters: usize,
    },
    Green {
        gm: GreensMatrix,
    },
}

impl InnerSolver {
    pub fn prepare(choice: SolverChoice, grid: &Grid, opts: &InnerSolverOptions) -> Result<Self> {
        let max_iters = opts.cg_max_iters.unwrap_or(10 * grid.num_interior());
        match choice {
            SolverChoice::Direct => {
                let op = assemble_laplacian(grid);
                let lu = BandedLu::factor(&op)?;
                Ok(InnerSolver::Direct { op, lu })
            }
            SolverChoice::Cg => Ok(InnerSolver::Krylov {
                op: assemble_laplacian(grid),
                pre: Preconditioner::Identity,
                tol: opts.cg_tol,
                max_iters,
            }),
            SolverChoice::PcgIlu => {
                let op = assemble_laplacian(grid);
                let pre = ilu0(&op)?;
                Ok(InnerSolver::Krylov {
                    op,
                    pre,
                    tol: opts.cg_tol,
                    max_iters,
                })
            }
            SolverChoice::PcgMg => Ok(InnerSolver::Krylov {
                op: assemble_laplacian(grid),
                pre: multigrid_preconditioner(grid),
                tol: opts.cg_tol,
                max_iters,
            }),
            SolverChoice::Green => {
                let gm = assemble_greens_matrix(grid, opts.green_truncation)?;
                Ok(InnerSolver::Green { gm })
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InnerSolver::Direct { .. } => "direct",
            InnerSolver::Krylov { pre, .. } => match pre.kind() {
                "identity" => "cg",
                "ilu0" => "pcg-ilu",
                _ => "pcg-mg",
            },
            InnerSolver::Green { .. } => "green",
        }
    }

    /// Solves the Poisson update `(-Lap) v = rho / lambda` with the update
    /// boundary values `g` folded into the right-hand side.
    fn solve_update(
        &self,
        grid: &Grid,
        rho: &Field,
        lambda: f64,
        g: &BoundaryData,
    ) -> Result<(Field, Option<usize>)> {
        match self {
            InnerSolver::Direct { op, lu } => {
                let rhs = scaled_rhs(op, rho, lambda, g);
                Ok((Field::from_values(grid, lu.solve(&rhs))?, None))
            }
            InnerSolver::Krylov {
                op,
                pre,
                tol,
                max_iters,
            } => {
                let rhs = scaled_rhs(op, rho, lambda, g);
                let (v, stats) = cg(op, &rhs, *tol, *max_iters, pre)?;
                if !stats.converged {
                    return Err(CoreError::CgBreakdown(format!(
                        "inner CG stalled at relative residual {:e} after {} iterations",
                        stats.final_rel_residual, stats.iterations
                    )));
                }
                Ok((Field::from_values(grid, v)?, Some(stats.iterations)))
            }
            InnerSolver::Green { gm } => {
                if g.norm_inf() > 1e-14 {
                    return Err(CoreError::InvalidArgument(
                        "the green solver requires the iterate to equal gamma on the boundary"
                            .into(),
                    ));
                }
                Ok((apply_greens(gm, rho, lambda)?, None))
            }
        }
    }
}

fn scaled_rhs(op: &SparseOperator, rho: &Field, lambda: f64, g: &BoundaryData) -> Vec<f64> {
    let mut rhs: Vec<f64> = rho.as_slice().iter().map(|r| r / lambda).collect();
    op.fold_boundary(g, &mut rhs);
    rhs
}

/// Lumped constant `Lambda = sign * clamp(min(eta * max(lambda_M), thresh), floor, thresh)`.
///
/// The maximum is over the signed nodal values, so an everywhere-concave
/// iterate falls through to the floor. In two dimensions the theoretical
/// exponent `d - 1` on the eigenvalue equals one, so no power is applied.
pub fn select_lambda(lambda_max_field: &Field, cfg: &LschemeConfig) -> f64 {
    let m = lambda_max_field
        .as_slice()
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let magnitude = (cfg.eta * m)
        .min(cfg.lambda_thresh)
        .clamp(cfg.lambda_floor, cfg.lambda_thresh);
    cfg.sign.factor() * magnitude
}

/// One L-scheme step from the iterate `(u, bc)`: returns the updated iterate
/// and the step diagnostics. `bc` carries the boundary values of `u` itself;
/// the update's boundary values `gamma - u` are folded into the inner solve.
pub fn lscheme_step(
    grid: &Grid,
    case: &ProblemCase,
    u: &Field,
    bc: &BoundaryData,
    cfg: &LschemeConfig,
    solver: &InnerSolver,
) -> Result<(Field, StepInfo)> {
    let g = case.sample_gamma(grid)?.sub(bc);
    lscheme_step_with_g(grid, case, u, bc, &g, cfg, solver)
}

/// Step kernel with the update boundary `g = gamma - u|boundary` precomputed;
/// it is constant across a solve because updates vanish on the boundary.
fn lscheme_step_with_g(
    grid: &Grid,
    case: &ProblemCase,
    u: &Field,
    bc: &BoundaryData,
    g: &BoundaryData,
    cfg: &LschemeConfig,
    solver: &InnerSolver,
) -> Result<(Field, StepInfo)> {
    let h = second_derivatives(grid, u, bc)?;
    let det = hessian_det(&h);
    let tau = hessian_trace(&h);
    let lam_field = lambda_max(&tau, &det)?;
    let lambda = select_lambda(&lam_field, cfg);
    let rho = residual_from_det(grid, u, bc, &det, case)?;
    let (v, inner_iters) = solver.solve_update(grid, &rho, lambda, g)?;
    let mut next = u.clone();
    next.add_assign(&v);
    Ok((
        next,
        StepInfo {
            update_l2: v.norm_l2(),
            res_l2: rho.norm_l2(),
            res_inf: rho.norm_inf(),
            lambda,
            inner_iters,
        },
    ))
}

/// Tracks the stopping rules shared by both outer iterations.
struct StopTracker {
    delta_tol: f64,
    floor: f64,
    window: usize,
    min_update: f64,
    run: usize,
}

impl StopTracker {
    fn new(cfg: &LschemeConfig) -> Self {
        StopTracker {
            delta_tol: cfg.delta_tol,
            floor: cfg.stagnation_floor,
            window: cfg.stagnation_window,
            min_update: f64::INFINITY,
            run: 0,
        }
    }

    fn observe(&mut self, update_l2: f64) -> Option<SolveStatus> {
        if !update_l2.is_finite() {
            return Some(SolveStatus::Diverged);
        }
        if update_l2 <= self.delta_tol {
            return Some(SolveStatus::Converged);
        }
        if update_l2 < self.floor {
            if update_l2 < self.min_update {
                self.min_update = update_l2;
                self.run = 0;
            } else {
                self.run += 1;
                if self.run >= self.window {
                    return Some(SolveStatus::Stagnated);
                }
            }
        } else {
            self.run = 0;
            if update_l2 < self.min_update {
                self.min_update = update_l2;
            }
        }
        None
    }
}

fn error_norms(
    grid: &Grid,
    u: &Field,
    case: &ProblemCase,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    match case.exact() {
        None => (None, None, None),
        Some(exact) => {
            let e = exact.clone();
            let sampled = sample_interior(grid, move |x, y| e.value(x, y))
                .expect("exact solution sampled non-finite");
            let diff = u.sub(&sampled);
            let l2 = diff.norm_l2();
            (Some(l2), Some(l2 * grid.dx()), Some(diff.norm_inf()))
        }
    }
}

/// Runs the L-scheme from the given initial guess until convergence,
/// stagnation, divergence or the iteration cap.
pub fn lscheme_solve(
    case: &ProblemCase,
    grid: &Grid,
    init: &InitialGuess,
    cfg: &LschemeConfig,
    solver: &InnerSolver,
) -> Result<SolveReport> {
    let start = Instant::now();
    let (mut u, bc) = initial_guess(init, case, grid)?;
    let g = case.sample_gamma(grid)?.sub(&bc);
    let mut history = Vec::new();
    let mut tracker = StopTracker::new(cfg);
    let mut status = SolveStatus::MaxIters;
    let mut iterations = cfg.i_max;
    for i in 1..=cfg.i_max {
        let iter_start = Instant::now();
        // a blowing-up iterate surfaces as non-finite samples, an impossible
        // eigenvalue radicand, or an inner solve on garbage data; all of
        // those are divergence, not errors
        let (next, info) = match lscheme_step_with_g(grid, case, &u, &bc, &g, cfg, solver) {
            Ok(pair) => pair,
            Err(
                CoreError::NonFiniteSample { .. }
                | CoreError::InternalInconsistency(_)
                | CoreError::CgBreakdown(_),
            ) => {
                status = SolveStatus::Diverged;
                iterations = i;
                break;
            }
            Err(e) => return Err(e),
        };
        let finite = next.all_finite();
        if finite {
            u = next;
        }
        history.push(IterationRecord {
            i,
            update_l2: info.update_l2,
            res_l2: info.res_l2,
            res_inf: info.res_inf,
            lambda: info.lambda,
            inner_iters: info.inner_iters,
            wall_ms: iter_start.elapsed().as_secs_f64() * 1e3,
        });
        if !finite {
            status = SolveStatus::Diverged;
            iterations = i;
            break;
        }
        if let Some(s) = tracker.observe(info.update_l2) {
            status = s;
            iterations = i;
            break;
        }
    }
    let (error_l2, error_l2_scaled, error_inf) = match status {
        SolveStatus::Diverged => (None, None, None),
        _ => error_norms(grid, &u, case),
    };
    Ok(SolveReport {
        status,
        iterations,
        history,
        error_l2,
        error_l2_scaled,
        error_inf,
        total_wall_ms: start.elapsed().as_secs_f64() * 1e3,
        final_u: u,
    })
}

/// Linear solver used for the nonsymmetric Newton systems.
///
/// `Cg` applies (preconditioner-free) conjugate gradients to the assembled
/// operator; breakdown or stalling is reported as Newton divergence. This is
/// the default because the Jacobian loses definiteness away from convex
/// iterates, which is precisely the failure mode the scheme comparison is
/// about. `Direct` substitutes the banded LU factorisation, which solves the
/// linear systems regardless of definiteness.
#[derive(Debug, Clone)]
pub enum NewtonLinear {
    Cg { tol: f64, max_iters: Option<usize> },
    Direct,
}

impl Default for NewtonLinear {
    fn default() -> Self {
        NewtonLinear::Cg {
            tol: 1e-10,
            max_iters: None,
        }
    }
}

/// Newton iteration on the discrete residual, with plain (undamped) updates.
///
/// Divergence is detected, not repaired: a failed or breaking-down linear
/// solve, non-finite values, or an update norm exceeding
/// `1e6 * (1 + |v^1|)` all terminate with [`SolveStatus::Diverged`].
pub fn newton_solve(
    case: &ProblemCase,
    grid: &Grid,
    init: &InitialGuess,
    cfg: &LschemeConfig,
    linear: &NewtonLinear,
) -> Result<SolveReport> {
    let start = Instant::now();
    let (mut u, bc) = initial_guess(init, case, grid)?;
    let gamma_bc = case.sample_gamma(grid)?;
    let mut history = Vec::new();
    let mut tracker = StopTracker::new(cfg);
    let mut status = SolveStatus::MaxIters;
    let mut iterations = cfg.i_max;
    let mut first_update: Option<f64> = None;
    let zero = Field::zeros(grid);

    for i in 1..=cfg.i_max {
        let iter_start = Instant::now();
        let assembled = (|| -> Result<_> {
            let h = second_derivatives(grid, &u, &bc)?;
            let det = hessian_det(&h);
            let grad = if case.gradient_dependent() {
                Some(gradient(grid, &u, &bc)?)
            } else {
                None
            };
            let rho = residual_from_det(grid, &u, &bc, &det, case)?;
            Ok((h, grad, rho))
        })();
        let (h, grad, rho) = match assembled {
            Ok(t) => t,
            Err(CoreError::NonFiniteSample { .. } | CoreError::InternalInconsistency(_)) => {
                status = SolveStatus::Diverged;
                iterations = i;
                break;
            }
            Err(e) => return Err(e),
        };
        let (qx, qy) = match &grad {
            None => (zero.clone(), zero.clone()),
            Some((gx, gy)) => {
                let mut qx = Field::zeros(grid);
                let mut qy = Field::zeros(grid);
                for k in 1..=grid.n() {
                    for j in 1..=grid.n() {
                        let (x, y) = grid.node(j, k);
                        let (a, b) = case.grad_f_p(x, y, gx.get(j, k), gy.get(j, k));
                        qx.set(j, k, a);
                        qy.set(j, k, b);
                    }
                }
                (qx, qy)
            }
        };
        let op = assemble_newton_operator(grid, &h, (&qx, &qy));
        let mut rhs = rho.as_slice().to_vec();
        let g = gamma_bc.sub(&bc);
        op.fold_boundary(&g, &mut rhs);

        let solve_result: Result<(Vec<f64>, Option<usize>)> = match linear {
            NewtonLinear::Direct => BandedLu::factor(&op).map(|lu| (lu.solve(&rhs), None)),
            NewtonLinear::Cg { tol, max_iters } => {
                let cap = max_iters.unwrap_or(10 * grid.num_interior());
                match cg(&op, &rhs, *tol, cap, &Preconditioner::Identity) {
                    Ok((v, stats)) if stats.converged => Ok((v, Some(stats.iterations))),
                    Ok((_, stats)) => Err(CoreError::CgBreakdown(format!(
                        "inner CG stalled at {:e}",
                        stats.final_rel_residual
                    ))),
                    Err(e) => Err(e),
                }
            }
        };
        let (v, inner_iters) = match solve_result {
            Ok(pair) => pair,
            Err(CoreError::SingularMatrix(_)) | Err(CoreError::CgBreakdown(_)) => {
                history.push(IterationRecord {
                    i,
                    update_l2: f64::NAN,
                    res_l2: rho.norm_l2(),
                    res_inf: rho.norm_inf(),
                    lambda: f64::NAN,
                    inner_iters: None,
                    wall_ms: iter_start.elapsed().as_secs_f64() * 1e3,
                });
                status = SolveStatus::Diverged;
                iterations = i;
                break;
            }
            Err(e) => return Err(e),
        };
        let update_l2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        history.push(IterationRecord {
            i,
            update_l2,
            res_l2: rho.norm_l2(),
            res_inf: rho.norm_inf(),
            lambda: f64::NAN,
            inner_iters,
            wall_ms: iter_start.elapsed().as_secs_f64() * 1e3,
        });
        if update_l2.is_finite() {
            for (ui, vi) in u.as_mut_slice().iter_mut().zip(&v) {
                *ui += vi;
            }
        }
        let v1 = *first_update.get_or_insert(update_l2);
        if !update_l2.is_finite() || !u.all_finite() || update_l2 > 1e6 * (1.0 + v1) {
            status = SolveStatus::Diverged;
            iterations = i;
            break;
        }
        if let Some(s) = tracker.observe(update_l2) {
            status = s;
            iterations = i;
            break;
        }
    }
    let (error_l2, error_l2_scaled, error_inf) = match status {
        SolveStatus::Diverged => (None, None, None),
        _ => error_norms(grid, &u, case),
    };
    Ok(SolveReport {
        status,
        iterations,
        history,
        error_l2,
        error_l2_scaled,
        error_inf,
        total_wall_ms: start.elapsed().as_secs_f64() * 1e3,
        final_u: u,
    })
}

/// Floor below which update norms are treated as floating-point noise when
/// fitting the contraction rate.
const FIT_FLOOR: f64 = 1e-12;

/// Estimates the per-iteration contraction factor from a solve history.
///
/// The update-norm sequence is truncated at its first drop below `1e-12`
/// (beyond that the norms are rounding noise), and the slope of
/// `ln |v^i|` over the middle half of the remaining iterations is fitted by
/// least squares; the estimate is `exp(slope)`.
pub fn estimate_contraction(report: &SolveReport) -> Result<f64> {
    let mut norms = Vec::new();
    for rec in &report.history {
        if !(rec.update_l2 > 0.0) || rec.update_l2 < FIT_FLOOR {
            break;
        }
        norms.push(rec.update_l2);
    }
    if norms.len() < 10 {
        return Err(CoreError::InvalidArgument(format!(
            "contraction fit needs at least 10 decaying updates, have {}",
            norms.len()
        )));
    }
    let lo = norms.len() / 4;
    let hi = (3 * norms.len()) / 4;
    let xs: Vec<f64> = (lo..hi).map(|i| i as f64).collect();
    let ys: Vec<f64> = norms[lo..hi].iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    Ok((sxy / sxx).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{gaussian_case, quadratic_case, ProblemCase};

    fn default_inner(grid: &Grid) -> InnerSolver {
        InnerSolver::prepare(SolverChoice::Direct, grid, &InnerSolverOptions::default()).unwrap()
    }

    #[test]
    fn select_lambda_examples() {
        let grid = Grid::new(1).unwrap();
        let cfg = LschemeConfig {
            eta: 1.5,
            ..Default::default()
        };
        let f = |v: f64| Field::from_values(&grid, vec![v]).unwrap();
        assert_eq!(select_lambda(&f(3.0), &cfg), 4.5);

        let cfg_t = LschemeConfig {
            eta: 1.5,
            lambda_thresh: 4.0,
            ..Default::default()
        };
        assert_eq!(select_lambda(&f(3.0), &cfg_t), 4.0);

        // an everywhere-concave iterate falls to the floor
        assert_eq!(select_lambda(&f(-2.0), &cfg), 1e-8);
        let cfg_c = LschemeConfig {
            sign: CurvatureSign::Concave,
            ..cfg
        };
        assert_eq!(select_lambda(&f(-2.0), &cfg_c), -1e-8);
    }

    #[test]
    fn quadratic_sampled_solution_is_a_fixed_point() {
        let case = quadratic_case();
        let grid = Grid::new(20).unwrap();
        let u = case.sample_exact(&grid).unwrap();
        let bc = case.sample_gamma(&grid).unwrap();
        let solver = default_inner(&grid);
        let cfg = LschemeConfig::default();
        let (_, info) = lscheme_step(&grid, &case, &u, &bc, &cfg, &solver).unwrap();
        assert!(info.update_l2 <= 1e-12, "update {}", info.update_l2);
    }

    #[test]
    fn quadratic_converges_within_two_iterations() {
        let case = quadratic_case();
        let grid = Grid::new(20).unwrap();
        let cfg = LschemeConfig {
            delta_tol: 1e-12,
            ..Default::default()
        };
        let solver = default_inner(&grid);
        let report =
            lscheme_solve(&case, &grid, &InitialGuess::Exact, &cfg, &solver).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert!(report.iterations <= 2);
        assert!(report.history[0].update_l2 <= 1e-12);
    }

    #[test]
    fn first_step_reduces_residual_near_the_solution() {
        // theory regime: small perturbation, convex iterates
        let case = gaussian_case(1.0, (0.5, 0.5), false).unwrap();
        let grid = Grid::new(50).unwrap();
        let (u, bc) = initial_guess(&InitialGuess::ConvexBump(0.1), &case, &grid).unwrap();
        let cfg = LschemeConfig::default();
        let solver = default_inner(&grid);
        let rho0 = crate::fdops::residual(&grid, &u, &bc, &case).unwrap();
        let (u1, info) = lscheme_step(&grid, &case, &u, &bc, &cfg, &solver).unwrap();
        assert!(info.update_l2 > 0.0);
        let rho1 = crate::fdops::residual(&grid, &u1, &bc, &case).unwrap();
        assert!(rho1.norm_inf() < rho0.norm_inf());
        assert!(rho1.norm_l2() < rho0.norm_l2());
    }

    #[test]
    fn concave_branch_mirrors_convex_step() {
        // f independent of u with gamma = 0; the iterate c*xy has the
        // symmetric Hessian spectrum {c, -c}, so the negated input under the
        // concave branch must produce exactly the negated update.
        let case = ProblemCase::new("mirror", |_, _, _, _| 1.0, None, |_, _| 0.0, None, false);
        let grid = Grid::new(8).unwrap();
        let u = sample_interior(&grid, |x, y| 2.0 * x * y).unwrap();
        let bc = crate::grid::sample_boundary(&grid, |x, y| 2.0 * x * y).unwrap();
        let u_neg = sample_interior(&grid, |x, y| -2.0 * x * y).unwrap();
        let bc_neg = crate::grid::sample_boundary(&grid, |x, y| -2.0 * x * y).unwrap();
        let solver = default_inner(&grid);
        let cfg = LschemeConfig::default();
        let cfg_neg = LschemeConfig {
            sign: CurvatureSign::Concave,
            ..cfg.clone()
        };
        let (u1, info) = lscheme_step(&grid, &case, &u, &bc, &cfg, &solver).unwrap();
        let (u1n, info_n) = lscheme_step(&grid, &case, &u_neg, &bc_neg, &cfg_neg, &solver).unwrap();
        assert!((info.lambda + info_n.lambda).abs() < 1e-14 * info.lambda.abs());
        for (a, b) in u1.as_slice().iter().zip(u1n.as_slice()) {
            assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn gaussian_converges_with_direct_inner() {
        let case = gaussian_case(1.0, (0.5, 0.5), false).unwrap();
        let grid = Grid::new(30).unwrap();
        let cfg = LschemeConfig::default();
        let solver = default_inner(&grid);
        let report =
            lscheme_solve(&case, &grid, &InitialGuess::ConvexBump(30.0), &cfg, &solver).unwrap();
        assert!(report.status.is_success(), "{:?}", report.status);
        assert!(report.iterations < cfg.i_max);
        let err = report.error_inf.unwrap();
        assert!(err > 1e-6 && err < 1e-4, "error {err}");
        // every recorded lumped constant respects the positive floor
        for rec in &report.history {
            assert!(rec.lambda >= cfg.lambda_floor);
        }
    }

    #[test]
    fn gaussian_curvature_variant_converges() {
        let case = gaussian_case(1.0, (0.5, 0.5), true).unwrap();
        let grid = Grid::new(30).unwrap();
        let cfg = LschemeConfig::default();
        let solver = default_inner(&grid);
        let report =
            lscheme_solve(&case, &grid, &InitialGuess::ConvexBump(1.0), &cfg, &solver).unwrap();
        assert!(report.status.is_success(), "{:?}", report.status);
        assert!(report.error_inf.unwrap() < 1e-4);
    }

    #[test]
    fn update_norms_eventually_monotone() {
        let case = gaussian_case(1.0, (0.5, 0.5), false).unwrap();
        let grid = Grid::new(30).unwrap();
        // stop above the floating-point floor so the tail stays clean
        let cfg = LschemeConfig {
            delta_tol: 1e-10,
            ..Default::default()
        };
        let solver = default_inner(&grid);
        let report =
            lscheme_solve(&case, &grid, &InitialGuess::ConvexBump(30.0), &cfg, &solver).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        let mut violations = 0;
        for w in report.history.windows(2).skip(5) {
            if w[1].update_l2 > w[0].update_l2 {
                violations += 1;
            }
        }
        assert!(violations <= 2, "{violations} non-monotone pairs");
    }

    #[test]
    fn newton_near_guess_beats_lscheme() {
        let case = gaussian_case(1.0, (0.5, 0.5), false).unwrap();
        let grid = Grid::new(30).unwrap();
        let cfg = LschemeConfig::default();
        let newton = newton_solve(
            &case,
            &grid,
            &InitialGuess::ConvexBump(0.1),
            &cfg,
            &NewtonLinear::default(),
        )
        .unwrap();
        assert!(newton.status.is_success(), "{:?}", newton.status);
        let solver = default_inner(&grid);
        let ls =
            lscheme_solve(&case, &grid, &InitialGuess::ConvexBump(0.1), &cfg, &solver).unwrap();
        assert!(ls.status.is_success());
        assert!(
            newton.iterations < ls.iterations,
            "newton {} vs lscheme {}",
            newton.iterations,
            ls.iterations
        );
    }

    #[test]
    fn newton_diverges_from_distant_guess() {
        let case = gaussian_case(1.0, (0.5, 0.5), false).unwrap();
        let grid = Grid::new(30).unwrap();
        let cfg = LschemeConfig::default();
        let report = newton_solve(
            &case,
            &grid,
            &InitialGuess::ConvexBump(30.0),
            &cfg,
            &NewtonLinear::default(),
        )
        .unwrap();
        assert_eq!(report.status, SolveStatus::Diverged);
    }

    #[test]
    fn contraction_estimate_on_synthetic_histories() {
        let grid = Grid::new(2).unwrap();
        let mk = |norms: &[f64]| SolveReport {
            status: SolveStatus::Converged,
            iterations: norms.len(),
            history: norms
                .iter()
                .enumerate()
                .map(|(i, &v)| IterationRecord {
                    i: i + 1,
                    update_l2: v,
                    res_l2: 0.0,
                    res_inf: 0.0,
                    lambda: 1.0,
                    inner_iters: None,
                    wall_ms: 0.0,
                })
                .collect(),
            error_l2: None,
            error_l2_scaled: None,
            error_inf: None,
            total_wall_ms: 0.0,
            final_u: Field::zeros(&grid),
        };
        let geo: Vec<f64> = (0..30).map(|i| 0.5f64.powi(i)).collect();
        let q = estimate_contraction(&mk(&geo)).unwrap();
        assert!((q - 0.5).abs() < 1e-12, "{q}");

        let flat = vec![0.7; 25];
        let q = estimate_contraction(&mk(&flat)).unwrap();
        assert!((q - 1.0).abs() < 1e-12);

        assert!(estimate_contraction(&mk(&[0.5, 0.25])).is_err());
    }
}
