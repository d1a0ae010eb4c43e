//! Acceptance suite: one test per criterion, printing a PASS line when the
//! criterion holds at its stated tolerance.
//!
//! Expensive solves are shared through lazy statics so the suite stays within
//! a few minutes. Four tests assert reference targets that do not reproduce
//! under a faithful reimplementation; each carries its measured analysis in a
//! comment, fails honestly rather than loosening the assertion, and is paired
//! with a `*_counterpart` test demonstrating the reproducible form of the
//! same behaviour.

use std::sync::LazyLock;

use ma_core::{
    assemble_greens_matrix, assemble_laplacian, cg, direct_solve, estimate_contraction,
    gaussian_case, lambda_max, multigrid_preconditioner, oscillating_case, quadratic_case,
    sample_boundary, sample_interior, second_derivatives, CoreError, Field, Grid, InitialGuess,
    InnerSolver, InnerSolverOptions, LschemeConfig, NewtonLinear, Preconditioner, ProblemCase,
    SolveReport, SolveStatus, SolverChoice,
};

fn gaussian() -> ProblemCase {
    gaussian_case(1.0, (0.5, 0.5), false).unwrap()
}

fn run_lscheme(n: usize, c1: f64, choice: SolverChoice) -> SolveReport {
    let case = gaussian();
    let grid = Grid::new(n).unwrap();
    let solver = InnerSolver::prepare(choice, &grid, &InnerSolverOptions::default()).unwrap();
    ma_core::lscheme_solve(
        &case,
        &grid,
        &InitialGuess::ConvexBump(c1),
        &LschemeConfig::default(),
        &solver,
    )
    .unwrap()
}

static C30_MG_25: LazyLock<SolveReport> = LazyLock::new(|| run_lscheme(25, 30.0, SolverChoice::PcgMg));
static C30_MG_50: LazyLock<SolveReport> = LazyLock::new(|| run_lscheme(50, 30.0, SolverChoice::PcgMg));
static C30_MG_100: LazyLock<SolveReport> =
    LazyLock::new(|| run_lscheme(100, 30.0, SolverChoice::PcgMg));
static C30_MG_200: LazyLock<SolveReport> =
    LazyLock::new(|| run_lscheme(200, 30.0, SolverChoice::PcgMg));
static C01_MG_30: LazyLock<SolveReport> = LazyLock::new(|| run_lscheme(30, 0.1, SolverChoice::PcgMg));
static C01_MG_50: LazyLock<SolveReport> = LazyLock::new(|| run_lscheme(50, 0.1, SolverChoice::PcgMg));
static C01_MG_100: LazyLock<SolveReport> =
    LazyLock::new(|| run_lscheme(100, 0.1, SolverChoice::PcgMg));
static C01_MG_200: LazyLock<SolveReport> =
    LazyLock::new(|| run_lscheme(200, 0.1, SolverChoice::PcgMg));
static C30_CG_50: LazyLock<SolveReport> = LazyLock::new(|| run_lscheme(50, 30.0, SolverChoice::Cg));
static C30_CG_100: LazyLock<SolveReport> = LazyLock::new(|| run_lscheme(100, 30.0, SolverChoice::Cg));
static C30_CG_200: LazyLock<SolveReport> = LazyLock::new(|| run_lscheme(200, 30.0, SolverChoice::Cg));
static C30_DIRECT_50: LazyLock<SolveReport> =
    LazyLock::new(|| run_lscheme(50, 30.0, SolverChoice::Direct));
static C30_ILU_50: LazyLock<SolveReport> =
    LazyLock::new(|| run_lscheme(50, 30.0, SolverChoice::PcgIlu));
static C30_GREEN_50: LazyLock<SolveReport> =
    LazyLock::new(|| run_lscheme(50, 30.0, SolverChoice::Green));

#[test]
fn acceptance_01_fixed_point_consistency() {
    // quadratic case, exact initial guess, n = 20: the sampled solution is a
    // discrete fixed point, so the first update must already be at rounding
    // level and the run converges within two iterations at delta_tol 1e-12
    let case = quadratic_case();
    let grid = Grid::new(20).unwrap();
    let cfg = LschemeConfig {
        delta_tol: 1e-12,
        ..Default::default()
    };
    let solver =
        InnerSolver::prepare(SolverChoice::Direct, &grid, &InnerSolverOptions::default()).unwrap();
    let report = ma_core::lscheme_solve(&case, &grid, &InitialGuess::Exact, &cfg, &solver).unwrap();
    let first = report.history[0].update_l2;
    assert!(first <= 1e-12, "first update {first}");
    assert_eq!(report.status, SolveStatus::Converged);
    assert!(report.iterations <= 2, "{} iterations", report.iterations);
    println!(
        "criterion 1: PASS - fixed-point consistency (first update {first:.2e}, {} iteration(s))",
        report.iterations
    );
}

#[test]
fn acceptance_02_discretisation_order() {
    for r in [&*C30_MG_25, &*C30_MG_50, &*C30_MG_100] {
        assert!(r.status.is_success(), "{:?}", r.status);
    }
    let e25 = C30_MG_25.error_inf.unwrap();
    let e50 = C30_MG_50.error_inf.unwrap();
    let e100 = C30_MG_100.error_inf.unwrap();
    let r1 = e25 / e50;
    let r2 = e50 / e100;
    assert!((3.0..=5.0).contains(&r1), "ratio 25->50 is {r1}");
    assert!((3.0..=5.0).contains(&r2), "ratio 50->100 is {r2}");
    println!(
        "criterion 2: PASS - max-norm error {e25:.3e} -> {e50:.3e} -> {e100:.3e} \
         (ratios {r1:.2}, {r2:.2} in [3, 5])"
    );
}

fn spread_of(counts: &[usize]) -> f64 {
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - mean).abs() / mean)
        .fold(0.0, f64::max)
}

#[test]
fn acceptance_03_mesh_robust_iterations_c1_30() {
    // As stated: convex bump C1 = 30, n in {50, 100, 200}, counts within 20%
    // of their mean. Does not reproduce: the adaptive lumped constant tracks
    // the large initial Hessian through a transient whose length grows with
    // n (measured roughly [272, 428, 759] here and in an independent
    // replication). The counterpart test below shows the mesh-robust count
    // for the near-solution guess the comparison figures actually use.
    let counts = [
        C30_MG_50.iterations,
        C30_MG_100.iterations,
        C30_MG_200.iterations,
    ];
    for r in [&*C30_MG_50, &*C30_MG_100, &*C30_MG_200] {
        assert!(r.status.is_success(), "{:?}", r.status);
    }
    let spread = spread_of(&counts);
    assert!(
        spread <= 0.20,
        "iteration counts {counts:?} deviate {:.0}% from their mean",
        spread * 100.0
    );
    println!("criterion 3: PASS - outer iterations {counts:?} within 20% of mean");
}

#[test]
fn acceptance_03_counterpart_mesh_robust_iterations_c1_0_1() {
    let counts = [
        C01_MG_50.iterations,
        C01_MG_100.iterations,
        C01_MG_200.iterations,
    ];
    for r in [&*C01_MG_50, &*C01_MG_100, &*C01_MG_200] {
        assert!(r.status.is_success(), "{:?}", r.status);
    }
    let spread = spread_of(&counts);
    assert!(
        spread <= 0.20,
        "iteration counts {counts:?} deviate {:.0}% from their mean",
        spread * 100.0
    );
    println!(
        "criterion 3 (counterpart, C1 = 0.1): PASS - outer iterations {counts:?} \
         within {:.0}% of mean",
        spread * 100.0
    );
}

#[test]
fn acceptance_04a_lscheme_robust_to_convex_bump() {
    assert!(
        C30_MG_50.status.is_success(),
        "C1 = 30 at n = 50: {:?}",
        C30_MG_50.status
    );
    println!(
        "criterion 4a (convex): PASS - L-scheme, C1 = 30, n = 50: {} after {} iterations",
        C30_MG_50.status.name(),
        C30_MG_50.iterations
    );
}

#[test]
fn acceptance_04a_lscheme_saddle_guess() {
    // As stated: saddle bump C2 = 10 at n = 50 converges. Does not reproduce:
    // the corner cross-curvature of the saddle guess makes the determinant
    // residual feed the trace error and the iteration blows up for every
    // lumped-constant policy tried (eta up to 50, thresholds 2..1e8, both
    // signs, every inner solver). The basin boundary sits near C2 = 4.
    let case = gaussian();
    let grid = Grid::new(50).unwrap();
    let solver =
        InnerSolver::prepare(SolverChoice::PcgMg, &grid, &InnerSolverOptions::default()).unwrap();
    let report = ma_core::lscheme_solve(
        &case,
        &grid,
        &InitialGuess::SaddleBump(10.0),
        &LschemeConfig::default(),
        &solver,
    )
    .unwrap();
    assert!(
        report.status.is_success(),
        "saddle C2 = 10 at n = 50: {} after {} iterations",
        report.status.name(),
        report.iterations
    );
    println!(
        "criterion 4a (saddle): PASS - saddle C2 = 10, n = 50: {}",
        report.status.name()
    );
}

#[test]
fn acceptance_04a_counterpart_saddle_within_basin() {
    let case = gaussian();
    let grid = Grid::new(50).unwrap();
    let solver =
        InnerSolver::prepare(SolverChoice::PcgMg, &grid, &InnerSolverOptions::default()).unwrap();
    let report = ma_core::lscheme_solve(
        &case,
        &grid,
        &InitialGuess::SaddleBump(3.0),
        &LschemeConfig::default(),
        &solver,
    )
    .unwrap();
    assert!(report.status.is_success(), "{:?}", report.status);
    assert!(report.error_inf.unwrap() < 1e-4);
    println!(
        "criterion 4a (counterpart, saddle C2 = 3): PASS - {} after {} iterations",
        report.status.name(),
        report.iterations
    );
}

#[test]
fn acceptance_04b_newton_converges_near_solution() {
    let case = gaussian();
    let grid = Grid::new(30).unwrap();
    let newton = ma_core::newton_solve(
        &case,
        &grid,
        &InitialGuess::ConvexBump(0.1),
        &LschemeConfig::default(),
        &NewtonLinear::default(),
    )
    .unwrap();
    assert!(newton.status.is_success(), "{:?}", newton.status);
    let ls = &*C01_MG_30;
    assert!(ls.status.is_success(), "{:?}", ls.status);
    assert!(
        newton.iterations < ls.iterations,
        "newton {} vs lscheme {}",
        newton.iterations,
        ls.iterations
    );
    println!(
        "criterion 4b: PASS - newton {} iterations < lscheme {} at n = 30, C1 = 0.1",
        newton.iterations, ls.iterations
    );
}

#[test]
fn acceptance_04c_newton_diverges_from_distant_guess() {
    let case = gaussian();
    let grid = Grid::new(30).unwrap();
    let newton = ma_core::newton_solve(
        &case,
        &grid,
        &InitialGuess::ConvexBump(30.0),
        &LschemeConfig::default(),
        &NewtonLinear::default(),
    )
    .unwrap();
    assert_eq!(newton.status, SolveStatus::Diverged);
    println!(
        "criterion 4c: PASS - newton diverged from C1 = 30 at n = 30 \
         (after {} iteration(s))",
        newton.iterations
    );
}

#[test]
fn acceptance_04d_newton_fails_on_fine_mesh() {
    // As stated: Newton with C1 = 0.1 must fail (diverged or max_iters) at
    // n = 100 while the L-scheme converges. Does not reproduce: the discrete
    // residual is quadratic in the iterate, the guess is within the Newton
    // basin, and the Jacobian stays resolvable, so Newton reaches the
    // floating-point floor in a handful of steps at every tested mesh
    // (conjugate gradient, preconditioned and direct inner solves alike).
    let case = gaussian();
    let grid = Grid::new(100).unwrap();
    let newton = ma_core::newton_solve(
        &case,
        &grid,
        &InitialGuess::ConvexBump(0.1),
        &LschemeConfig::default(),
        &NewtonLinear::default(),
    )
    .unwrap();
    assert!(C01_MG_100.status.is_success(), "{:?}", C01_MG_100.status);
    assert!(
        matches!(newton.status, SolveStatus::Diverged | SolveStatus::MaxIters),
        "newton at n = 100 reached '{}' in {} iterations instead of failing",
        newton.status.name(),
        newton.iterations
    );
    println!("criterion 4d: PASS - newton fails at n = 100 while the L-scheme converges");
}

#[test]
fn acceptance_05_preconditioning_payoff() {
    for r in [&*C30_CG_50, &*C30_CG_100, &*C30_CG_200] {
        assert!(r.status.is_success(), "{:?}", r.status);
    }
    let cg_means = [
        C30_CG_50.mean_inner_iters().unwrap(),
        C30_CG_100.mean_inner_iters().unwrap(),
        C30_CG_200.mean_inner_iters().unwrap(),
    ];
    let mg_means = [
        C30_MG_50.mean_inner_iters().unwrap(),
        C30_MG_100.mean_inner_iters().unwrap(),
        C30_MG_200.mean_inner_iters().unwrap(),
    ];
    assert!(
        mg_means[1] <= cg_means[1] / 3.0,
        "at n = 100: multigrid mean {} vs unpreconditioned {}",
        mg_means[1],
        cg_means[1]
    );
    assert!(
        cg_means[0] < cg_means[1] && cg_means[1] < cg_means[2],
        "unpreconditioned means {cg_means:?} not growing"
    );
    assert!(
        mg_means[2] <= 2.0 * mg_means[0],
        "preconditioned means {mg_means:?} grew more than 2x"
    );
    println!(
        "criterion 5: PASS - mean CG iterations without preconditioning {:.0}/{:.0}/{:.0}, \
         with multigrid {:.1}/{:.1}/{:.1} (n = 50/100/200)",
        cg_means[0], cg_means[1], cg_means[2], mg_means[0], mg_means[1], mg_means[2]
    );
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn acceptance_06_backend_equivalence() {
    let fd: [&SolveReport; 4] = [&C30_DIRECT_50, &C30_CG_50, &C30_ILU_50, &C30_MG_50];
    for r in fd {
        assert!(r.status.is_success(), "{:?}", r.status);
    }
    for i in 0..fd.len() {
        for j in i + 1..fd.len() {
            let d = max_diff(&fd[i].final_u, &fd[j].final_u);
            assert!(d <= 1e-8, "backends {i} and {j} differ by {d}");
            let di = fd[i].iterations as i64 - fd[j].iterations as i64;
            assert!(
                di.abs() <= 1,
                "iteration counts differ: {} vs {}",
                fd[i].iterations,
                fd[j].iterations
            );
        }
    }
    assert!(C30_GREEN_50.status.is_success(), "{:?}", C30_GREEN_50.status);
    let dg = max_diff(&C30_GREEN_50.final_u, &C30_DIRECT_50.final_u);
    assert!(dg <= 1e-3, "green vs direct differ by {dg}");

    let grid200 = Grid::new(200).unwrap();
    let cap = InnerSolver::prepare(
        SolverChoice::Green,
        &grid200,
        &InnerSolverOptions::default(),
    );
    assert!(matches!(cap, Err(CoreError::CapacityExceeded(_))));
    println!(
        "criterion 6: PASS - four FD backends agree to 1e-8 (green to {dg:.2e}); \
         green at n = 200 reports the capacity error"
    );
}

/// Least-squares fit of `ln v_i` over the middle half of the pre-floor
/// iterations; returns (contraction rate, R^2).
fn fit_middle(report: &SolveReport) -> (f64, f64) {
    let mut norms = Vec::new();
    for rec in &report.history {
        if !(rec.update_l2 > 0.0) || rec.update_l2 < 1e-12 {
            break;
        }
        norms.push(rec.update_l2);
    }
    let lo = norms.len() / 4;
    let hi = 3 * norms.len() / 4;
    let xs: Vec<f64> = (lo..hi).map(|i| i as f64).collect();
    let ys: Vec<f64> = norms[lo..hi].iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = my + slope * (x - mx);
            (y - fit) * (y - fit)
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    (slope.exp(), 1.0 - ss_res / ss_tot)
}

#[test]
fn acceptance_07_linear_convergence() {
    let q30 = estimate_contraction(&C30_MG_50).unwrap();
    let q01 = estimate_contraction(&C01_MG_50).unwrap();
    assert!(q30 > 0.0 && q30 < 1.0, "q = {q30}");
    assert!(q01 > 0.0 && q01 < 1.0, "q = {q01}");
    let (_, r2_30) = fit_middle(&C30_MG_50);
    let (_, r2_01) = fit_middle(&C01_MG_50);
    assert!(r2_30 >= 0.95, "R^2 = {r2_30} for the C1 = 30 run");
    assert!(r2_01 >= 0.95, "R^2 = {r2_01} for the C1 = 0.1 run");
    println!(
        "criterion 7: PASS - contraction estimates {q30:.3} / {q01:.3} \
         with R^2 {r2_30:.3} / {r2_01:.3}"
    );
}

fn run_oscillating(eps: f64, l: u32, n: usize, c1: f64) -> SolveReport {
    let case = oscillating_case(1.0, (0.5, 0.5), eps, l).unwrap();
    let grid = Grid::new(n).unwrap();
    let solver =
        InnerSolver::prepare(SolverChoice::PcgMg, &grid, &InnerSolverOptions::default()).unwrap();
    ma_core::lscheme_solve(
        &case,
        &grid,
        &InitialGuess::ConvexBump(c1),
        &LschemeConfig::default(),
        &solver,
    )
    .unwrap()
}

#[test]
fn acceptance_08_oscillating_nominal_amplitude() {
    // As stated: eps_s = 1e-3 with l = 12. Does not reproduce: at that
    // amplitude the closed-form Hessian determinant of the perturbed
    // solution reaches about -2.27 near the corners (the perturbation scale
    // is eps * (l pi)^2 ~ 1.4), so the case fails its own ellipticity
    // precondition; it is rejected at construction. The counterpart runs the
    // same experiment at the largest amplitude that keeps f nonnegative.
    let case = oscillating_case(1.0, (0.5, 0.5), 1e-3, 12);
    assert!(
        case.is_ok(),
        "oscillating eps = 1e-3, l = 12 rejected: {}",
        case.err().unwrap()
    );
    let report = run_oscillating(1e-3, 12, 100, 5.0);
    assert!(report.status.is_success(), "{:?}", report.status);
    println!("criterion 8: PASS - oscillating eps = 1e-3, l = 12 converges at n = 100");
}

#[test]
fn acceptance_08_counterpart_oscillating_valid_amplitude() {
    let l12 = run_oscillating(2e-4, 12, 100, 5.0);
    let l6 = run_oscillating(2e-4, 6, 100, 5.0);
    assert!(l12.status.is_success(), "{:?}", l12.status);
    assert!(l6.status.is_success(), "{:?}", l6.status);
    let gauss = &*C30_MG_100;
    assert!(
        l12.error_l2.unwrap() > gauss.error_l2.unwrap(),
        "oscillating error {} should exceed gaussian {}",
        l12.error_l2.unwrap(),
        gauss.error_l2.unwrap()
    );
    assert!(
        l12.error_inf.unwrap() > gauss.error_inf.unwrap(),
        "oscillating max error {} should exceed gaussian {}",
        l12.error_inf.unwrap(),
        gauss.error_inf.unwrap()
    );
    assert!(
        l6.iterations <= l12.iterations,
        "l = 6 took {} iterations vs {} for l = 12",
        l6.iterations,
        l12.iterations
    );
    println!(
        "criterion 8 (counterpart, eps = 2e-4): PASS - l = 12 converges in {} iterations \
         (error 2-norm {:.2e} > gaussian {:.2e}); l = 6 needs {} iterations",
        l12.iterations,
        l12.error_l2.unwrap(),
        gauss.error_l2.unwrap(),
        l6.iterations
    );
}

#[test]
fn acceptance_09_property_suites() {
    // stencil quadratic exactness
    let grid = Grid::new(7).unwrap();
    let p = |x: f64, y: f64| 1.5 * x * x - 0.75 * x * y + 2.0 * y * y + x - 3.0;
    let u = sample_interior(&grid, p).unwrap();
    let bc = sample_boundary(&grid, p).unwrap();
    let h = second_derivatives(&grid, &u, &bc).unwrap();
    for i in 0..grid.num_interior() {
        assert!((h.uxx.as_slice()[i] - 3.0).abs() < 1e-10);
        assert!((h.uyy.as_slice()[i] - 4.0).abs() < 1e-10);
        assert!((h.uxy.as_slice()[i] + 0.75).abs() < 1e-10);
    }

    // eigenvalue identities
    let g1 = Grid::new(1).unwrap();
    for (uxx, uyy, uxy) in [(3.0, 1.0, 1.0), (-2.0, 5.0, 0.3), (0.0, 0.0, 4.0)] {
        let tau_v: f64 = uxx + uyy;
        let det_v: f64 = uxx * uyy - uxy * uxy;
        let lm = lambda_max(
            &Field::from_values(&g1, vec![tau_v]).unwrap(),
            &Field::from_values(&g1, vec![det_v]).unwrap(),
        )
        .unwrap()
        .as_slice()[0];
        let ln = tau_v - lm;
        assert!((lm + ln - tau_v).abs() <= 1e-10 * tau_v.abs().max(1.0));
        assert!((lm * ln - det_v).abs() <= 1e-10 * det_v.abs().max(1.0));
        assert!(lm >= tau_v / 2.0);
    }

    // Laplacian symmetry and positive definiteness through a dense oracle
    let g12 = Grid::new(12).unwrap();
    let a = assemble_laplacian(&g12);
    for i in 0..a.dim() {
        for j in 0..i {
            assert_eq!(a.get(i, j), a.get(j, i));
        }
    }
    let dense = nalgebra::DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j));
    assert!(dense.symmetric_eigenvalues().iter().all(|&e| e > 0.0));

    // Green's matrix symmetry
    let g10 = Grid::new(10).unwrap();
    let gm = assemble_greens_matrix(&g10, 20).unwrap();
    for i in 0..gm.dim() {
        for j in 0..i {
            assert_eq!(gm.entry(i, j), gm.entry(j, i));
        }
    }

    // V-cycle linearity and symmetry as an operator
    let g16 = Grid::new(16).unwrap();
    let mg = multigrid_preconditioner(&g16);
    let mut state = 42u64;
    let mut rand_vec = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    };
    let r1 = rand_vec(g16.num_interior());
    let r2 = rand_vec(g16.num_interior());
    let m1 = mg.apply(&r1);
    let m2 = mg.apply(&r2);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let asym = (dot(&m1, &r2) - dot(&r1, &m2)).abs();
    assert!(asym <= 1e-10 * dot(&m1, &r2).abs().max(1.0));
    let sum: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
    let msum = mg.apply(&sum);
    for ((a, b), s) in m1.iter().zip(&m2).zip(&msum) {
        assert!((a + b - s).abs() <= 1e-10 * s.abs().max(1.0));
    }

    // conjugate gradients reduce the energy-norm error monotonically
    let a16 = assemble_laplacian(&g16);
    let b = rand_vec(a16.dim());
    let x_true = direct_solve(&a16, &b).unwrap();
    let mut prev = f64::INFINITY;
    for k in 1..=30 {
        let (xk, _) = cg(&a16, &b, 0.0, k, &Preconditioner::Identity).unwrap();
        let e: Vec<f64> = xk.iter().zip(&x_true).map(|(p, q)| p - q).collect();
        let ae = a16.matvec_alloc(&e);
        let en = dot(&e, &ae).sqrt();
        assert!(en <= prev * (1.0 + 1e-12), "energy error grew at {k}");
        prev = en;
    }

    println!("criterion 9: PASS - property suites (stencils, eigenvalues, SPD, kernel symmetry, V-cycle, CG)");
}
