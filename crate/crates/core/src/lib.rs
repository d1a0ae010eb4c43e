//! Solver library for the two-dimensional elliptic Monge-Ampere equation
//! `det(D^2 u) = f(x, grad u)` with Dirichlet boundary conditions on the unit
//! square.
//!
//! The equation is linearised by a fixed-point iteration that replaces the
//! cofactor matrix of the Hessian with a scalar multiple of the identity, so
//! every outer step reduces to one Poisson solve with a weighted residual as
//! the right-hand side. Because the inner problem is fixed, its solver is
//! interchangeable: sparse direct, conjugate gradients with ILU(0) or
//! geometric-multigrid preconditioning, or a dense truncated sine-series
//! kernel of the unit square. A plain Newton iteration on the same
//! discretisation serves as the baseline.
//!
//! Modules follow the pipeline: [`grid`] discretises the domain, [`fdops`]
//! provides stencils and sparse assembly, [`cases`] the benchmark problems,
//! [`linsolve`]/[`multigrid`]/[`green`] the inner solvers, and [`iterate`]
//! the outer drivers.

pub mod cases;
pub mod error;
pub mod fdops;
pub mod green;
pub mod grid;
pub mod iterate;
pub mod linsolve;
pub mod multigrid;

pub use cases::{
    gaussian_case, initial_guess, oscillating_case, quadratic_case, ExactSolution, InitialGuess,
    ProblemCase,
};
pub use error::{CoreError, Result};
pub use fdops::{
    assemble_laplacian, assemble_newton_operator, gradient, hessian_det, hessian_trace,
    lambda_max, residual, second_derivatives, HessianFields, SparseOperator,
};
pub use green::{apply_greens, assemble_greens_matrix, greens_value, GreensMatrix, MAX_GREEN_N};
pub use grid::{
    sample_boundary, sample_interior, write_field_csv, BoundaryData, Field, Grid,
};
pub use iterate::{
    estimate_contraction, lscheme_solve, lscheme_step, newton_solve, select_lambda,
    CurvatureSign, InnerSolver, InnerSolverOptions, IterationRecord, LschemeConfig, NewtonLinear,
    SolveReport, SolveStatus, StepInfo,
};
pub use linsolve::{
    cg, direct_solve, ilu0, multigrid_preconditioner, solve_nonsymmetric, BandedLu, LinSolveStats,
    Preconditioner, SolverChoice,
};
pub use multigrid::GeometricMultigrid;
