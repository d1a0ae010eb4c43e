//! Concrete problem instances: right-hand sides, boundary data, exact
//! solutions and initial guesses.

use std::fmt;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::grid::{sample_boundary, sample_interior, BoundaryData, Field, Grid};

type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type RhsFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(f64, f64, f64, f64) -> (f64, f64) + Send + Sync>;
type VecFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Exact solution with its analytic gradient.
#[derive(Clone)]
pub struct ExactSolution {
    value: ScalarFn,
    gradient: VecFn,
}

impl ExactSolution {
    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        (self.value)(x, y)
    }

    #[inline]
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (self.gradient)(x, y)
    }
}

/// A Monge-Ampere problem instance `det(D^2 u) = f(x, grad u)`, `u = gamma`
/// on the boundary.
#[derive(Clone)]
pub struct ProblemCase {
    name: String,
    f: RhsFn,
    grad_f_p: Option<GradFn>,
    gamma: ScalarFn,
    exact: Option<ExactSolution>,
    gradient_dependent: bool,
}

impl fmt::Debug for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemCase")
            .field("name", &self.name)
            .field("gradient_dependent", &self.gradient_dependent)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemCase {
    pub fn new<F, G>(
        name: impl Into<String>,
        f: F,
        grad_f_p: Option<GradFn>,
        gamma: G,
        exact: Option<ExactSolution>,
        gradient_dependent: bool,
    ) -> Self
    where
        F: Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        ProblemCase {
            name: name.into(),
            f: Arc::new(f),
            grad_f_p,
            gamma: Arc::new(gamma),
            exact,
            gradient_dependent,
        }
    }

    #[inline]
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Right-hand side `f(x, y, p_x, p_y)`; `(p_x, p_y)` is ignored unless
    /// the case is gradient dependent.
    #[inline]
    pub fn f(&self, x: f64, y: f64, px: f64, py: f64) -> f64 {
        (self.f)(x, y, px, py)
    }

    /// `grad_y f` at `(x, y, p)`, zero for gradient-independent cases.
    #[inline]
    pub fn grad_f_p(&self, x: f64, y: f64, px: f64, py: f64) -> (f64, f64) {
        match &self.grad_f_p {
            Some(g) => g(x, y, px, py),
            None => (0.0, 0.0),
        }
    }

    #[inline]
    pub fn gamma(&self, x: f64, y: f64) -> f64 {
        (self.gamma)(x, y)
    }

    #[inline]
    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    #[inline]
    pub fn gradient_dependent(&self) -> bool {
        self.gradient_dependent
    }

    pub fn sample_gamma(&self, grid: &Grid) -> Result<BoundaryData> {
        let g = self.gamma.clone();
        sample_boundary(grid, move |x, y| g(x, y))
    }

    pub fn sample_exact(&self, grid: &Grid) -> Result<Field> {
        let e = self.exact.as_ref().ok_or_else(|| {
            CoreError::InvalidArgument(format!("case '{}' has no exact solution", self.name))
        })?;
        let v = e.value.clone();
        sample_interior(grid, move |x, y| v(x, y))
    }
}

const VALIDATION_SAMPLES: usize = 200;
const ELLIPTICITY_TOL: f64 = 1e-12;

/// Checks `f(x, grad u_exact(x)) >= -tol` on a closed 200 x 200 sample grid,
/// independent of any solve grid.
fn validate_ellipticity(
    name: &str,
    f: &dyn Fn(f64, f64) -> f64,
) -> std::result::Result<(), CoreError> {
    let m = VALIDATION_SAMPLES;
    let mut worst = f64::INFINITY;
    let mut worst_at = (0.0, 0.0);
    for i in 0..m {
        let x = i as f64 / (m - 1) as f64;
        for j in 0..m {
            let y = j as f64 / (m - 1) as f64;
            let v = f(x, y);
            if v < worst {
                worst = v;
                worst_at = (x, y);
            }
        }
    }
    if worst < -ELLIPTICITY_TOL {
        return Err(CoreError::InvalidArgument(format!(
            "case '{name}' is not elliptic: f = {worst:e} at ({}, {})",
            worst_at.0, worst_at.1
        )));
    }
    Ok(())
}

fn gaussian_value(sigma: f64, mu: (f64, f64)) -> impl Fn(f64, f64) -> f64 + Copy {
    move |x, y| {
        let r2 = (x - mu.0).powi(2) + (y - mu.1).powi(2);
        -(-r2 / (2.0 * sigma * sigma)).exp()
    }
}

fn gaussian_gradient(sigma: f64, mu: (f64, f64)) -> impl Fn(f64, f64) -> (f64, f64) + Copy {
    move |x, y| {
        let r2 = (x - mu.0).powi(2) + (y - mu.1).powi(2);
        let e = (-r2 / (2.0 * sigma * sigma)).exp();
        let s2 = sigma * sigma;
        ((x - mu.0) * e / s2, (y - mu.1) * e / s2)
    }
}

/// `f_g = det(D^2 u_gauss) = (1 - |x-mu|^2/sigma^2) u_gauss^2 / sigma^4`
fn gaussian_det(sigma: f64, mu: (f64, f64)) -> impl Fn(f64, f64) -> f64 + Copy {
    let ug = gaussian_value(sigma, mu);
    move |x, y| {
        let r2 = (x - mu.0).powi(2) + (y - mu.1).powi(2);
        let s2 = sigma * sigma;
        let u = ug(x, y);
        (1.0 - r2 / s2) * u * u / (s2 * s2)
    }
}

/// Gaussian test case with exact solution `u = -exp(-|x-mu|^2 / (2 sigma^2))`.
///
/// With `gradient_dependent = false` the right-hand side is the closed-form
/// determinant `f_g`. With `gradient_dependent = true` the prescribed-curvature
/// structure `f(x, p) = K(x) (1 + |p|^2)^2` is used, with
/// `K = f_g / (1 + |grad u_exact|^2)^2` so the same Gaussian stays the exact
/// solution.
pub fn gaussian_case(sigma: f64, mu: (f64, f64), gradient_dependent: bool) -> Result<ProblemCase> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !mu.0.is_finite() || !mu.1.is_finite() {
        return Err(CoreError::InvalidArgument("mu must be finite".into()));
    }
    let ug = gaussian_value(sigma, mu);
    let grad = gaussian_gradient(sigma, mu);
    let fg = gaussian_det(sigma, mu);
    validate_ellipticity("gaussian", &move |x, y| fg(x, y))?;
    let exact = ExactSolution::new(ug, grad);

    if gradient_dependent {
        let kfun = move |x: f64, y: f64| {
            let (gx, gy) = grad(x, y);
            let denom = 1.0 + gx * gx + gy * gy;
            fg(x, y) / (denom * denom)
        };
        let f = move |x: f64, y: f64, px: f64, py: f64| {
            let w = 1.0 + px * px + py * py;
            kfun(x, y) * w * w
        };
        let dfdp: GradFn = Arc::new(move |x, y, px, py| {
            let w = 1.0 + px * px + py * py;
            let c = 4.0 * kfun(x, y) * w;
            (c * px, c * py)
        });
        Ok(ProblemCase::new(
            "gaussian-curvature",
            f,
            Some(dfdp),
            ug,
            Some(exact),
            true,
        ))
    } else {
        Ok(ProblemCase::new(
            "gaussian",
            move |x, y, _, _| fg(x, y),
            None,
            ug,
            Some(exact),
            false,
        ))
    }
}

/// Gaussian perturbed by `-eps_s sin(l pi x) sin(l pi y)`; the right-hand side
/// is the closed-form Hessian determinant of the perturbed solution.
///
/// Construction fails when the determinant dips below `-1e-12` anywhere on the
/// validation grid (the perturbation is too large to keep the problem
/// elliptic).
pub fn oscillating_case(sigma: f64, mu: (f64, f64), eps_s: f64, l: u32) -> Result<ProblemCase> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if l == 0 {
        return Err(CoreError::InvalidArgument("l must be positive".into()));
    }
    if !eps_s.is_finite() {
        return Err(CoreError::InvalidArgument("eps_s must be finite".into()));
    }
    let lp = l as f64 * std::f64::consts::PI;
    let ug = gaussian_value(sigma, mu);
    let ggrad = gaussian_gradient(sigma, mu);
    let s2 = sigma * sigma;

    let value = move |x: f64, y: f64| ug(x, y) - eps_s * (lp * x).sin() * (lp * y).sin();
    let grad = move |x: f64, y: f64| {
        let (gx, gy) = ggrad(x, y);
        (
            gx - eps_s * lp * (lp * x).cos() * (lp * y).sin(),
            gy - eps_s * lp * (lp * x).sin() * (lp * y).cos(),
        )
    };
    // closed-form second derivatives of the perturbed solution
    let det = move |x: f64, y: f64| {
        let a = x - mu.0;
        let b = y - mu.1;
        let e = (-(a * a + b * b) / (2.0 * s2)).exp();
        let uxx_g = e * (1.0 / s2 - a * a / (s2 * s2));
        let uyy_g = e * (1.0 / s2 - b * b / (s2 * s2));
        let uxy_g = -e * a * b / (s2 * s2);
        let c = eps_s * lp * lp;
        let uxx = uxx_g + c * (lp * x).sin() * (lp * y).sin();
        let uyy = uyy_g + c * (lp * x).sin() * (lp * y).sin();
        let uxy = uxy_g - c * (lp * x).cos() * (lp * y).cos();
        uxx * uyy - uxy * uxy
    };
    validate_ellipticity("oscillating", &det)?;
    Ok(ProblemCase::new(
        "oscillating",
        move |x, y, _, _| det(x, y),
        None,
        value,
        Some(ExactSolution::new(value, grad)),
        false,
    ))
}

/// `u = (x^2 + y^2)/2` with `f = 1`; central differences are exact on it, so
/// the sampled solution is a fixed point of the discrete iteration.
pub fn quadratic_case() -> ProblemCase {
    let value = |x: f64, y: f64| 0.5 * (x * x + y * y);
    ProblemCase::new(
        "quadratic",
        |_, _, _, _| 1.0,
        None,
        value,
        Some(ExactSolution::new(value, |x, y| (x, y))),
        false,
    )
}

/// Initial iterate selection.
#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// `u_exact - c * x(1-x)y(1-y)` (convex for the Gaussian cases).
    ConvexBump(f64),
    /// `u_exact + c * x(1-x)y(1-y)` (saddle shaped).
    SaddleBump(f64),
    /// The sampled exact solution itself.
    Exact,
    /// Caller-provided interior values; the boundary is still `gamma`.
    Custom(Field),
}

fn bump(x: f64, y: f64) -> f64 {
    x * (1.0 - x) * y * (1.0 - y)
}

/// Builds the initial iterate and its boundary values (always `gamma`
/// samples, since the bump vanishes on the boundary).
pub fn initial_guess(
    kind: &InitialGuess,
    case: &ProblemCase,
    grid: &Grid,
) -> Result<(Field, BoundaryData)> {
    let bc = case.sample_gamma(grid)?;
    let field = match kind {
        InitialGuess::Custom(f) => {
            if f.n() != grid.n() {
                return Err(CoreError::DimensionMismatch(format!(
                    "custom initial guess has n={}, grid has n={}",
                    f.n(),
                    grid.n()
                )));
            }
            f.clone()
        }
        InitialGuess::Exact => case.sample_exact(grid)?,
        InitialGuess::ConvexBump(c) => {
            let exact = case.exact().ok_or_else(|| {
                CoreError::InvalidArgument(
                    "bump initial guesses need a case with an exact solution".into(),
                )
            })?;
            let (c, e) = (*c, exact.clone());
            sample_interior(grid, move |x, y| e.value(x, y) - c * bump(x, y))?
        }
        InitialGuess::SaddleBump(c) => {
            let exact = case.exact().ok_or_else(|| {
                CoreError::InvalidArgument(
                    "bump initial guesses need a case with an exact solution".into(),
                )
            })?;
            let (c, e) = (*c, exact.clone());
            sample_interior(grid, move |x, y| e.value(x, y) + c * bump(x, y))?
        }
    };
    Ok((field, bc))
}
