//! Poisson solves through the truncated sine-series kernel of the unit
//! square with homogeneous Dirichlet data.
//!
//! The kernel of the inverse negated Laplacian is
//!
//! ```text
//! G(x, x0) = 4 sum_{m,n >= 1} sin(m pi x) sin(n pi y) sin(m pi x0) sin(n pi y0)
//!                             / (pi^2 (m^2 + n^2))
//! ```
//!
//! truncated at order `M` and collocated at the interior nodes. The
//! trapezoidal quadrature weights collapse to a uniform `dx^2` because the
//! integrand vanishes on the boundary, so the update is a dense
//! matrix-vector product.

use crate::error::{CoreError, Result};
use crate::grid::{Field, Grid};

/// Hard limit on the grid size: the dense matrix has `n^4` entries and
/// becomes unusable well before exhausting memory.
pub const MAX_GREEN_N: usize = 100;

/// Dense collocation matrix `dx^2 * G_M(node_a; node_b)`.
pub struct GreensMatrix {
    n: usize,
    truncation: usize,
    /// row-major `n^2 x n^2`
    data: Vec<f64>,
}

/// Truncated kernel value at a pair of points in the closed unit square.
pub fn greens_value(x: (f64, f64), x0: (f64, f64), truncation: usize) -> f64 {
    let mut sum = 0.0;
    for m in 1..=truncation {
        let sm = (m as f64 * std::f64::consts::PI * x.0).sin()
            * (m as f64 * std::f64::consts::PI * x0.0).sin();
        if sm == 0.0 {
            continue;
        }
        for n in 1..=truncation {
            let sn = (n as f64 * std::f64::consts::PI * x.1).sin()
                * (n as f64 * std::f64::consts::PI * x0.1).sin();
            sum += sm * sn / ((m * m + n * n) as f64);
        }
    }
    4.0 / (std::f64::consts::PI * std::f64::consts::PI) * sum
}

/// Collocates the truncated kernel at all interior node pairs.
///
/// Grids with `n > 100` are refused: the dense matrix storage grows as
/// `n^4` and is the documented limit of this solver path.
pub fn assemble_greens_matrix(grid: &Grid, truncation: usize) -> Result<GreensMatrix> {
    if truncation == 0 {
        return Err(CoreError::InvalidArgument(
            "series truncation must be at least 1".into(),
        ));
    }
    let n = grid.n();
    if n > MAX_GREEN_N {
        return Err(CoreError::CapacityExceeded(format!(
            "green solver is limited to n <= {MAX_GREEN_N} (dense {0}^2 x {0}^2 matrix); got n = {n}",
            n * n
        )));
    }
    let dim = n * n;
    let m = truncation;
    let dx = grid.dx();

    // sin table: s[mm][j] = sin((mm+1) pi x_{j+1}), shared by both axes
    let mut sin_tab = vec![vec![0.0f64; n]; m];
    for mm in 0..m {
        for j in 0..n {
            sin_tab[mm][j] =
                ((mm + 1) as f64 * std::f64::consts::PI * (j + 1) as f64 * dx).sin();
        }
    }
    // t[mm][pair(k,k0)] = sum_nn sin_tab[nn][k] sin_tab[nn][k0] / ((mm+1)^2 + (nn+1)^2)
    let pairs = n * (n + 1) / 2;
    let pair_idx = |a: usize, b: usize| -> usize {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        lo * n - lo * (lo + 1) / 2 + hi
    };
    let mut t = vec![vec![0.0f64; pairs]; m];
    for mm in 0..m {
        let m2 = ((mm + 1) * (mm + 1)) as f64;
        for k in 0..n {
            for k0 in k..n {
                let mut acc = 0.0;
                for nn in 0..m {
                    let n2 = ((nn + 1) * (nn + 1)) as f64;
                    acc += sin_tab[nn][k] * sin_tab[nn][k0] / (m2 + n2);
                }
                t[mm][pair_idx(k, k0)] = acc;
            }
        }
    }

    let scale = 4.0 / (std::f64::consts::PI * std::f64::consts::PI) * dx * dx;
    let mut data = vec![0.0f64; dim * dim];
    for a in 0..dim {
        let (ja, ka) = (a % n, a / n);
        for b in a..dim {
            let (jb, kb) = (b % n, b / n);
            let tcol = pair_idx(ka, kb);
            let mut acc = 0.0;
            for mm in 0..m {
                acc += sin_tab[mm][ja] * sin_tab[mm][jb] * t[mm][tcol];
            }
            let v = scale * acc;
            data[a * dim + b] = v;
            data[b * dim + a] = v;
        }
    }
    Ok(GreensMatrix {
        n,
        truncation,
        data,
    })
}

impl GreensMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    #[inline]
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim() + b]
    }
}

/// Poisson update `v = G rho / Lambda`.
///
/// `G` collocates the inverse of the negated Laplacian, and the update
/// equation is `Lambda * Lap v = -rho`, so the product carries a factor
/// `1/Lambda`. Requires a homogeneous update boundary (`u = gamma` on the
/// boundary), which callers must enforce.
pub fn apply_greens(gm: &GreensMatrix, rho: &Field, lambda: f64) -> Result<Field> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "lambda must be finite and nonzero, got {lambda}"
        )));
    }
    let dim = gm.dim();
    if rho.len() != dim {
        return Err(CoreError::DimensionMismatch(format!(
            "rho has length {}, matrix dimension is {dim}",
            rho.len()
        )));
    }
    let inv = 1.0 / lambda;
    let x = rho.as_slice();
    let mut out = vec![0.0f64; dim];
    for (a, o) in out.iter_mut().enumerate() {
        let row = &gm.data[a * dim..(a + 1) * dim];
        let mut acc = 0.0;
        for (&g, &r) in row.iter().zip(x) {
            acc += g * r;
        }
        *o = acc * inv;
    }
    let grid = Grid::new(gm.n)?;
    Field::from_values(&grid, out)
}
