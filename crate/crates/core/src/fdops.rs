//! Central-difference operators, residual evaluation, and sparse assembly.
//!
//! Second derivatives use the classic 3-point / 4-point-cross stencils
//!
//! ```text
//! uxx ~ (u[j-1,k] - 2 u[j,k] + u[j+1,k]) / dx^2
//! uyy ~ (u[j,k-1] - 2 u[j,k] + u[j,k+1]) / dx^2
//! uxy ~ (u[j-1,k-1] - u[j-1,k+1] - u[j+1,k-1] + u[j+1,k+1]) / (4 dx^2)
//! ```
//!
//! Stencil reads falling on the boundary take their values from the Dirichlet
//! data. Assembled operators eliminate boundary unknowns; the dropped
//! couplings are kept so the known boundary values can be folded into a
//! right-hand side at solve time.

use std::io::Write;

use crate::cases::ProblemCase;
use crate::error::{CoreError, Result};
use crate::grid::{node_value, BoundaryData, Field, Grid};

/// The three second-derivative fields of an iterate.
#[derive(Debug, Clone)]
pub struct HessianFields {
    pub uxx: Field,
    pub uyy: Field,
    pub uxy: Field,
}

/// Central-difference second derivatives of `u` on the interior.
pub fn second_derivatives(grid: &Grid, u: &Field, bc: &BoundaryData) -> Result<HessianFields> {
    check_dims(grid, u, bc)?;
    let n = grid.n();
    let s = 1.0 / (grid.dx() * grid.dx());
    let mut uxx = Field::zeros(grid);
    let mut uyy = Field::zeros(grid);
    let mut uxy = Field::zeros(grid);
    for k in 1..=n {
        for j in 1..=n {
            let c = u.get(j, k);
            let l = node_value(grid, u, bc, j - 1, k);
            let r = node_value(grid, u, bc, j + 1, k);
            let d = node_value(grid, u, bc, j, k - 1);
            let t = node_value(grid, u, bc, j, k + 1);
            uxx.set(j, k, (l - 2.0 * c + r) * s);
            uyy.set(j, k, (d - 2.0 * c + t) * s);
            let ll = node_value(grid, u, bc, j - 1, k - 1);
            let lu = node_value(grid, u, bc, j - 1, k + 1);
            let rl = node_value(grid, u, bc, j + 1, k - 1);
            let ru = node_value(grid, u, bc, j + 1, k + 1);
            uxy.set(j, k, (ll - lu - rl + ru) * 0.25 * s);
        }
    }
    Ok(HessianFields { uxx, uyy, uxy })
}

/// Central-difference gradient of `u` on the interior.
pub fn gradient(grid: &Grid, u: &Field, bc: &BoundaryData) -> Result<(Field, Field)> {
    check_dims(grid, u, bc)?;
    let n = grid.n();
    let s = 0.5 / grid.dx();
    let mut ux = Field::zeros(grid);
    let mut uy = Field::zeros(grid);
    for k in 1..=n {
        for j in 1..=n {
            let l = node_value(grid, u, bc, j - 1, k);
            let r = node_value(grid, u, bc, j + 1, k);
            let d = node_value(grid, u, bc, j, k - 1);
            let t = node_value(grid, u, bc, j, k + 1);
            ux.set(j, k, (r - l) * s);
            uy.set(j, k, (t - d) * s);
        }
    }
    Ok((ux, uy))
}

/// Elementwise `uxx * uyy - uxy^2` (the discrete Hessian determinant).
pub fn hessian_det(h: &HessianFields) -> Field {
    let mut out = h.uxx.clone();
    for ((d, &yy), &xy) in out
        .as_mut_slice()
        .iter_mut()
        .zip(h.uyy.as_slice())
        .zip(h.uxy.as_slice())
    {
        *d = *d * yy - xy * xy;
    }
    out
}

/// Elementwise `uxx + uyy` (the discrete Hessian trace).
pub fn hessian_trace(h: &HessianFields) -> Field {
    let mut out = h.uxx.clone();
    for (t, &yy) in out.as_mut_slice().iter_mut().zip(h.uyy.as_slice()) {
        *t += yy;
    }
    out
}

/// Largest eigenvalue of the nodal 2x2 Hessians,
/// `lambda_M = (tau + sqrt(tau^2 - 4 det)) / 2`.
///
/// The radicand equals `(uxx - uyy)^2 + 4 uxy^2` analytically and is thus
/// nonnegative; tiny negative values from cancellation are clamped to zero,
/// anything below `-1e-12 * max(1, tau^2)` is reported as an inconsistency.
pub fn lambda_max(tau: &Field, det: &Field) -> Result<Field> {
    if tau.len() != det.len() {
        return Err(CoreError::DimensionMismatch(
            "trace and determinant fields differ in length".into(),
        ));
    }
    let mut out = tau.clone();
    for (l, &d) in out.as_mut_slice().iter_mut().zip(det.as_slice()) {
        let t = *l;
        let rad = t * t - 4.0 * d;
        let tol_rad = 1e-12 * (t * t).max(1.0);
        if rad < -tol_rad {
            return Err(CoreError::InternalInconsistency(format!(
                "negative eigenvalue radicand {rad:e} (trace {t:e}, det {d:e})"
            )));
        }
        *l = 0.5 * (t + rad.max(0.0).sqrt());
    }
    Ok(out)
}

/// Residual `rho(u) = det(D^2 u) - f(., grad u)` evaluated nodewise.
///
/// The gradient is only computed when the case's right-hand side actually
/// depends on it.
pub fn residual(grid: &Grid, u: &Field, bc: &BoundaryData, case: &ProblemCase) -> Result<Field> {
    let h = second_derivatives(grid, u, bc)?;
    let det = hessian_det(&h);
    residual_from_det(grid, u, bc, &det, case)
}

/// Residual when the Hessian determinant of the iterate is already available.
pub(crate) fn residual_from_det(
    grid: &Grid,
    u: &Field,
    bc: &BoundaryData,
    det: &Field,
    case: &ProblemCase,
) -> Result<Field> {
    let n = grid.n();
    let grad = if case.gradient_dependent() {
        Some(gradient(grid, u, bc)?)
    } else {
        None
    };
    let mut rho = det.clone();
    for k in 1..=n {
        for j in 1..=n {
            let (x, y) = grid.node(j, k);
            let (px, py) = match &grad {
                Some((gx, gy)) => (gx.get(j, k), gy.get(j, k)),
                None => (0.0, 0.0),
            };
            let fv = case.f(x, y, px, py);
            if !fv.is_finite() {
                return Err(CoreError::NonFiniteSample { x, y });
            }
            let idx = grid.index(j, k);
            rho.as_mut_slice()[idx] -= fv;
        }
    }
    Ok(rho)
}

fn check_dims(grid: &Grid, u: &Field, bc: &BoundaryData) -> Result<()> {
    if u.n() != grid.n() || bc.n() != grid.n() {
        return Err(CoreError::DimensionMismatch(format!(
            "grid n={} vs field n={} vs boundary n={}",
            grid.n(),
            u.n(),
            bc.n()
        )));
    }
    Ok(())
}

/// Coupling from an eliminated boundary node into an interior row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCoupling {
    pub row: usize,
    pub j: usize,
    pub k: usize,
    pub coeff: f64,
}

/// Sparse matrix over the interior unknowns in compressed row storage.
///
/// Boundary couplings dropped during assembly are retained so that
/// [`SparseOperator::fold_boundary`] can move the known Dirichlet values of
/// the solution to the right-hand side.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    boundary: Vec<BoundaryCoupling>,
    symmetric: bool,
}

impl SparseOperator {
    pub(crate) fn from_rows(
        dim: usize,
        rows: Vec<Vec<(usize, f64)>>,
        boundary: Vec<BoundaryCoupling>,
        symmetric: bool,
    ) -> Self {
        assert_eq!(rows.len(), dim);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            boundary,
            symmetric,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Entry `(i, j)`, zero when outside the sparsity pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// Moves known boundary values of the solution to the right-hand side:
    /// `rhs[row] -= coeff * g(j, k)` for every eliminated coupling.
    pub fn fold_boundary(&self, g: &BoundaryData, rhs: &mut [f64]) {
        for c in &self.boundary {
            rhs[c.row] -= c.coeff * g.get(c.j, c.k);
        }
    }

    pub fn boundary_couplings(&self) -> &[BoundaryCoupling] {
        &self.boundary
    }

    /// Dense copy, for small oracles and coarse-level solves.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                a[i][c] = v;
            }
        }
        a
    }

    /// Matrix Market coordinate format with 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "%%MatrixMarket matrix coordinate real {}",
            if self.symmetric { "symmetric" } else { "general" }
        )?;
        if self.symmetric {
            let nnz_lower = (0..self.dim)
                .map(|i| {
                    let (cols, _) = self.row(i);
                    cols.iter().filter(|&&c| c <= i).count()
                })
                .sum::<usize>();
            writeln!(w, "{} {} {}", self.dim, self.dim, nnz_lower)?;
            for i in 0..self.dim {
                let (cols, vals) = self.row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    if c <= i {
                        writeln!(w, "{} {} {:.16e}", i + 1, c + 1, v)?;
                    }
                }
            }
        } else {
            writeln!(w, "{} {} {}", self.dim, self.dim, self.nnz())?;
            for i in 0..self.dim {
                let (cols, vals) = self.row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    writeln!(w, "{} {} {:.16e}", i + 1, c + 1, v)?;
                }
            }
        }
        Ok(())
    }
}

/// Assembles `-Laplacian` on the 5-point stencil: diagonal `4/dx^2`,
/// neighbours `-1/dx^2`. The sign makes the operator positive definite, so
/// the Poisson update is solved as `(-Lap) v = rho / Lambda`.
pub fn assemble_laplacian(grid: &Grid) -> SparseOperator {
    let n = grid.n();
    let s = 1.0 / (grid.dx() * grid.dx());
    let dim = grid.num_interior();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(5); dim];
    let mut boundary = Vec::new();
    for k in 1..=n {
        for j in 1..=n {
            let row = grid.index(j, k);
            rows[row].push((row, 4.0 * s));
            let mut nb = |jj: usize, kk: usize| {
                if grid.is_interior(jj, kk) {
                    rows[row].push((grid.index(jj, kk), -s));
                } else {
                    boundary.push(BoundaryCoupling {
                        row,
                        j: jj,
                        k: kk,
                        coeff: -s,
                    });
                }
            };
            nb(j - 1, k);
            nb(j + 1, k);
            nb(j, k - 1);
            nb(j, k + 1);
        }
    }
    SparseOperator::from_rows(dim, rows, boundary, true)
}

/// Assembles the linearised operator `-(C : D^2 v - q . grad v)` on the
/// 9-point stencil, where `C = cof(D^2 u) = [[uyy, -uxy], [-uxy, uxx]]` is
/// taken nodewise from `h` and `q` is the advection coefficient pair.
///
/// The negation matches [`assemble_laplacian`]: the Newton update solves
/// `Op v = rho`. The matrix is nonsymmetric in general; indefinite output is
/// legal, the solver layer decides what to do with it.
pub fn assemble_newton_operator(
    grid: &Grid,
    h: &HessianFields,
    q: (&Field, &Field),
) -> SparseOperator {
    let n = grid.n();
    let w2 = 1.0 / (grid.dx() * grid.dx());
    let w4 = 0.25 * w2;
    let wg = 0.5 / grid.dx();
    let dim = grid.num_interior();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(9); dim];
    let mut boundary = Vec::new();
    for k in 1..=n {
        for j in 1..=n {
            let row = grid.index(j, k);
            let cxx = h.uyy.get(j, k); // multiplies the vxx stencil
            let cyy = h.uxx.get(j, k); // multiplies the vyy stencil
            let cxy = h.uxy.get(j, k);
            let qx = q.0.get(j, k);
            let qy = q.1.get(j, k);

            let mut add = |jj: usize, kk: usize, coeff: f64| {
                if coeff == 0.0 {
                    return;
                }
                if grid.is_interior(jj, kk) {
                    rows[row].push((grid.index(jj, kk), coeff));
                } else {
                    boundary.push(BoundaryCoupling {
                        row,
                        j: jj,
                        k: kk,
                        coeff,
                    });
                }
            };

            add(j, k, 2.0 * w2 * (cxx + cyy));
            add(j - 1, k, -cxx * w2 - qx * wg);
            add(j + 1, k, -cxx * w2 + qx * wg);
            add(j, k - 1, -cyy * w2 - qy * wg);
            add(j, k + 1, -cyy * w2 + qy * wg);
            // cross stencil of -(-2 uxy vxy)
            add(j - 1, k - 1, 2.0 * cxy * w4);
            add(j + 1, k + 1, 2.0 * cxy * w4);
            add(j - 1, k + 1, -2.0 * cxy * w4);
            add(j + 1, k - 1, -2.0 * cxy * w4);
        }
    }
    SparseOperator::from_rows(dim, rows, boundary, false)
}
