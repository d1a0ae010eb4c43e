//! Inner linear solvers: banded direct LU, (preconditioned) conjugate
//! gradients, ILU(0) and the geometric multigrid V-cycle preconditioner.

use std::str::FromStr;

use crate::error::{CoreError, Result};
use crate::fdops::SparseOperator;
use crate::grid::Grid;
use crate::multigrid::GeometricMultigrid;

/// Inner-solver selection for the Poisson update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Direct,
    Cg,
    PcgIlu,
    PcgMg,
    Green,
}

impl SolverChoice {
    pub const NAMES: [&'static str; 5] = ["direct", "cg", "pcg-ilu", "pcg-mg", "green"];

    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Direct => "direct",
            SolverChoice::Cg => "cg",
            SolverChoice::PcgIlu => "pcg-ilu",
            SolverChoice::PcgMg => "pcg-mg",
            SolverChoice::Green => "green",
        }
    }
}

impl FromStr for SolverChoice {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(SolverChoice::Direct),
            "cg" => Ok(SolverChoice::Cg),
            "pcg-ilu" => Ok(SolverChoice::PcgIlu),
            "pcg-mg" => Ok(SolverChoice::PcgMg),
            "green" => Ok(SolverChoice::Green),
            other => Err(CoreError::InvalidArgument(format!(
                "unknown solver '{other}', valid: {}",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

impl std::fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of an iterative linear solve.
#[derive(Debug, Clone)]
pub struct LinSolveStats {
    pub iterations: usize,
    pub final_rel_residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
}

/// Banded LU factorisation with partial pivoting.
///
/// Lexicographically ordered 5- and 9-point operators have bandwidth `n+1`,
/// so a band factorisation is the natural sparse direct solver here. Works
/// for nonsymmetric and indefinite matrices; reports singular pivots.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// column-major band storage, width `2*kl + ku + 1` per column
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        let n = a.dim();
        let mut kl = 0usize;
        let mut ku = 0usize;
        let mut max_abs = 0.0_f64;
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    kl = kl.max(i - c);
                } else {
                    ku = ku.max(c - i);
                }
                max_abs = max_abs.max(v.abs());
            }
        }
        let w = 2 * kl + ku + 1;
        let mut ab = vec![0.0; w * n];
        // band row index of entry (i, j) within column j is kl + ku + i - j
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                ab[j * w + (kl + ku + i - j)] = v;
            }
        }

        let tiny = 1e-14 * max_abs.max(f64::MIN_POSITIVE);
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let i_hi = (k + kl).min(n - 1);
            // pivot search in column k
            let mut p = k;
            let mut best = ab[k * w + (kl + ku)].abs();
            for i in k + 1..=i_hi {
                let v = ab[k * w + (kl + ku + i - k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(CoreError::SingularMatrix(format!(
                    "pivot {best:e} at column {k} below threshold"
                )));
            }
            pivots[k] = p;
            let j_hi = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=j_hi {
                    ab.swap(j * w + (kl + ku + k - j), j * w + (kl + ku + p - j));
                }
            }
            let piv = ab[k * w + (kl + ku)];
            for i in k + 1..=i_hi {
                ab[k * w + (kl + ku + i - k)] /= piv;
            }
            for j in k + 1..=j_hi {
                let ukj = ab[j * w + (kl + ku + k - j)];
                if ukj == 0.0 {
                    continue;
                }
                for i in k + 1..=i_hi {
                    let m = ab[k * w + (kl + ku + i - k)];
                    if m != 0.0 {
                        ab[j * w + (kl + ku + i - j)] -= m * ukj;
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ab,
            pivots,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let w = 2 * kl + ku + 1;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                let i_hi = (k + kl).min(n - 1);
                for i in k + 1..=i_hi {
                    x[i] -= self.ab[k * w + (kl + ku + i - k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let j_hi = (k + ku + kl).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=j_hi {
                acc -= self.ab[j * w + (kl + ku + k - j)] * x[j];
            }
            x[k] = acc / self.ab[k * w + (kl + ku)];
        }
        x
    }
}

/// One-shot sparse direct solve (factor + substitute).
pub fn direct_solve(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    Ok(BandedLu::factor(a)?.solve(b))
}

/// Direct LU solve for nonsymmetric systems (the Newton matrices).
pub fn solve_nonsymmetric(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    direct_solve(a, b)
}

/// Preconditioner for the conjugate gradient solver.
pub enum Preconditioner {
    Identity,
    Ilu0(Ilu0Factors),
    Multigrid(GeometricMultigrid),
}

impl Preconditioner {
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Identity => r.to_vec(),
            Preconditioner::Ilu0(f) => f.apply(r),
            Preconditioner::Multigrid(mg) => mg.apply(r),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Preconditioner::Identity => "identity",
            Preconditioner::Ilu0(_) => "ilu0",
            Preconditioner::Multigrid(_) => "multigrid",
        }
    }
}

/// ILU(0): incomplete LU restricted to the sparsity pattern of `a`.
pub struct Ilu0Factors {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag_ptr: Vec<usize>,
}

/// Computes the zero-fill incomplete LU factorisation of `a`.
pub fn ilu0(a: &SparseOperator) -> Result<Preconditioner> {
    let n = a.dim();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        col_idx.extend_from_slice(cols);
        values.extend_from_slice(vals);
        row_ptr.push(col_idx.len());
    }
    let mut diag_ptr = vec![usize::MAX; n];
    for i in 0..n {
        for p in row_ptr[i]..row_ptr[i + 1] {
            if col_idx[p] == i {
                diag_ptr[i] = p;
            }
        }
        if diag_ptr[i] == usize::MAX {
            return Err(CoreError::SingularMatrix(format!(
                "row {i} has no diagonal entry"
            )));
        }
    }

    for i in 0..n {
        for p in row_ptr[i]..row_ptr[i + 1] {
            let k = col_idx[p];
            if k >= i {
                break;
            }
            let dk = values[diag_ptr[k]];
            if dk == 0.0 {
                return Err(CoreError::SingularMatrix(format!(
                    "zero pivot at row {k} during ILU(0)"
                )));
            }
            values[p] /= dk;
            let lik = values[p];
            // subtract lik * U(k, j) from row i entries right of column k
            let krange = diag_ptr[k] + 1..row_ptr[k + 1];
            for q in p + 1..row_ptr[i + 1] {
                let j = col_idx[q];
                let kcols = &col_idx[krange.clone()];
                if let Ok(off) = kcols.binary_search(&j) {
                    values[q] -= lik * values[krange.start + off];
                }
            }
        }
        if values[diag_ptr[i]] == 0.0 {
            return Err(CoreError::SingularMatrix(format!(
                "zero pivot at row {i} during ILU(0)"
            )));
        }
    }

    Ok(Preconditioner::Ilu0(Ilu0Factors {
        dim: n,
        row_ptr,
        col_idx,
        values,
        diag_ptr,
    }))
}

impl Ilu0Factors {
    /// Solves `L U z = r` (forward then backward substitution on the pattern).
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.dim);
        let mut z = r.to_vec();
        for i in 0..self.dim {
            let mut acc = z[i];
            for p in self.row_ptr[i]..self.diag_ptr[i] {
                acc -= self.values[p] * z[self.col_idx[p]];
            }
            z[i] = acc;
        }
        for i in (0..self.dim).rev() {
            let mut acc = z[i];
            for p in self.diag_ptr[i] + 1..self.row_ptr[i + 1] {
                acc -= self.values[p] * z[self.col_idx[p]];
            }
            z[i] = acc / self.values[self.diag_ptr[i]];
        }
        z
    }

    /// Entry of the factor storage (unit lower L below the diagonal, U on and
    /// above it); used by pattern tests.
    pub fn factor_entry(&self, i: usize, j: usize) -> f64 {
        for p in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col_idx[p] == j {
                return self.values[p];
            }
        }
        0.0
    }
}

/// Geometric multigrid V-cycle preconditioner for the negated Laplacian on
/// the given grid.
pub fn multigrid_preconditioner(grid: &Grid) -> Preconditioner {
    Preconditioner::Multigrid(GeometricMultigrid::new(grid))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients for SPD systems.
///
/// Stops when the true relative residual drops to `tol`; errors out on
/// nonpositive curvature, which signals a non-SPD operator.
pub fn cg(
    a: &SparseOperator,
    b: &[f64],
    tol: f64,
    max_iters: usize,
    pre: &Preconditioner,
) -> Result<(Vec<f64>, LinSolveStats)> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            LinSolveStats {
                iterations: 0,
                final_rel_residual: 0.0,
                converged: true,
                residual_history: Vec::new(),
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z = pre.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();
    let mut rel = 1.0;
    for k in 1..=max_iters {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(CoreError::CgBreakdown(format!(
                "nonpositive curvature p.Ap = {pap:e} at iteration {k}"
            )));
        }
        let alpha = rz / pap;
        for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok((
                x,
                LinSolveStats {
                    iterations: k,
                    final_rel_residual: rel,
                    converged: true,
                    residual_history: history,
                },
            ));
        }
        z = pre.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok((
        x,
        LinSolveStats {
            iterations: max_iters,
            final_rel_residual: rel,
            converged: false,
            residual_history: history,
        },
    ))
}
