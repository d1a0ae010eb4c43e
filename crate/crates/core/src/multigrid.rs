//! Geometric multigrid V-cycle for the 5-point negated Laplacian.
//!
//! Coarsening keeps every other grid line (`n -> n/2`) down to three interior
//! nodes per axis. Transfers are bilinear prolongation and full-weighting
//! restriction (`R = P^T / 4`); coarse operators are Galerkin products, the
//! smoother is damped Jacobi (`omega = 0.8`, one pre- and one post-sweep) and
//! the coarsest level is solved directly. One application runs a single
//! V-cycle from a zero initial guess, which is a fixed symmetric positive
//! definite linear operator, so it is a valid conjugate gradient
//! preconditioner.

use crate::fdops::assemble_laplacian;
use crate::grid::Grid;

const JACOBI_OMEGA: f64 = 0.8;
const COARSEST_N: usize = 3;

/// Minimal CSR container for the level matrices and transfer operators.
#[derive(Debug, Clone)]
struct Csr {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.ncols];
        for &c in &self.col_idx {
            counts[c] += 1;
        }
        let mut row_ptr = vec![0usize; self.ncols + 1];
        for i in 0..self.ncols {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let mut col_idx = vec![0usize; self.values.len()];
        let mut values = vec![0.0; self.values.len()];
        let mut next = row_ptr.clone();
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[p];
                col_idx[next[c]] = i;
                values[next[c]] = self.values[p];
                next[c] += 1;
            }
        }
        Csr {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self * other`, row-by-row with a dense accumulator.
    fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0f64; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let k = self.col_idx[p];
                let v = self.values[p];
                for q in other.row_ptr[k]..other.row_ptr[k + 1] {
                    let c = other.col_idx[q];
                    if acc[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    acc[c] += v * other.values[q];
                }
            }
            let mut row: Vec<(usize, f64)> = touched.iter().map(|&c| (c, acc[c])).collect();
            row.retain(|&(_, v)| v != 0.0);
            for &c in &touched {
                acc[c] = 0.0;
            }
            touched.clear();
            rows.push(row);
        }
        Csr::from_rows(self.nrows, other.ncols, rows)
    }

    fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[p] == i {
                    d[i] = self.values[p];
                }
            }
        }
        d
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[i][self.col_idx[p]] = self.values[p];
            }
        }
        a
    }
}

/// Dense LU with partial pivoting for the coarsest level (at most 9 unknowns).
#[derive(Debug, Clone)]
struct DenseLu {
    n: usize,
    lu: Vec<Vec<f64>>,
    piv: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: Vec<Vec<f64>>) -> DenseLu {
        let n = a.len();
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            piv[k] = p;
            a.swap(k, p);
            let d = a[k][k];
            for i in k + 1..n {
                let m = a[i][k] / d;
                a[i][k] = m;
                for j in k + 1..n {
                    a[i][j] -= m * a[k][j];
                }
            }
        }
        DenseLu { n, lu: a, piv }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for k in 0..self.n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for i in k + 1..self.n {
                x[i] -= self.lu[i][k] * xk;
            }
        }
        for k in (0..self.n).rev() {
            let mut acc = x[k];
            for j in k + 1..self.n {
                acc -= self.lu[k][j] * x[j];
            }
            x[k] = acc / self.lu[k][k];
        }
        x
    }
}

struct Level {
    a: Csr,
    inv_diag: Vec<f64>,
    /// prolongation from the next-coarser level onto this one
    p: Option<Csr>,
}

/// Fixed V-cycle operator approximating the inverse of the negated Laplacian.
pub struct GeometricMultigrid {
    levels: Vec<Level>,
    coarsest: DenseLu,
}

/// Bilinear (in index space) interpolation from the `nc`-grid to the
/// `nf`-grid; out-of-range coarse neighbours are homogeneous Dirichlet zeros.
fn prolongation(nf: usize, nc: usize) -> Csr {
    let weights_1d = |jf: usize| -> Vec<(usize, f64)> {
        if jf % 2 == 0 {
            vec![(jf / 2, 1.0)]
        } else {
            let t = jf / 2;
            let mut w = Vec::with_capacity(2);
            if t >= 1 {
                w.push((t, 0.5));
            }
            if t + 1 <= nc {
                w.push((t + 1, 0.5));
            }
            w
        }
    };
    let mut rows = Vec::with_capacity(nf * nf);
    for kf in 1..=nf {
        let wy = weights_1d(kf);
        for jf in 1..=nf {
            let wx = weights_1d(jf);
            let mut row = Vec::with_capacity(4);
            for &(kc, vy) in &wy {
                for &(jc, vx) in &wx {
                    row.push(((kc - 1) * nc + (jc - 1), vx * vy));
                }
            }
            rows.push(row);
        }
    }
    Csr::from_rows(nf * nf, nc * nc, rows)
}

impl GeometricMultigrid {
    pub fn new(grid: &Grid) -> Self {
        let fine = assemble_laplacian(grid);
        let mut rows = Vec::with_capacity(fine.dim());
        for i in 0..fine.dim() {
            let (cols, vals) = fine.row(i);
            rows.push(cols.iter().copied().zip(vals.iter().copied()).collect());
        }
        let mut a = Csr::from_rows(fine.dim(), fine.dim(), rows);
        let mut n = grid.n();
        let mut levels = Vec::new();
        while n > COARSEST_N {
            let nc = n / 2;
            let p = prolongation(n, nc);
            // Galerkin coarse operator (P^T A P) / 4: full-weighting restriction
            let mut coarse = p.transpose().matmul(&a.matmul(&p));
            coarse.scale(0.25);
            let inv_diag = a.diagonal().iter().map(|d| 1.0 / d).collect();
            levels.push(Level {
                a,
                inv_diag,
                p: Some(p),
            });
            a = coarse;
            n = nc;
        }
        let coarsest = DenseLu::factor(a.to_dense());
        let inv_diag = a.diagonal().iter().map(|d| 1.0 / d).collect();
        levels.push(Level {
            a,
            inv_diag,
            p: None,
        });
        GeometricMultigrid { levels, coarsest }
    }

    /// One V-cycle from a zero initial guess.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.cycle(0, r)
    }

    fn cycle(&self, level: usize, r: &[f64]) -> Vec<f64> {
        let lvl = &self.levels[level];
        let p = match &lvl.p {
            None => return self.coarsest.solve(r),
            Some(p) => p,
        };
        let n = lvl.a.nrows;
        // pre-smooth from zero: x = omega D^-1 r
        let mut x: Vec<f64> = r
            .iter()
            .zip(&lvl.inv_diag)
            .map(|(ri, di)| JACOBI_OMEGA * di * ri)
            .collect();
        // coarse correction on the residual
        let mut ax = vec![0.0; n];
        lvl.a.matvec(&x, &mut ax);
        let resid: Vec<f64> = r.iter().zip(&ax).map(|(ri, a)| ri - a).collect();
        let mut rc = vec![0.0; p.ncols];
        // restriction = P^T / 4
        for i in 0..n {
            let ri = resid[i];
            if ri == 0.0 {
                continue;
            }
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                rc[p.col_idx[q]] += 0.25 * p.values[q] * ri;
            }
        }
        let ec = self.cycle(level + 1, &rc);
        let mut pe = vec![0.0; n];
        p.matvec(&ec, &mut pe);
        for (xi, pi) in x.iter_mut().zip(&pe) {
            *xi += pi;
        }
        // post-smooth
        lvl.a.matvec(&x, &mut ax);
        for ((xi, ri), (ai, di)) in x.iter_mut().zip(r).zip(ax.iter().zip(&lvl.inv_diag)) {
            *xi += JACOBI_OMEGA * di * (ri - ai);
        }
        x
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }
}
