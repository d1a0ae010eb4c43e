//! Uniform discretisation of the unit square with lexicographic interior indexing.
//!
//! The computational grid has `(n+2) x (n+2)` nodes `(x_j, y_k) = (j*dx, k*dx)`
//! for `j, k = 0..=n+1` with spacing `dx = 1/(n+1)`. Only the `n^2` interior
//! nodes carry unknowns; they are stored in lexicographic order
//! `(1,1), (2,1), ..., (n,1), (1,2), ..., (n,n)`, i.e. index `(k-1)*n + (j-1)`.
//! Dirichlet data on the `4(n+1)` boundary nodes lives in [`BoundaryData`].

use std::io::Write;

use crate::error::{CoreError, Result};

/// Uniform grid on `(0,1)^2` with `n` interior nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidArgument(
                "grid needs at least one interior node per axis".into(),
            ));
        }
        Ok(Grid { n })
    }

    /// Interior nodes per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `1/(n+1)`.
    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    /// Number of interior nodes, `n^2`.
    #[inline]
    pub fn num_interior(&self) -> usize {
        self.n * self.n
    }

    /// Coordinates of node `(j, k)` for `j, k = 0..=n+1`.
    #[inline]
    pub fn node(&self, j: usize, k: usize) -> (f64, f64) {
        let dx = self.dx();
        (j as f64 * dx, k as f64 * dx)
    }

    /// Lexicographic index of interior node `(j, k)`, `1 <= j, k <= n`.
    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        debug_assert!(j >= 1 && j <= self.n && k >= 1 && k <= self.n);
        (k - 1) * self.n + (j - 1)
    }

    /// Inverse of [`Grid::index`].
    #[inline]
    pub fn node_of_index(&self, idx: usize) -> (usize, usize) {
        debug_assert!(idx < self.num_interior());
        (idx % self.n + 1, idx / self.n + 1)
    }

    #[inline]
    pub fn is_interior(&self, j: usize, k: usize) -> bool {
        j >= 1 && j <= self.n && k >= 1 && k <= self.n
    }
}

/// Interior nodal values in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            n: grid.n(),
            values: vec![0.0; grid.num_interior()],
        }
    }

    /// Wraps a raw vector; the length must be `n^2` and all entries finite.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_interior() {
            return Err(CoreError::DimensionMismatch(format!(
                "field length {} does not match grid interior size {}",
                values.len(),
                grid.num_interior()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            let (j, k) = grid.node_of_index(bad);
            let (x, y) = grid.node(j, k);
            return Err(CoreError::NonFiniteSample { x, y });
        }
        Ok(Field { n: grid.n(), values })
    }

    /// Interior nodes per axis of the owning grid.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(k - 1) * self.n + (j - 1)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.values[(k - 1) * self.n + (j - 1)] = v;
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self += other`
    pub fn add_assign(&mut self, other: &Field) {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    /// Elementwise difference `self - other`.
    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Field {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Dirichlet data on the boundary nodes of the `(n+2)^2` grid.
///
/// Bottom (`k = 0`) and top (`k = n+1`) rows store all `n+2` values including
/// the four corners; the left (`j = 0`) and right (`j = n+1`) columns store
/// the remaining `k = 1..=n` values, so each corner is stored exactly once
/// and the total is `4(n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    n: usize,
    bottom: Vec<f64>,
    top: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.n();
        BoundaryData {
            n,
            bottom: vec![0.0; n + 2],
            top: vec![0.0; n + 2],
            left: vec![0.0; n],
            right: vec![0.0; n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored boundary nodes, `4(n+1)`.
    pub fn num_nodes(&self) -> usize {
        4 * (self.n + 1)
    }

    /// Value at boundary node `(j, k)`. Panics if `(j, k)` is not a boundary
    /// node of the grid.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        let n = self.n;
        if k == 0 {
            self.bottom[j]
        } else if k == n + 1 {
            self.top[j]
        } else if j == 0 {
            self.left[k - 1]
        } else if j == n + 1 {
            self.right[k - 1]
        } else {
            panic!("({j}, {k}) is not a boundary node");
        }
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        let n = self.n;
        if k == 0 {
            self.bottom[j] = v;
        } else if k == n + 1 {
            self.top[j] = v;
        } else if j == 0 {
            self.left[k - 1] = v;
        } else if j == n + 1 {
            self.right[k - 1] = v;
        } else {
            panic!("({j}, {k}) is not a boundary node");
        }
    }

    /// Elementwise difference `self - other`.
    pub fn sub(&self, other: &BoundaryData) -> BoundaryData {
        assert_eq!(self.n, other.n, "boundary dimension mismatch");
        let pair = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        BoundaryData {
            n: self.n,
            bottom: pair(&self.bottom, &other.bottom),
            top: pair(&self.top, &other.top),
            left: pair(&self.left, &other.left),
            right: pair(&self.right, &other.right),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.bottom
            .iter()
            .chain(&self.top)
            .chain(&self.left)
            .chain(&self.right)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Samples `g` at every interior node.
pub fn sample_interior<F: Fn(f64, f64) -> f64>(grid: &Grid, g: F) -> Result<Field> {
    let n = grid.n();
    let mut values = Vec::with_capacity(grid.num_interior());
    for k in 1..=n {
        for j in 1..=n {
            let (x, y) = grid.node(j, k);
            let v = g(x, y);
            if !v.is_finite() {
                return Err(CoreError::NonFiniteSample { x, y });
            }
            values.push(v);
        }
    }
    Ok(Field { n, values })
}

/// Samples `g` at every boundary node.
pub fn sample_boundary<F: Fn(f64, f64) -> f64>(grid: &Grid, g: F) -> Result<BoundaryData> {
    let n = grid.n();
    let mut bc = BoundaryData::zeros(grid);
    let eval = |j: usize, k: usize| -> Result<f64> {
        let (x, y) = grid.node(j, k);
        let v = g(x, y);
        if !v.is_finite() {
            return Err(CoreError::NonFiniteSample { x, y });
        }
        Ok(v)
    };
    for j in 0..=n + 1 {
        let b = eval(j, 0)?;
        bc.bottom[j] = b;
        let t = eval(j, n + 1)?;
        bc.top[j] = t;
    }
    for k in 1..=n {
        bc.left[k - 1] = eval(0, k)?;
        bc.right[k - 1] = eval(n + 1, k)?;
    }
    Ok(bc)
}

/// Reads the value at any node `(j, k)`, interior or boundary.
#[inline]
pub(crate) fn node_value(grid: &Grid, u: &Field, bc: &BoundaryData, j: usize, k: usize) -> f64 {
    if grid.is_interior(j, k) {
        u.get(j, k)
    } else {
        bc.get(j, k)
    }
}

/// Writes the full grid (boundary included) as CSV with header `x,y,u`.
///
/// Rows run over increasing `k`, then `j`; floats carry 17 significant digits
/// so the dump round-trips f64 exactly.
pub fn write_field_csv<W: Write>(
    w: &mut W,
    grid: &Grid,
    u: &Field,
    bc: &BoundaryData,
) -> Result<()> {
    writeln!(w, "x,y,u")?;
    let n = grid.n();
    for k in 0..=n + 1 {
        for j in 0..=n + 1 {
            let (x, y) = grid.node(j, k);
            let v = node_value(grid, u, bc, j, k);
            writeln!(w, "{x:.16e},{y:.16e},{v:.16e}")?;
        }
    }
    Ok(())
}
