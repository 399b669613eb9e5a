//! Small dense linear-algebra kernel: row-major matrices, mat-vec and a
//! Householder least-squares solver.

use crate::error::{dims, invalid, Error, Result};

/// Relative pivot tolerance below which a triangular factor is treated as singular.
pub const RANK_TOL: f64 = 1e-10;

/// Row-major dense matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dims(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(dims("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix whose columns are the given slices.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(dims("columns of different lengths"));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                data[r * cols + c] = *v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// `A v`.
pub fn mat_vec(a: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if a.cols != v.len() {
        return Err(dims(format!(
            "matrix has {} columns, vector has {} entries",
            a.cols,
            v.len()
        )));
    }
    Ok((0..a.rows).map(|r| dot(a.row(r), v)).collect())
}

/// `Aᵀ v`.
pub fn mat_t_vec(a: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if a.rows != v.len() {
        return Err(dims(format!(
            "matrix has {} rows, vector has {} entries",
            a.rows,
            v.len()
        )));
    }
    let mut out = vec![0.0; a.cols];
    for (r, &vr) in v.iter().enumerate() {
        for (o, &x) in out.iter_mut().zip(a.row(r)) {
            *o += x * vr;
        }
    }
    Ok(out)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Solves `argmin_z ‖A z − b‖₂` with Householder QR.
///
/// Fails with [`Error::Singular`] when a diagonal entry of `R` is smaller than
/// [`RANK_TOL`] times the largest one.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows, a.cols);
    if b.len() != m {
        return Err(dims(format!("matrix has {m} rows, rhs has {} entries", b.len())));
    }
    if m < n {
        return Err(dims(format!("underdetermined system: {m} rows < {n} columns")));
    }
    // Column-major working copy.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| a.column(c)).collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; n];

    for k in 0..n {
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        // v = x - alpha e_1, stored in place of column k.
        let mut v = cols[k][k..].to_vec();
        v[0] -= alpha;
        let v_norm_sq = norm_sq(&v);
        diag[k] = alpha;
        if v_norm_sq == 0.0 {
            continue;
        }
        for col in cols.iter_mut().skip(k + 1) {
            let s = 2.0 * dot(&v, &col[k..]) / v_norm_sq;
            for (x, vi) in col[k..].iter_mut().zip(&v) {
                *x -= s * vi;
            }
        }
        let s = 2.0 * dot(&v, &rhs[k..]) / v_norm_sq;
        for (x, vi) in rhs[k..].iter_mut().zip(&v) {
            *x -= s * vi;
        }
    }

    let largest = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    if let Some(pivot) = diag.iter().map(|d| d.abs()).find(|d| *d <= RANK_TOL * largest) {
        return Err(Error::Singular { pivot, largest });
    }

    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for c in k + 1..n {
            s -= cols[c][k] * z[c];
        }
        z[k] = s / diag[k];
    }
    Ok(z)
}
