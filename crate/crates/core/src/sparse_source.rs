//! Exact `K`-sparse Gaussian sources, Gaussian sensing matrices with unit-norm
//! columns, and linear measurements `y = Φx + w`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{dims, invalid, Result};
use crate::numerics::{norm_sq, DenseMatrix};

/// A source realisation with exactly `K` nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dimension: usize,
    /// Sorted support indexes.
    support: Vec<usize>,
    /// Coefficients aligned with `support`.
    values: Vec<f64>,
}

impl SparseVector {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dimension];
        self.write_dense(&mut x);
        x
    }

    /// Writes the dense view into `out` (length `M`), zeroing off-support entries.
    pub fn write_dense(&self, out: &mut [f64]) {
        out.fill(0.0);
        for (&s, &v) in self.support.iter().zip(&self.values) {
            out[s] = v;
        }
    }
}

/// Draws a uniformly random `K`-subset of `0..M` with i.i.d. standard normal coefficients.
pub fn generate_sparse_vector<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> Result<SparseVector> {
    if k > m {
        return Err(invalid(format!("sparsity {k} exceeds dimension {m}")));
    }
    // Partial Fisher-Yates over the index array.
    let mut idx: Vec<usize> = (0..m).collect();
    for s in 0..k {
        let pick = rng.random_range(s..m);
        idx.swap(s, pick);
    }
    let mut pairs: Vec<(usize, f64)> = idx[..k]
        .iter()
        .map(|&s| (s, rng.sample::<f64, _>(StandardNormal)))
        .collect();
    pairs.sort_by_key(|p| p.0);
    // A standard normal draw of exactly 0.0 would break ‖x‖₀ = K.
    for p in &mut pairs {
        while p.1 == 0.0 {
            p.1 = rng.sample(StandardNormal);
        }
    }
    Ok(SparseVector {
        dimension: m,
        support: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
    })
}

/// An `N×M` sensing matrix (`N < M`) whose columns have unit ℓ₂ norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    matrix: DenseMatrix,
}

impl SensingMatrix {
    /// Wraps an existing matrix after checking the shape and the column norms.
    pub fn from_matrix(matrix: DenseMatrix) -> Result<Self> {
        if matrix.rows() >= matrix.cols() {
            return Err(invalid(format!(
                "sensing matrix must be wide, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        for c in 0..matrix.cols() {
            let n = norm_sq(&matrix.column(c)).sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("column {c} has norm {n}, expected 1")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn measurements(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dimension(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Measurement rate `N / M`.
    pub fn rate(&self) -> f64 {
        self.measurements() as f64 / self.dimension() as f64
    }
}

/// Draws `Φ_ij ~ N(0, 1/N)` i.i.d. and rescales each column to unit norm.
pub fn generate_sensing_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Result<SensingMatrix> {
    if n == 0 || n >= m {
        return Err(invalid(format!("need 0 < N < M, got N={n}, M={m}")));
    }
    let mut matrix = raw_gaussian_matrix(rng, n, m);
    let mut norms = vec![0.0; m];
    for r in 0..n {
        for (c, v) in matrix.row(r).iter().enumerate() {
            norms[c] += v * v;
        }
    }
    for v in norms.iter_mut() {
        *v = v.sqrt();
    }
    for (i, v) in matrix.data_mut().iter_mut().enumerate() {
        *v /= norms[i % m];
    }
    Ok(SensingMatrix { matrix })
}

/// Unnormalised `N(0, 1/N)` Gaussian matrix.
pub(crate) fn raw_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> DenseMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    let data = (0..n * m)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::new(n, m, data).expect("finite gaussian draws")
}

/// A measurement vector and the noise level that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: Vec<f64>,
    pub noise_std: f64,
}

/// `y = Φx + w` with `w ~ N(0, noise_std² I)`. With `noise_std = 0` the RNG is not touched.
pub fn measure<R: Rng + ?Sized>(
    phi: &SensingMatrix,
    x: &SparseVector,
    noise_std: f64,
    rng: &mut R,
) -> Result<Measurement> {
    let mut y = vec![0.0; phi.measurements()];
    measure_into(phi, x, noise_std, rng, &mut y)?;
    Ok(Measurement { y, noise_std })
}

pub(crate) fn measure_into<R: Rng + ?Sized>(
    phi: &SensingMatrix,
    x: &SparseVector,
    noise_std: f64,
    rng: &mut R,
    y: &mut [f64],
) -> Result<()> {
    if phi.dimension() != x.dimension() {
        return Err(dims(format!(
            "sensing matrix has {} columns, source has dimension {}",
            phi.dimension(),
            x.dimension()
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(invalid(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    let a = phi.matrix();
    for (r, yr) in y.iter_mut().enumerate() {
        let row = a.row(r);
        *yr = x.support.iter().zip(&x.values).map(|(&s, &v)| row[s] * v).sum();
    }
    if noise_std > 0.0 {
        for yr in y.iter_mut() {
            *yr += noise_std * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(())
}
