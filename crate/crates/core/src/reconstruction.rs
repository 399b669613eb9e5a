//! Orthogonal matching pursuit, used as the practical stand-in for the
//! conditional-mean estimate `E[X | Y = y]`.

use crate::error::{dims, invalid, Error, Result};
use crate::numerics::{least_squares, mat_t_vec, norm_sq, DenseMatrix};
use crate::sparse_source::SensingMatrix;

/// Relative correlation below which the residual is treated as fully explained.
pub const EXHAUSTED_TOL: f64 = 1e-12;

/// OMP output: the estimate in `R^M` plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    pub estimate: Vec<f64>,
    /// Selected columns in selection order.
    pub support: Vec<usize>,
    pub residual_norm: f64,
    /// Residual norm after each accepted selection, starting with `‖y‖`.
    pub residual_history: Vec<f64>,
    /// Columns rejected because they made the support rank deficient.
    pub dropped: Vec<usize>,
}

/// Recovers a `K`-sparse estimate of `x` from `y ≈ Φx`.
///
/// Runs `K` greedy selections. Each picks the unselected column with the
/// largest absolute correlation with the residual (lowest index on ties) and
/// re-solves least squares on the accumulated support. A column that makes the
/// support rank deficient is dropped and the next best one is tried. Selection
/// stops early only when the residual has no correlation left with any
/// remaining column, e.g. for `y = 0`.
pub fn omp_reconstruct(phi: &SensingMatrix, y: &[f64], k: usize) -> Result<SparseEstimate> {
    let a = phi.matrix();
    let (n, m) = (a.rows(), a.cols());
    if y.len() != n {
        return Err(dims(format!("measurement has {} entries, expected {n}", y.len())));
    }
    if k >= n {
        return Err(invalid(format!("sparsity {k} must be below the measurement count {n}")));
    }
    let y_norm = norm_sq(y).sqrt();
    let mut excluded = vec![false; m];
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut coeffs: Vec<f64> = Vec::new();
    let mut residual = y.to_vec();
    let mut history = vec![y_norm];
    let mut dropped = Vec::new();

    'outer: while support.len() < k {
        let corr = mat_t_vec(a, &residual)?;
        loop {
            let mut best: Option<(usize, f64)> = None;
            for (c, v) in corr.iter().enumerate() {
                if excluded[c] {
                    continue;
                }
                let mag = v.abs();
                if best.is_none_or(|(_, b)| mag > b) {
                    best = Some((c, mag));
                }
            }
            let Some((col, mag)) = best else { break 'outer };
            if mag <= EXHAUSTED_TOL * y_norm {
                break 'outer;
            }
            excluded[col] = true;
            support.push(col);
            let cols: Vec<Vec<f64>> = support.iter().map(|&s| a.column(s)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let sub = DenseMatrix::from_columns(&refs)?;
            match least_squares(&sub, y) {
                Ok(z) => {
                    coeffs = z;
                    residual = y.to_vec();
                    for (col, &c) in cols.iter().zip(&coeffs) {
                        for (r, v) in residual.iter_mut().zip(col) {
                            *r -= c * v;
                        }
                    }
                    history.push(norm_sq(&residual).sqrt());
                    continue 'outer;
                }
                Err(Error::Singular { .. }) => {
                    support.pop();
                    dropped.push(col);
                }
                Err(e) => return Err(e),
            }
        }
    }

    let mut estimate = vec![0.0; m];
    for (&s, &c) in support.iter().zip(&coeffs) {
        estimate[s] = c;
    }
    Ok(SparseEstimate {
        estimate,
        support,
        residual_norm: *history.last().expect("history starts with ‖y‖"),
        residual_history: history,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, mat_vec};
    use crate::sparse_source::{generate_sensing_matrix, generate_sparse_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phi(seed: u64, n: usize, m: usize) -> SensingMatrix {
        generate_sensing_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, m).unwrap()
    }

    #[test]
    fn zero_measurement_gives_zero_estimate() {
        let p = phi(1, 10, 20);
        let est = omp_reconstruct(&p, &[0.0; 10], 2).unwrap();
        assert_eq!(est.estimate, vec![0.0; 20]);
        assert!(est.support.is_empty());
        assert_eq!(est.residual_norm, 0.0);
    }

    #[test]
    fn single_atom_is_found() {
        let p = phi(2, 10, 20);
        let y: Vec<f64> = p.matrix().column(5).iter().map(|v| 3.0 * v).collect();
        let est = omp_reconstruct(&p, &y, 1).unwrap();
        assert_eq!(est.support, vec![5]);
        assert!((est.estimate[5] - 3.0).abs() < 1e-12);
        assert!(est.residual_norm < 1e-12);
    }

    #[test]
    fn exact_residual_stops_early() {
        let p = phi(3, 10, 20);
        let y = p.matrix().column(7);
        let est = omp_reconstruct(&p, &y, 3).unwrap();
        assert_eq!(est.support, vec![7]);
    }

    #[test]
    fn orthonormal_columns_recover_exactly() {
        // Columns 0..4 orthonormal (identity block), the rest random unit columns.
        let n = 4;
        let m = 8;
        let mut data = vec![0.0; n * m];
        for i in 0..n {
            data[i * m + i] = 1.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let extra = generate_sensing_matrix(&mut rng, n, m).unwrap();
        for r in 0..n {
            for c in n..m {
                data[r * m + c] = extra.matrix().get(r, c);
            }
        }
        let p = SensingMatrix::from_matrix(DenseMatrix::new(n, m, data).unwrap()).unwrap();
        let mut x = vec![0.0; m];
        x[1] = 2.0;
        x[3] = -0.5;
        let y = mat_vec(p.matrix(), &x).unwrap();
        let est = omp_reconstruct(&p, &y, 2).unwrap();
        let mut s = est.support.clone();
        s.sort();
        assert_eq!(s, vec![1, 3]);
        for (a, b) in est.estimate.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = phi(4, 10, 20);
        assert!(omp_reconstruct(&p, &[0.0; 9], 2).is_err());
        assert!(omp_reconstruct(&p, &[0.0; 10], 10).is_err());
    }

    #[test]
    fn residual_invariants_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = phi(5, 10, 20);
        for _ in 0..200 {
            let x = generate_sparse_vector(&mut rng, 20, 3).unwrap();
            let y = mat_vec(p.matrix(), &x.to_dense()).unwrap();
            let est = omp_reconstruct(&p, &y, 3).unwrap();
            assert!(est.support.len() <= 3);
            assert!(est.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            let fit = mat_vec(p.matrix(), &est.estimate).unwrap();
            let r: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
            let scale = norm_sq(&y).sqrt();
            for &s in &est.support {
                assert!(dot(&p.matrix().column(s), &r).abs() <= 1e-8 * scale);
            }
            // Re-solving on the achieved support reproduces the coefficients.
            let cols: Vec<Vec<f64>> = est.support.iter().map(|&s| p.matrix().column(s)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let z = least_squares(&DenseMatrix::from_columns(&refs).unwrap(), &y).unwrap();
            for (&s, c) in est.support.iter().zip(&z) {
                assert!((est.estimate[s] - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }
    }
}
