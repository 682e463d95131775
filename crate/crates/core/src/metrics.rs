//! Error metrics between an estimate and a reference matrix.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::{dot, norm2, RealMatrix};

const POWER_ITERATIONS: usize = 200;
const POWER_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Spectral norm of the difference.
    pub l2: f64,
    /// Frobenius norm of the difference.
    pub frobenius: f64,
    /// Frobenius error divided by the reference's Frobenius norm.
    pub relative_frobenius: f64,
}

impl ErrorMetrics {
    /// Entrywise mean of a set of metrics.
    pub fn mean(all: &[ErrorMetrics]) -> ErrorMetrics {
        let n = all.len().max(1) as f64;
        ErrorMetrics {
            l2: all.iter().map(|m| m.l2).sum::<f64>() / n,
            frobenius: all.iter().map(|m| m.frobenius).sum::<f64>() / n,
            relative_frobenius: all.iter().map(|m| m.relative_frobenius).sum::<f64>() / n,
        }
    }
}

pub fn error_metrics(estimate: &RealMatrix, reference: &RealMatrix) -> Result<ErrorMetrics> {
    let diff = estimate.sub(reference)?;
    let frobenius = diff.frobenius_norm();
    let ref_norm = reference.frobenius_norm();
    Ok(ErrorMetrics {
        l2: spectral_norm(&diff),
        frobenius,
        relative_frobenius: if ref_norm > 0.0 {
            frobenius / ref_norm
        } else if frobenius == 0.0 {
            0.0
        } else {
            f64::INFINITY
        },
    })
}

/// Largest singular value by power iteration on `MᵀM`.
pub fn spectral_norm(m: &RealMatrix) -> f64 {
    let n = m.cols();
    if n == 0 || m.rows() == 0 || m.max_abs() == 0.0 {
        return 0.0;
    }
    // Fixed, non-symmetric start vector so results are reproducible.
    let mut v: Vec<f64> = (0..n)
        .map(|j| 1.0 + (j as f64 * 0.618_033_988_749_895).fract())
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mv = m.matvec(&v);
        let mut w = m.matvec_t(&mv);
        let next = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
        let done = (next - lambda).abs() <= POWER_TOLERANCE * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    // One last Rayleigh quotient with the converged vector.
    let mv = m.matvec(&v);
    norm2(&mv).max(lambda.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_matrix, gaussian_vector};

    #[test]
    fn identical_inputs_have_zero_error() {
        let a = gaussian_matrix(4, 4, 1.0, 1);
        let m = error_metrics(&a, &a).unwrap();
        assert_eq!(m, ErrorMetrics::default());
    }

    #[test]
    fn diagonal_difference() {
        // ‖E‖_F = 10 with E = diag(6, 8); difference diag(3, 4).
        let reference = RealMatrix::diag(&[6.0, 8.0]);
        let estimate = RealMatrix::diag(&[9.0, 12.0]);
        let m = error_metrics(&estimate, &reference).unwrap();
        assert!((m.frobenius - 5.0).abs() < 1e-14);
        assert!((m.relative_frobenius - 0.5).abs() < 1e-14);
        assert!((m.l2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_spectral_norm_is_product_of_norms() {
        let u = gaussian_vector(6, 7);
        let v = gaussian_vector(4, 8);
        let uv = RealMatrix::from_fn(6, 4, |i, j| u[i] * v[j]);
        let closed = norm2(&u) * norm2(&v);
        assert!((spectral_norm(&uv) - closed).abs() <= 1e-12 * closed);
    }

    #[test]
    fn frobenius_matches_direct_summation() {
        let a = gaussian_matrix(7, 5, 3.0, 11);
        let b = gaussian_matrix(7, 5, 3.0, 12);
        let m = error_metrics(&a, &b).unwrap();
        let mut direct = 0.0;
        for i in 0..7 {
            for j in 0..5 {
                direct += (a[(i, j)] - b[(i, j)]).powi(2);
            }
        }
        assert!((m.frobenius.powi(2) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn spectral_never_exceeds_frobenius() {
        for seed in 0..5 {
            let a = gaussian_matrix(9, 6, 1.0, seed);
            assert!(spectral_norm(&a) <= a.frobenius_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(error_metrics(&RealMatrix::zeros(2, 2), &RealMatrix::zeros(2, 3)).is_err());
    }
}
