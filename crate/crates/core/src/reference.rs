//! Direct (factorisation-based) inverses, used as ground truth when scoring
//! the iterative estimates. Backed by nalgebra.

use nalgebra::DMatrix;

use crate::error::{arg, Error, Result};
use crate::matrix::RealMatrix;

fn to_na(m: &RealMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_na(m: &DMatrix<f64>) -> Result<RealMatrix> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Construction(
            "reference factorisation produced non-finite values".into(),
        ));
    }
    Ok(RealMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]))
}

/// Exact inverse via LU with partial pivoting.
pub fn exact_inverse(a: &RealMatrix) -> Result<RealMatrix> {
    if !a.is_square() {
        return arg(format!("expected a square matrix, got {:?}", a.shape()));
    }
    let inv = to_na(a)
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Construction("matrix is singular".into()))?;
    from_na(&inv)
}

/// Exact left pseudoinverse via the SVD.
pub fn exact_pseudoinverse(a: &RealMatrix) -> Result<RealMatrix> {
    let pinv = to_na(a)
        .pseudo_inverse(1e-13)
        .map_err(|e| Error::Construction(format!("pseudoinverse failed: {e}")))?;
    from_na(&pinv)
}

/// 2-norm condition number from the singular values.
pub fn condition_number(a: &RealMatrix) -> f64 {
    let sv = to_na(a).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::gaussian_matrix;

    #[test]
    fn inverse_and_pseudoinverse() {
        let a = gaussian_matrix(5, 5, 1.0, 2);
        let inv = exact_inverse(&a).unwrap();
        let r = a.matmul(&inv).unwrap().sub(&RealMatrix::identity(5)).unwrap();
        assert!(r.frobenius_norm() < 1e-10);

        let t = gaussian_matrix(8, 3, 1.0, 2);
        let p = exact_pseudoinverse(&t).unwrap();
        let r = p.matmul(&t).unwrap().sub(&RealMatrix::identity(3)).unwrap();
        assert!(r.frobenius_norm() < 1e-10);
        assert!(condition_number(&RealMatrix::diag(&[4.0, 2.0])) - 2.0 < 1e-12);
    }
}
