//! Complex polynomial helpers. Coefficients are stored in ascending order
//! of degree.

use num_complex::Complex64;

use crate::matrix::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Coefficients of `∏ (x − r)`, plus the number of complex multiply-adds.
pub fn from_roots(roots: &[Complex64]) -> (Vec<Complex64>, u64) {
    let mut coeffs = Vec::with_capacity(roots.len() + 1);
    coeffs.push(ONE);
    let mut ops = 0u64;
    for &r in roots {
        coeffs.push(ZERO);
        // Multiply by (x − r) in place, highest degree first.
        for d in (1..coeffs.len()).rev() {
            coeffs[d] = coeffs[d - 1] - r * coeffs[d];
            ops += 1;
        }
        coeffs[0] *= -r;
        ops += 1;
    }
    (coeffs, ops)
}

pub fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
}

/// `p(x) / (x − root)` assuming `root` is a root of `p`. Returns the
/// quotient (degree one lower) and the op count.
fn deflate(coeffs: &[Complex64], root: Complex64) -> (Vec<Complex64>, u64) {
    let deg = coeffs.len() - 1;
    let mut quotient = vec![ZERO; deg];
    let mut carry = ZERO;
    for d in (1..=deg).rev() {
        carry = coeffs[d] + carry * root;
        quotient[d - 1] = carry;
    }
    (quotient, deg as u64)
}

/// Inverse of the Vandermonde matrix `V[i][j] = x_iʲ` (rows = points).
///
/// Column `i` of `V⁻¹` holds the coefficients of the Lagrange basis
/// polynomial `L_i`, so the inverse is assembled in `O(k²)` operations
/// from the node polynomial `∏(x − x_m)` by one deflation per point.
/// Returns the inverse and the number of complex multiply-adds spent.
pub fn vandermonde_inverse(points: &[Complex64]) -> (ComplexMatrix, u64) {
    let k = points.len();
    let (node_poly, mut ops) = from_roots(points);
    let mut inv = ComplexMatrix::zeros(k, k);
    for (i, &xi) in points.iter().enumerate() {
        let (quotient, dops) = deflate(&node_poly, xi);
        // quotient(x_i) = ∏_{m≠i} (x_i − x_m)
        let denom = horner(&quotient, xi);
        let scale = denom.inv();
        ops += dops + quotient.len() as u64 + quotient.len() as u64 + 1;
        for (j, c) in quotient.iter().enumerate() {
            inv[(j, i)] = c * scale;
        }
    }
    (inv, ops)
}

/// Vandermonde matrix with `cols` columns: `V[i][j] = x_iʲ`.
pub fn vandermonde(points: &[Complex64], cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(points.len(), cols, |i, j| points[i].powu(j as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(k: usize, q: usize) -> Vec<Complex64> {
        (1..=k).map(|j| Complex64::from_polar(1.0, TAU * (3 * j % q) as f64 / q as f64)).collect()
    }

    #[test]
    fn roots_expand_correctly() {
        let roots = [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0)];
        // (x − 1)(x + 2) = x² + x − 2
        let (c, _) = from_roots(&roots);
        assert_eq!(c, vec![Complex64::new(-2.0, 0.0), ONE, ONE]);
        for r in roots {
            assert!(horner(&c, r).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_product_is_one() {
        assert_eq!(from_roots(&[]).0, vec![ONE]);
    }

    #[test]
    fn vandermonde_inverse_residual() {
        for k in [1, 2, 3, 5, 9, 16, 32] {
            let pts = circle(k, 3 * k + 1);
            let (inv, _) = vandermonde_inverse(&pts);
            let v = vandermonde(&pts, k);
            let r = v.matmul(&inv).unwrap().sub(&ComplexMatrix::identity(k)).unwrap();
            assert!(r.frobenius_norm() <= 1e-8 * k as f64, "k={k}: {}", r.frobenius_norm());
        }
    }

    #[test]
    fn ops_grow_quadratically() {
        let ratio = |k: usize| vandermonde_inverse(&circle(k, 37)).1 as f64 / (k * k) as f64;
        let (r3, r9, r30) = (ratio(3), ratio(9), ratio(30));
        assert!(r3 / r30 < 2.0 && r30 / r3 < 2.0, "{r3} {r9} {r30}");
    }
}
