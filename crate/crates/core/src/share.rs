//! Lagrange secret sharing of the input matrix.
//!
//! `A = [A₁ ⋯ A_k]` is split into equal-width column blocks and encoded as
//! the matrix polynomial `f(x) = Σ_j η_j A_j L_j(x)`, where `L_j` is the
//! Lagrange basis over `β₁ … β_k`. Only the monomial coefficients of `f`
//! are broadcast in the clear. Holders of `β` and the inverse masks recover
//! `A_j = η_j⁻¹ f(β_j)`.

use num_complex::Complex64;

use crate::error::{arg, Error, Result};
use crate::field::{EvalPoints, MaskSet};
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::poly::vandermonde_inverse;

/// Maximum imaginary residue tolerated after unmasking, relative to the
/// largest real entry (floored at 1).
pub const RECONSTRUCTION_THRESHOLD: f64 = 1e-9;

/// Column blocks `A₁ … A_k` of equal width `T`, right-padded with zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPartition {
    blocks: Vec<RealMatrix>,
    original_cols: usize,
    pad_cols: usize,
}

impl BlockPartition {
    pub fn blocks(&self) -> &[RealMatrix] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn rows(&self) -> usize {
        self.blocks[0].rows()
    }

    pub fn block_width(&self) -> usize {
        self.blocks[0].cols()
    }

    pub fn original_cols(&self) -> usize {
        self.original_cols
    }

    pub fn pad_cols(&self) -> usize {
        self.pad_cols
    }

    /// Concatenates the blocks and drops the padding.
    pub fn assemble(&self) -> RealMatrix {
        let full = RealMatrix::hcat(&self.blocks).expect("blocks share a row count");
        full.column_slice(0..self.original_cols)
    }
}

/// Splits `a` into `k` consecutive column blocks, padding on the right with
/// zero columns until the width divides evenly.
pub fn partition_columns(a: &RealMatrix, k: usize) -> Result<BlockPartition> {
    if k == 0 {
        return arg("block count k must be at least 1");
    }
    let cols = a.cols();
    let width = cols.div_ceil(k).max(1);
    let padded = a.resized(a.rows(), width * k);
    let blocks = (0..k)
        .map(|j| padded.column_slice(j * width..(j + 1) * width))
        .collect();
    Ok(BlockPartition {
        blocks,
        original_cols: cols,
        pad_cols: width * k - cols,
    })
}

/// Monomial coefficients of the share polynomial `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShareBundle {
    coeffs: Vec<ComplexMatrix>,
    n_rows: usize,
    block_cols: usize,
    original_cols: usize,
}

impl ShareBundle {
    /// Rebuilds a bundle from raw coefficient matrices, e.g. after parsing.
    pub fn from_parts(coeffs: Vec<ComplexMatrix>, pad_cols: usize) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return arg("a share bundle needs at least one coefficient matrix");
        };
        let (n_rows, block_cols) = first.shape();
        if coeffs.iter().any(|c| c.shape() != (n_rows, block_cols)) {
            return arg("coefficient matrices differ in shape");
        }
        let total = block_cols * coeffs.len();
        if pad_cols > total {
            return arg(format!("padding {pad_cols} exceeds the encoded width {total}"));
        }
        Ok(Self {
            n_rows,
            block_cols,
            original_cols: total - pad_cols,
            coeffs,
        })
    }

    /// `coeffs()[d]` multiplies `x^d`.
    pub fn coeffs(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn original_cols(&self) -> usize {
        self.original_cols
    }

    pub fn pad_cols(&self) -> usize {
        self.block_cols * self.k() - self.original_cols
    }

    /// `f(x)` by Horner's rule on the coefficient matrices.
    pub fn evaluate(&self, x: Complex64) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.n_rows, self.block_cols);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(x);
            acc.add_scaled(Complex64::new(1.0, 0.0), c)
                .expect("coefficients share a shape");
        }
        acc
    }
}

/// What the secure channel delivers to each worker: `β` (through the
/// evaluation points) and the inverse masks.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretKeys {
    pub eval: EvalPoints,
    pub mask_inverses: Vec<Complex64>,
}

impl SecretKeys {
    pub fn new(eval: EvalPoints, masks: &MaskSet) -> Self {
        Self {
            eval,
            mask_inverses: masks.inverses().to_vec(),
        }
    }
}

pub fn encode_shares(
    part: &BlockPartition,
    eval: &EvalPoints,
    masks: &MaskSet,
) -> Result<ShareBundle> {
    let k = part.k();
    if eval.len() < k {
        return arg(format!("need {k} evaluation points, got {}", eval.len()));
    }
    if masks.len() != k {
        return arg(format!("need {k} masks, got {}", masks.len()));
    }
    // Column j of V⁻¹ holds the coefficients of L_j.
    let (basis, _) = vandermonde_inverse(&eval.points()[..k]);
    let (rows, width) = (part.rows(), part.block_width());
    let coeffs = (0..k)
        .map(|d| {
            let mut c = ComplexMatrix::zeros(rows, width);
            for (j, block) in part.blocks().iter().enumerate() {
                c.add_scaled_real(basis[(d, j)] * masks.etas()[j], block)
                    .expect("blocks share a shape");
            }
            c
        })
        .collect();
    Ok(ShareBundle {
        coeffs,
        n_rows: rows,
        block_cols: width,
        original_cols: part.original_cols(),
    })
}

/// Recovers `A` from the share polynomial and the secret keys.
pub fn reconstruct(bundle: &ShareBundle, keys: &SecretKeys) -> Result<RealMatrix> {
    let k = bundle.k();
    if keys.mask_inverses.len() != k || keys.eval.len() < k {
        return arg(format!(
            "keys hold {} masks and {} points, bundle needs {k}",
            keys.mask_inverses.len(),
            keys.eval.len()
        ));
    }
    let blocks: Vec<ComplexMatrix> = (0..k)
        .map(|j| bundle.evaluate(keys.eval.point(j)).scale(keys.mask_inverses[j]))
        .collect();
    let residue = blocks.iter().map(ComplexMatrix::max_imag).fold(0.0, f64::max);
    let reals: Vec<RealMatrix> = blocks.iter().map(ComplexMatrix::real_part).collect();
    let scale = reals.iter().map(RealMatrix::max_abs).fold(1.0, f64::max);
    if residue > RECONSTRUCTION_THRESHOLD * scale {
        return Err(Error::ReconstructionIntegrity {
            residue,
            threshold: RECONSTRUCTION_THRESHOLD * scale,
        });
    }
    Ok(RealMatrix::hcat(&reals)?.column_slice(0..bundle.original_cols))
}

/// Complex symbols in the coefficient representation: `k·N·T`.
pub fn share_symbol_count(bundle: &ShareBundle) -> usize {
    bundle.k() * bundle.n_rows * bundle.block_cols
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_eval_points, make_mask_set};
    use crate::random::gaussian_matrix;

    fn setup(a: &RealMatrix, k: usize, seed: u64) -> (ShareBundle, SecretKeys, MaskSet) {
        let part = partition_columns(a, k).unwrap();
        let eval = make_eval_points(k, None, seed).unwrap();
        let masks = make_mask_set(k, eval.q(), seed + 1).unwrap();
        let bundle = encode_shares(&part, &eval, &masks).unwrap();
        (bundle, SecretKeys::new(eval, &masks), masks)
    }

    #[test]
    fn even_and_padded_partitions() {
        let a = gaussian_matrix(4, 4, 1.0, 0);
        let p = partition_columns(&a, 2).unwrap();
        assert_eq!((p.k(), p.block_width(), p.pad_cols()), (2, 2, 0));
        assert_eq!(p.assemble(), a);

        let a = gaussian_matrix(4, 5, 1.0, 0);
        let p = partition_columns(&a, 2).unwrap();
        assert_eq!((p.rows(), p.block_width(), p.pad_cols()), (4, 3, 1));
        assert!(p.blocks()[1].column(2).iter().all(|&v| v == 0.0));
        assert_eq!(p.assemble(), a);
        assert!(partition_columns(&a, 0).is_err());
    }

    #[test]
    fn single_block_share_is_the_masked_matrix() {
        let a = gaussian_matrix(3, 3, 1.0, 1);
        let (bundle, keys, masks) = setup(&a, 1, 4);
        let want = a.to_complex().scale(masks.etas()[0]);
        assert!(bundle.coeffs()[0].sub(&want).unwrap().max_abs() < 1e-15);
        assert!(reconstruct(&bundle, &keys).unwrap().max_abs_diff(&a).unwrap() < 1e-15);
    }

    #[test]
    fn equal_blocks_interpolate_a_constant() {
        let a = RealMatrix::hcat(&[RealMatrix::identity(2), RealMatrix::identity(2)]).unwrap();
        let part = partition_columns(&a, 2).unwrap();
        let eval = make_eval_points(2, None, 0).unwrap();
        let masks = MaskSet::from_etas(vec![Complex64::new(1.0, 0.0); 2]);
        let bundle = encode_shares(&part, &eval, &masks).unwrap();
        let id = RealMatrix::identity(2).to_complex();
        for j in 0..2 {
            assert!(bundle.evaluate(eval.point(j)).sub(&id).unwrap().max_abs() < 1e-12);
        }
        assert!(bundle.coeffs()[1].max_abs() < 1e-12);
    }

    #[test]
    fn evaluations_hit_masked_blocks() {
        let a = gaussian_matrix(6, 6, 1.0, 3);
        let (bundle, keys, masks) = setup(&a, 3, 3);
        let part = partition_columns(&a, 3).unwrap();
        for j in 0..3 {
            let want = part.blocks()[j].to_complex().scale(masks.etas()[j]);
            let got = bundle.evaluate(keys.eval.point(j));
            assert!(got.sub(&want).unwrap().max_abs() < 1e-10);
        }
        assert!(reconstruct(&bundle, &keys).unwrap().max_abs_diff(&a).unwrap() < 1e-9);
    }

    #[test]
    fn shuffled_mask_inverses_corrupt_the_result() {
        let a = gaussian_matrix(6, 6, 1.0, 3);
        let (bundle, mut keys, _) = setup(&a, 3, 3);
        keys.mask_inverses.rotate_left(1);
        match reconstruct(&bundle, &keys) {
            Ok(wrong) => assert!(wrong.max_abs_diff(&a).unwrap() > 1e-3),
            Err(Error::ReconstructionIntegrity { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn symbol_counts() {
        let cases = [((4, 4), 2, 16), ((6, 6), 3, 36), ((4, 5), 2, 24)];
        for ((r, c), k, want) in cases {
            let (bundle, _, _) = setup(&gaussian_matrix(r, c, 1.0, 0), k, 0);
            assert_eq!(share_symbol_count(&bundle), want);
        }
    }

    #[test]
    fn key_length_mismatch_rejected() {
        let a = gaussian_matrix(4, 4, 1.0, 0);
        let (bundle, mut keys, _) = setup(&a, 2, 0);
        keys.mask_inverses.pop();
        assert!(matches!(reconstruct(&bundle, &keys), Err(Error::Argument(_))));
    }
}
