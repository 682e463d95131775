//! Polynomial-code matrix multiplication.
//!
//! `X` is cut into `k̄` row blocks `R_j` and `Y` into `k̄` column blocks
//! `Y_l`. Worker `i` multiplies the two evaluations
//! `(Σ_j R_j γ_i^j)(Σ_l Y_l γ_i^{l·k̄})`, which is the matrix polynomial
//! `Σ_{j,l} R_j Y_l x^{j + l·k̄}` at `γ_i`. The exponents `j + l·k̄` cover
//! `0 … k̄²−1` exactly once, so any `k̄²` evaluations determine every cross
//! block `R_j Y_l` by interpolation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{arg, Error, Result};
use crate::field::make_eval_points;
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::poly::{vandermonde, vandermonde_inverse};

/// Interpolation tolerance for the Vandermonde residual and the imaginary
/// residue of decoded blocks (relative, floored at 1).
pub const INTERPOLATION_THRESHOLD: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct CmmParams {
    k_bar: usize,
    gammas: Vec<Complex64>,
}

impl CmmParams {
    /// `n` distinct points on the unit circle for `k̄` partitions.
    pub fn new(k_bar: usize, n: usize, seed: u64) -> Result<Self> {
        let gammas = make_eval_points(n, None, seed)?.points().to_vec();
        Self::with_points(k_bar, gammas)
    }

    pub fn with_points(k_bar: usize, gammas: Vec<Complex64>) -> Result<Self> {
        if k_bar == 0 {
            return arg("k̄ must be at least 1");
        }
        if gammas.len() < k_bar * k_bar {
            return arg(format!(
                "{} points cannot reach the recovery threshold {}",
                gammas.len(),
                k_bar * k_bar
            ));
        }
        let mut seen = vec![false; k_bar * k_bar];
        for j in 0..k_bar {
            for l in 0..k_bar {
                let e = j * Self::A + l * k_bar;
                assert!(!seen[e], "exponent {e} repeats");
                seen[e] = true;
            }
        }
        Ok(Self { k_bar, gammas })
    }

    /// Exponent step for the row-block side.
    pub const A: usize = 1;

    /// Exponent step for the column-block side.
    pub fn b(&self) -> usize {
        self.k_bar
    }

    pub fn k_bar(&self) -> usize {
        self.k_bar
    }

    pub fn n(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[Complex64] {
        &self.gammas
    }

    pub fn recovery_threshold(&self) -> usize {
        self.k_bar * self.k_bar
    }
}

/// `Σ_j X_j γ^{j·step}`.
pub fn cmm_encode(blocks: &[RealMatrix], step: usize, gamma: Complex64) -> Result<ComplexMatrix> {
    let Some(first) = blocks.first() else {
        return arg("nothing to encode");
    };
    if blocks.iter().any(|b| b.shape() != first.shape()) {
        return arg("blocks differ in shape");
    }
    let mut acc = ComplexMatrix::zeros(first.rows(), first.cols());
    for (j, b) in blocks.iter().enumerate() {
        acc.add_scaled_real(gamma.powu((j * step) as u32), b)?;
    }
    Ok(acc)
}

/// One worker's product of encodings.
#[derive(Clone, Debug)]
pub struct CmmWorkerPayload {
    pub worker_id: usize,
    pub product: ComplexMatrix,
}

/// A decoded product and its communication cost.
#[derive(Clone, Debug)]
pub struct CmmOutcome {
    pub product: RealMatrix,
    pub responders: Vec<usize>,
    /// Complex symbols the master sends (two encodings per worker).
    pub symbols_sent: usize,
    /// Complex symbols received from the responders.
    pub symbols_received: usize,
    pub imag_residue: f64,
}

fn complex_matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.matmul(b).expect("encodings have compatible shapes")
}

/// Multiplies `R_j` row blocks by `Y_l` column blocks through the coded
/// workers `responders` (the first `k̄²` are used). Returns the `k̄ × k̄`
/// grid of cross products, indexed `[j][l]`.
fn coded_cross_products(
    row_blocks: &[RealMatrix],
    col_blocks: &[RealMatrix],
    params: &CmmParams,
    responders: &[usize],
) -> Result<(Vec<Vec<RealMatrix>>, f64)> {
    let kb = params.k_bar;
    let need = params.recovery_threshold();
    if row_blocks.len() != kb || col_blocks.len() != kb {
        return arg(format!("expected {kb} row and column blocks"));
    }
    if row_blocks[0].cols() != col_blocks[0].rows() {
        return arg(format!(
            "inner dimensions differ: {} vs {}",
            row_blocks[0].cols(),
            col_blocks[0].rows()
        ));
    }
    if responders.len() < need {
        return Err(Error::Unrecoverable {
            stage: "multiplication".into(),
            received: responders.len(),
            needed: need,
        });
    }
    let used = &responders[..need];
    let mut sorted = used.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return arg("duplicate responders");
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= params.n()) {
        return arg(format!("responder {bad} out of range for {} workers", params.n()));
    }

    let payloads: Vec<CmmWorkerPayload> = used
        .par_iter()
        .map(|&i| {
            let g = params.gammas[i];
            let left = cmm_encode(row_blocks, CmmParams::A, g)?;
            let right = cmm_encode(col_blocks, params.b(), g)?;
            Ok(CmmWorkerPayload {
                worker_id: i,
                product: complex_matmul(&left, &right),
            })
        })
        .collect::<Result<_>>()?;

    let points: Vec<Complex64> = used.iter().map(|&i| params.gammas[i]).collect();
    let (vinv, _) = vandermonde_inverse(&points);
    let residual = vandermonde(&points, need)
        .matmul(&vinv)?
        .sub(&ComplexMatrix::identity(need))?
        .frobenius_norm();
    if residual > INTERPOLATION_THRESHOLD {
        return Err(Error::DecodeIntegrity(format!(
            "interpolation residual {residual:e} for responders {:?}",
            used.iter().map(|i| i + 1).collect::<Vec<_>>()
        )));
    }

    let (rows, cols) = payloads[0].product.shape();
    let mut grid = vec![Vec::with_capacity(kb); kb];
    let mut residue: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (j, grid_row) in grid.iter_mut().enumerate() {
        for l in 0..kb {
            let e = j * CmmParams::A + l * kb;
            let mut c = ComplexMatrix::zeros(rows, cols);
            for (i, p) in payloads.iter().enumerate() {
                c.add_scaled(vinv[(e, i)], &p.product)?;
            }
            residue = residue.max(c.max_imag());
            let re = c.real_part();
            scale = scale.max(re.max_abs());
            grid_row.push(re);
        }
    }
    if residue > INTERPOLATION_THRESHOLD * scale {
        return Err(Error::DecodeIntegrity(format!(
            "imaginary residue {residue:e} after interpolation"
        )));
    }
    Ok((grid, residue))
}

fn assemble(grid: &[Vec<RealMatrix>]) -> Result<RealMatrix> {
    let rows: Vec<RealMatrix> = grid
        .iter()
        .map(|r| RealMatrix::hcat(r))
        .collect::<Result<_>>()?;
    RealMatrix::vcat(&rows)
}

/// `X·Y` through the coded workers. `X` is split into `k̄` row blocks and
/// `Y` into `k̄` column blocks, both zero-padded to equal sizes.
pub fn cmm_rowblock_product(
    x: &RealMatrix,
    y: &RealMatrix,
    params: &CmmParams,
    responders: &[usize],
) -> Result<CmmOutcome> {
    if x.cols() != y.rows() {
        return arg(format!("cannot multiply {:?} by {:?}", x.shape(), y.shape()));
    }
    let kb = params.k_bar;
    let rb = x.rows().div_ceil(kb).max(1);
    let cb = y.cols().div_ceil(kb).max(1);
    let xp = x.resized(rb * kb, x.cols());
    let yp = y.resized(y.rows(), cb * kb);
    let row_blocks: Vec<RealMatrix> = (0..kb).map(|j| xp.row_slice(j * rb..(j + 1) * rb)).collect();
    let col_blocks: Vec<RealMatrix> = (0..kb).map(|l| yp.column_slice(l * cb..(l + 1) * cb)).collect();
    let (grid, imag_residue) = coded_cross_products(&row_blocks, &col_blocks, params, responders)?;
    let full = assemble(&grid)?;
    let need = params.recovery_threshold();
    Ok(CmmOutcome {
        product: full.resized(x.rows(), y.cols()),
        responders: responders[..need].to_vec(),
        symbols_sent: params.n() * (rb * x.cols() + y.rows() * cb),
        symbols_received: need * rb * cb,
        imag_residue,
    })
}

/// `AᵀA` through the coded workers, with `A` split into `k̄` column blocks.
pub fn cmm_gram(a: &RealMatrix, params: &CmmParams, responders: &[usize]) -> Result<CmmOutcome> {
    let kb = params.k_bar;
    let t = a.cols().div_ceil(kb).max(1);
    let ap = a.resized(a.rows(), t * kb);
    let col_blocks: Vec<RealMatrix> = (0..kb).map(|l| ap.column_slice(l * t..(l + 1) * t)).collect();
    let row_blocks: Vec<RealMatrix> = col_blocks.iter().map(RealMatrix::transpose).collect();
    let (grid, imag_residue) = coded_cross_products(&row_blocks, &col_blocks, params, responders)?;
    let full = assemble(&grid)?;
    let need = params.recovery_threshold();
    Ok(CmmOutcome {
        product: full.resized(a.cols(), a.cols()),
        responders: responders[..need].to_vec(),
        // Only the column-block encoding travels; the transpose is local.
        symbols_sent: params.n() * a.rows() * t,
        symbols_received: need * t * t,
        imag_residue,
    })
}
