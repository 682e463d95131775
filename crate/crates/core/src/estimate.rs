//! Single-server inverse and pseudoinverse estimation.
//!
//! `A⁻¹` is estimated column by column: column `i` is the least-squares
//! solution of `A b = e_i`. The left pseudoinverse goes through the Gram
//! matrix `B = AᵀA`: row `i` of `B⁻¹` minimises `‖c B − e_iᵀ‖₂`, and the
//! result is `B̂⁻¹ Aᵀ`.
//!
//! Every column (or row) is an independent, sequential solve, so the
//! parallel map below produces bit-identical output regardless of thread
//! scheduling.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{arg, Result};
use crate::matrix::RealMatrix;
use crate::solver::{solve_least_squares, solve_least_squares_path, SolveReport, SolverConfig};

/// A block of estimated columns (or rows) together with solver telemetry.
#[derive(Clone, Debug)]
pub struct BlockEstimate {
    pub block: RealMatrix,
    /// Iterations spent on each column (or row), in order.
    pub iterations: Vec<usize>,
    pub ops: u64,
    pub all_converged: bool,
}

impl BlockEstimate {
    fn from_reports(block: RealMatrix, reports: &[SolveReport]) -> Self {
        Self {
            block,
            iterations: reports.iter().map(|r| r.iterations).collect(),
            ops: reports.iter().map(|r| r.ops).sum(),
            all_converged: reports.iter().all(|r| r.converged),
        }
    }
}

fn unit_vector(len: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    e[i] = 1.0;
    e
}

fn solve_units(
    system: &RealMatrix,
    indices: Range<usize>,
    cfg: &SolverConfig,
) -> Result<Vec<SolveReport>> {
    let n = system.rows();
    indices
        .into_par_iter()
        .map(|i| solve_least_squares(system, &unit_vector(n, i), cfg))
        .collect()
}

/// Columns `cols` (0-based, half-open) of the estimate of `A⁻¹`.
pub fn estimate_block_columns(
    a: &RealMatrix,
    cols: Range<usize>,
    cfg: &SolverConfig,
) -> Result<BlockEstimate> {
    if !a.is_square() {
        return arg(format!("expected a square matrix, got {:?}", a.shape()));
    }
    if cols.start > cols.end || cols.end > a.cols() {
        return arg(format!(
            "column range {cols:?} out of bounds for order {}",
            a.cols()
        ));
    }
    let reports = solve_units(a, cols, cfg)?;
    let columns: Vec<Vec<f64>> = reports.iter().map(|r| r.solution.clone()).collect();
    let block = RealMatrix::from_columns(a.rows(), &columns);
    Ok(BlockEstimate::from_reports(block, &reports))
}

/// Estimate of `A⁻¹` for square `A`.
pub fn estimate_inverse(a: &RealMatrix, cfg: &SolverConfig) -> Result<RealMatrix> {
    if !a.is_square() {
        return arg(format!("expected a square matrix, got {:?}", a.shape()));
    }
    Ok(estimate_block_columns(a, 0..a.cols(), cfg)?.block)
}

/// Rows `rows` (0-based, half-open) of the estimate of `B⁻¹`, where row `i`
/// minimises `‖c B − e_iᵀ‖₂`.
pub fn estimate_block_rows(
    b: &RealMatrix,
    rows: Range<usize>,
    cfg: &SolverConfig,
) -> Result<BlockEstimate> {
    if !b.is_square() {
        return arg(format!("expected a square matrix, got {:?}", b.shape()));
    }
    if rows.start > rows.end || rows.end > b.rows() {
        return arg(format!(
            "row range {rows:?} out of bounds for order {}",
            b.rows()
        ));
    }
    // c B = eᵀ  <=>  Bᵀ cᵀ = e
    let bt = b.transpose();
    let reports = solve_units(&bt, rows, cfg)?;
    let data: Vec<f64> = reports.iter().flat_map(|r| r.solution.iter().copied()).collect();
    let block = RealMatrix::new(reports.len(), b.cols(), data)?;
    Ok(BlockEstimate::from_reports(block, &reports))
}

/// Estimate of the left pseudoinverse `A† = (AᵀA)⁻¹Aᵀ` for tall `A`.
pub fn estimate_pseudoinverse(a: &RealMatrix, cfg: &SolverConfig) -> Result<RealMatrix> {
    let (n, m) = a.shape();
    if n <= m {
        return arg(format!(
            "left pseudoinverse needs more rows than columns, got {n}x{m}"
        ));
    }
    let at = a.transpose();
    let gram = at.matmul(a)?;
    let binv = estimate_block_rows(&gram, 0..m, cfg)?.block;
    binv.matmul(&at)
}

/// Estimates of `A⁻¹` at each tolerance in the strictly decreasing
/// `thresholds`, from a single solve per column.
pub fn estimate_inverse_path(
    a: &RealMatrix,
    cfg: &SolverConfig,
    thresholds: &[f64],
) -> Result<Vec<BlockEstimate>> {
    if !a.is_square() {
        return arg(format!("expected a square matrix, got {:?}", a.shape()));
    }
    let n = a.rows();
    let per_column = solve_path_units(a, 0..n, cfg, thresholds)?;
    Ok((0..thresholds.len())
        .map(|t| {
            let reports: Vec<SolveReport> = per_column.iter().map(|c| c[t].clone()).collect();
            let columns: Vec<Vec<f64>> = reports.iter().map(|r| r.solution.clone()).collect();
            BlockEstimate::from_reports(RealMatrix::from_columns(n, &columns), &reports)
        })
        .collect())
}

/// Estimates of `A†` at each tolerance in `thresholds`.
pub fn estimate_pseudoinverse_path(
    a: &RealMatrix,
    cfg: &SolverConfig,
    thresholds: &[f64],
) -> Result<Vec<BlockEstimate>> {
    let (n, m) = a.shape();
    if n <= m {
        return arg(format!(
            "left pseudoinverse needs more rows than columns, got {n}x{m}"
        ));
    }
    let at = a.transpose();
    let gram = at.matmul(a)?;
    let per_row = solve_path_units(&gram.transpose(), 0..m, cfg, thresholds)?;
    (0..thresholds.len())
        .map(|t| {
            let reports: Vec<SolveReport> = per_row.iter().map(|c| c[t].clone()).collect();
            let data: Vec<f64> = reports.iter().flat_map(|r| r.solution.iter().copied()).collect();
            let binv = RealMatrix::new(m, m, data)?;
            Ok(BlockEstimate::from_reports(binv.matmul(&at)?, &reports))
        })
        .collect()
}

fn solve_path_units(
    system: &RealMatrix,
    indices: Range<usize>,
    cfg: &SolverConfig,
    thresholds: &[f64],
) -> Result<Vec<Vec<SolveReport>>> {
    let n = system.rows();
    indices
        .into_par_iter()
        .map(|i| solve_least_squares_path(system, &unit_vector(n, i), cfg, thresholds))
        .collect()
}
