//! Balanced Reed-Solomon generator matrices.
//!
//! A generator `G` (rows = workers, columns = task blocks) is sparsest
//! (every column has `d = n − k + 1` nonzeros) and balanced (every row has
//! `w = dk/n`). Its zero pattern comes from a cyclic mask; column `j` holds
//! the evaluations at `β₁ … β_n` of the degree-`(k−1)` polynomial `p_j`
//! whose roots are exactly the masked-out points. Factoring `G = H·P` with
//! `H` Vandermonde means any `k` rows are inverted online as
//! `G_I⁻¹ = P⁻¹·H_I⁻¹`, where `P⁻¹` is precomputed.
//!
//! Indices are 0-based throughout.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{arg, Error, Result};
use crate::field::{next_prime, EvalPoints};
use crate::matrix::ComplexMatrix;
use crate::poly::{from_roots, horner, vandermonde, vandermonde_inverse};

/// Modulus below which a generator entry or coefficient counts as zero.
pub const STRUCTURAL_ZERO: f64 = 1e-9;

/// A validated `(n, k)` deployment and the quantities derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeParams {
    pub n: usize,
    pub k: usize,
    /// Stragglers tolerated, `n − k`.
    pub s: usize,
    /// Column weight, `s + 1`.
    pub d: usize,
    /// Row weight, `dk/n`.
    pub w: usize,
    /// Block width in columns.
    pub t: usize,
    /// Field size, the smallest prime above `n`.
    pub q: u64,
}

impl SchemeParams {
    /// Same parameters with the block width set for an order-`order` matrix.
    pub fn for_order(mut self, order: usize) -> Self {
        self.t = order.div_ceil(self.k).max(1);
        self
    }
}

/// Checks `(n, k)` and derives the scheme parameters.
///
/// Rejected when `w = dk/n` is fractional, when `d < n/2`, or when two
/// columns of the cyclic mask share a support (which would make two
/// column polynomials proportional and `P` singular).
pub fn validate_params(n: usize, k: usize, t_hint: Option<usize>) -> Result<SchemeParams> {
    if k == 0 || n <= k {
        return arg(format!("need n > k >= 1, got n={n}, k={k}"));
    }
    let d = n - k + 1;
    if !(d * k).is_multiple_of(n) {
        return Err(Error::Parameter(format!(
            "row weight w = dk/n = {}/{n} is not an integer for (n, k) = ({n}, {k})",
            d * k
        )));
    }
    let mask = mask_matrix(n, k, d)?;
    if let Some((a, b)) = mask.duplicate_columns() {
        return Err(Error::Parameter(format!(
            "columns {a} and {b} of the mask for (n, k) = ({n}, {k}) have identical supports"
        )));
    }
    Ok(SchemeParams {
        n,
        k,
        s: n - k,
        d,
        w: d * k / n,
        t: t_hint.unwrap_or(1).max(1),
        q: next_prime(n as u64 + 1),
    })
}

/// Every admissible `(n, k)` with `n` in `n_min..=n_max`, ordered by `n`
/// then `k`.
pub fn suggest_params(n_min: usize, n_max: usize) -> Vec<SchemeParams> {
    (n_min.max(2)..=n_max)
        .flat_map(|n| (1..n).filter_map(move |k| validate_params(n, k, None).ok()))
        .collect()
}

/// An `n × k` 0/1 pattern.
#[derive(Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    n: usize,
    k: usize,
    bits: Vec<bool>,
}

impl MaskMatrix {
    /// Builds a mask from rows of bits.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return arg("mask rows differ in length");
        }
        Ok(Self {
            n: rows.len(),
            k,
            bits: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.k + col]
    }

    pub fn row_support(&self, row: usize) -> Vec<usize> {
        (0..self.k).filter(|&j| self.get(row, j)).collect()
    }

    pub fn column_support(&self, col: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i, col)).collect()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.row_support(i).len()).collect()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        (0..self.k).map(|j| self.column_support(j).len()).collect()
    }

    pub fn nnz(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// First pair of columns with identical supports, if any.
    pub fn duplicate_columns(&self) -> Option<(usize, usize)> {
        let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for j in 0..self.k {
            if let Some(&prev) = seen.get(&self.column_support(j)) {
                return Some((prev, j));
            }
            seen.insert(self.column_support(j), j);
        }
        None
    }

    /// Rows as `0`/`1` integers.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.k).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }
}

impl std::fmt::Debug for MaskMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "MaskMatrix {}x{}", self.n, self.k)?;
        for row in self.to_rows() {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "  {}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Cyclic mask: column `j` covers the `d` consecutive rows starting at
/// `j·d mod n`, wrapping around.
pub fn mask_matrix(n: usize, k: usize, d: usize) -> Result<MaskMatrix> {
    if n == 0 || k == 0 || d == 0 || d > n {
        return arg(format!("need 1 <= d <= n and k >= 1, got n={n}, k={k}, d={d}"));
    }
    if 2 * d < n {
        return Err(Error::Parameter(format!(
            "d = {d} < n/2 = {}: the cyclic construction does not always produce a balanced mask",
            n as f64 / 2.0
        )));
    }
    if !(k * d).is_multiple_of(n) {
        return Err(Error::Parameter(format!(
            "row weight kd/n = {}/{n} is not an integer",
            k * d
        )));
    }
    let mut bits = vec![false; n * k];
    for j in 0..k {
        for i in 0..d {
            bits[((i + j * d) % n) * k + j] = true;
        }
    }
    let mask = MaskMatrix { n, k, bits };
    let w = k * d / n;
    if mask.row_weights().iter().any(|&r| r != w) {
        return Err(Error::Construction(format!(
            "cyclic mask for (n, k, d) = ({n}, {k}, {d}) has unequal row weights {:?}",
            mask.row_weights()
        )));
    }
    Ok(mask)
}

/// Ascending coefficients of `p_j(x) = ∏_{i: M_ij = 0} (x − β_i)/(β_j − β_i)`.
///
/// When `β_j` is itself a root of `p_j` the normalisation falls back to
/// the first row in the support of column `j`.
pub fn column_polynomials(mask: &MaskMatrix, eval: &EvalPoints) -> Result<Vec<Vec<Complex64>>> {
    if eval.len() != mask.n() {
        return arg(format!(
            "mask has {} rows but {} evaluation points were given",
            mask.n(),
            eval.len()
        ));
    }
    (0..mask.k())
        .map(|j| {
            let roots: Vec<Complex64> = (0..mask.n())
                .filter(|&i| !mask.get(i, j))
                .map(|i| eval.point(i))
                .collect();
            let anchor = if j < mask.n() && mask.get(j, j) {
                j
            } else {
                *mask.column_support(j).first().ok_or_else(|| {
                    Error::Construction(format!("column {j} of the mask is empty"))
                })?
            };
            let (monic, _) = from_roots(&roots);
            let norm = horner(&monic, eval.point(anchor));
            let coeffs: Vec<Complex64> = monic.iter().map(|c| c / norm).collect();
            if let Some(d) = coeffs.iter().position(|c| c.norm() <= STRUCTURAL_ZERO) {
                return Err(Error::Construction(format!(
                    "coefficient {d} of column polynomial {j} vanishes"
                )));
            }
            Ok(coeffs)
        })
        .collect()
}

/// A balanced Reed-Solomon generator with its `H·P` factorisation.
#[derive(Clone, Debug)]
pub struct BrsGenerator {
    params: SchemeParams,
    g: ComplexMatrix,
    h: ComplexMatrix,
    p: ComplexMatrix,
    p_inverse: ComplexMatrix,
    mask: MaskMatrix,
    task_sets: Vec<Vec<usize>>,
    eval: EvalPoints,
}

impl BrsGenerator {
    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn g(&self) -> &ComplexMatrix {
        &self.g
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn p(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn p_inverse(&self) -> &ComplexMatrix {
        &self.p_inverse
    }

    pub fn mask(&self) -> &MaskMatrix {
        &self.mask
    }

    pub fn eval(&self) -> &EvalPoints {
        &self.eval
    }

    /// Blocks assigned to worker `worker`.
    pub fn task_set(&self, worker: usize) -> &[usize] {
        &self.task_sets[worker]
    }

    pub fn task_sets(&self) -> &[Vec<usize>] {
        &self.task_sets
    }

    /// Nonzero entries of `G`, counted at [`STRUCTURAL_ZERO`].
    pub fn nnz(&self) -> usize {
        self.g.as_slice().iter().filter(|z| z.norm() > STRUCTURAL_ZERO).count()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.g.rows())
            .map(|i| self.g.row(i).iter().filter(|z| z.norm() > STRUCTURAL_ZERO).count())
            .collect()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        (0..self.g.cols())
            .map(|j| {
                (0..self.g.rows())
                    .filter(|&i| self.g[(i, j)].norm() > STRUCTURAL_ZERO)
                    .count()
            })
            .collect()
    }
}

pub fn build_generator(params: &SchemeParams, eval: &EvalPoints) -> Result<BrsGenerator> {
    let SchemeParams { n, k, d, .. } = *params;
    if eval.len() != n {
        return arg(format!("need {n} evaluation points, got {}", eval.len()));
    }
    let mask = mask_matrix(n, k, d)?;
    let polys = column_polynomials(&mask, eval)?;
    if let Some((j, p)) = polys.iter().enumerate().find(|(_, p)| p.len() != k) {
        return Err(Error::Construction(format!(
            "column polynomial {j} has degree {} instead of {}",
            p.len() - 1,
            k - 1
        )));
    }
    let h = vandermonde(eval.points(), k);
    let p = ComplexMatrix::from_fn(k, k, |r, j| polys[j][r]);
    let g = h.matmul(&p)?;

    for i in 0..n {
        for j in 0..k {
            let direct = horner(&polys[j], eval.point(i));
            if (g[(i, j)] - direct).norm() > STRUCTURAL_ZERO {
                return Err(Error::Construction(format!(
                    "G[{i},{j}] disagrees with p_{j}(β_{i}) by {:e}",
                    (g[(i, j)] - direct).norm()
                )));
            }
            if (g[(i, j)].norm() > STRUCTURAL_ZERO) != mask.get(i, j) {
                return Err(Error::Construction(format!(
                    "zero pattern of G differs from the mask at ({i}, {j})"
                )));
            }
        }
    }

    let p_inverse = p.inverse()?;
    let residual = p
        .matmul(&p_inverse)?
        .sub(&ComplexMatrix::identity(k))?
        .frobenius_norm();
    if residual > 1e-8 * k as f64 {
        return Err(Error::Construction(format!(
            "coefficient matrix P is numerically singular (residual {residual:e})"
        )));
    }

    let task_sets = (0..n).map(|i| mask.row_support(i)).collect();
    Ok(BrsGenerator {
        params: *params,
        g,
        h,
        p,
        p_inverse,
        mask,
        task_sets,
        eval: eval.clone(),
    })
}

/// `G_I⁻¹` together with the online operation counts spent on it.
#[derive(Clone, Debug)]
pub struct RestrictedInverse {
    pub inverse: ComplexMatrix,
    /// Multiply-adds for `H_I⁻¹`.
    pub vandermonde_ops: u64,
    /// Multiply-adds for `P⁻¹·H_I⁻¹`.
    pub product_ops: u64,
}

impl RestrictedInverse {
    pub fn online_ops(&self) -> u64 {
        self.vandermonde_ops + self.product_ops
    }
}

/// Inverts the rows `rows` of `G` online through the Vandermonde factor.
pub fn restricted_inverse(gen: &BrsGenerator, rows: &[usize]) -> Result<RestrictedInverse> {
    let k = gen.params.k;
    if rows.len() != k {
        return arg(format!("need exactly {k} rows, got {}", rows.len()));
    }
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return arg(format!("duplicate rows in {rows:?}"));
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= gen.params.n) {
        return arg(format!("row {bad} out of range for n = {}", gen.params.n));
    }
    let points: Vec<Complex64> = rows.iter().map(|&i| gen.eval.point(i)).collect();
    let (h_inv, vandermonde_ops) = vandermonde_inverse(&points);
    let inverse = gen.p_inverse.matmul(&h_inv)?;
    Ok(RestrictedInverse {
        inverse,
        vandermonde_ops,
        product_ops: (k * k * k) as u64,
    })
}

/// Rows of `G` restricted to `rows`, in the given order.
pub fn restricted_rows(gen: &BrsGenerator, rows: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows.len(), gen.params.k, |r, j| gen.g[(rows[r], j)])
}

/// Rows of a mask grouped by identical support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauGroups {
    /// Row indices per group, groups ordered by their first row.
    pub groups: Vec<Vec<usize>>,
    pub tau: usize,
    /// `⌈n/(n − d)⌉` for the mask's column weight `d`; `None` when `d = n`.
    pub predicted: Option<usize>,
}

impl TauGroups {
    /// Whether `τ` equals the closed-form prediction.
    pub fn matches_prediction(&self) -> bool {
        self.predicted == Some(self.tau)
    }

    /// Index of the group containing `row`.
    pub fn group_of(&self, row: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&row))
    }
}

pub fn tau_groups(mask: &MaskMatrix) -> TauGroups {
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for i in 0..mask.n() {
        let support = mask.row_support(i);
        match groups.iter_mut().find(|(s, _)| *s == support) {
            Some((_, rows)) => rows.push(i),
            None => groups.push((support, vec![i])),
        }
    }
    let n = mask.n();
    let d = mask.column_weights().into_iter().max().unwrap_or(0);
    TauGroups {
        tau: groups.len(),
        groups: groups.into_iter().map(|(_, rows)| rows).collect(),
        predicted: (d < n).then(|| n.div_ceil(n - d)),
    }
}
