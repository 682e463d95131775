//! Simulated master/worker protocol for coded matrix inversion.
//!
//! Worker `ι` rebuilds `A` from the share polynomial, estimates the column
//! blocks `Â_j` of `A⁻¹` for its task set, and returns the single payload
//! `W_ι = Σ_j G_ιj Â_jᵀ` of size `T × N`. Stacking any `k` payloads gives
//! `G_I` applied to the blocks, which the master undoes one `T × N` slice
//! at a time with `G_I⁻¹` (the Kronecker factor `I_T ⊗ G_I⁻¹` is never
//! formed).

use std::time::Instant;

use rayon::prelude::*;

use crate::brs::{build_generator, restricted_inverse, tau_groups, BrsGenerator, RestrictedInverse, SchemeParams};
use crate::error::{arg, Error, Result};
use crate::estimate::estimate_block_columns;
use crate::field::{make_eval_points, make_mask_set};
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::random::{derive_seed, rng};
use crate::share::{encode_shares, partition_columns, reconstruct, SecretKeys, ShareBundle};
use crate::solver::SolverConfig;
use crate::straggler::StragglerModel;

/// Maximum imaginary residue accepted after decoding, relative to the
/// largest decoded entry (floored at 1).
pub const DECODE_THRESHOLD: f64 = 1e-8;

const SEED_POINTS: u64 = 1;
const SEED_MASKS: u64 = 2;

/// `Σ_j G[worker, j] · X_j` over the worker's task set; `blocks[j]` is the
/// worker's result for block `j` (entries outside the task set are unused).
pub fn encode_payload(gen: &BrsGenerator, worker: usize, blocks: &[(usize, ComplexMatrix)]) -> Result<ComplexMatrix> {
    let Some((_, first)) = blocks.first() else {
        return arg("a payload needs at least one block");
    };
    let mut acc = ComplexMatrix::zeros(first.rows(), first.cols());
    for (j, block) in blocks {
        acc.add_scaled(gen.g()[(worker, *j)], block)?;
    }
    Ok(acc)
}

/// Blocks recovered from `k` payloads.
#[derive(Clone, Debug)]
pub struct BlockDecode {
    /// `X_j` for `j = 0..k`, real parts.
    pub blocks: Vec<RealMatrix>,
    pub inverse: RestrictedInverse,
    /// Multiply-adds spent applying `G_I⁻¹` to the payloads.
    pub apply_ops: u64,
    pub imag_residue: f64,
}

/// Inverts `W_I = G_I · [X_1; …; X_k]` slice by slice.
pub fn decode_payloads(gen: &BrsGenerator, payloads: &[(usize, &ComplexMatrix)]) -> Result<BlockDecode> {
    let k = gen.params().k;
    if payloads.len() < k {
        return Err(Error::Unrecoverable {
            stage: "decode".into(),
            received: payloads.len(),
            needed: k,
        });
    }
    let payloads = &payloads[..k];
    let ids: Vec<usize> = payloads.iter().map(|p| p.0).collect();
    let inverse = restricted_inverse(gen, &ids)?;
    let (rows, cols) = payloads[0].1.shape();
    if payloads.iter().any(|p| p.1.shape() != (rows, cols)) {
        return arg("payload shapes differ");
    }
    let blocks: Vec<ComplexMatrix> = (0..k)
        .map(|j| {
            let mut x = ComplexMatrix::zeros(rows, cols);
            for (i, (_, w)) in payloads.iter().enumerate() {
                x.add_scaled(inverse.inverse[(j, i)], w).expect("shapes checked");
            }
            x
        })
        .collect();
    let imag_residue = blocks.iter().map(ComplexMatrix::max_imag).fold(0.0, f64::max);
    let blocks: Vec<RealMatrix> = blocks.iter().map(ComplexMatrix::real_part).collect();
    let scale = blocks.iter().map(RealMatrix::max_abs).fold(1.0, f64::max);
    if imag_residue > DECODE_THRESHOLD * scale {
        return Err(Error::DecodeIntegrity(format!(
            "imaginary residue {imag_residue:e} after decoding from workers {:?}",
            ids.iter().map(|i| i + 1).collect::<Vec<_>>()
        )));
    }
    Ok(BlockDecode {
        blocks,
        inverse,
        apply_ops: (k * k * rows * cols) as u64,
        imag_residue,
    })
}

/// One worker's answer.
#[derive(Clone, Debug)]
pub struct WorkerReport {
    pub worker_id: usize,
    /// `W_ι`, `T × N`.
    pub payload: ComplexMatrix,
    /// Solver iterations per estimated column, grouped by block.
    pub solver_iterations: Vec<Vec<usize>>,
    pub solve_ops: u64,
    pub encode_ops: u64,
    pub response_time: f64,
}

/// Runs worker `worker` (0-based): reconstruct `A`, estimate its blocks,
/// encode.
pub fn run_worker(
    worker: usize,
    bundle: &ShareBundle,
    keys: &SecretKeys,
    gen: &BrsGenerator,
    cfg: &SolverConfig,
) -> Result<WorkerReport> {
    if worker >= gen.params().n {
        return arg(format!("worker {worker} out of range for n = {}", gen.params().n));
    }
    if bundle.k() != gen.params().k {
        return arg(format!(
            "bundle has {} blocks, generator expects {}",
            bundle.k(),
            gen.params().k
        ));
    }
    let a = reconstruct(bundle, keys)?;
    let order = a.rows();
    let t = bundle.block_cols();
    let mut blocks = Vec::new();
    let mut solver_iterations = Vec::new();
    let mut solve_ops = 0;
    for &j in gen.task_set(worker) {
        let start = (j * t).min(order);
        let end = ((j + 1) * t).min(order);
        let est = estimate_block_columns(&a, start..end, cfg)?;
        // Columns past the order are padding and stay zero.
        let block = est.block.resized(order, t);
        blocks.push((j, block.transpose().to_complex()));
        solver_iterations.push(est.iterations);
        solve_ops += est.ops;
    }
    let payload = encode_payload(gen, worker, &blocks)?;
    Ok(WorkerReport {
        worker_id: worker,
        encode_ops: (blocks.len() * t * order) as u64,
        payload,
        solver_iterations,
        solve_ops,
        response_time: 0.0,
    })
}

/// The decoded estimate of `A⁻¹`.
#[derive(Clone, Debug)]
pub struct DecodeResult {
    pub estimate: RealMatrix,
    /// Worker ids used, in the order they were consumed.
    pub responders: Vec<usize>,
    /// Operations to build the decoding matrix `G_I⁻¹` online.
    pub online_ops: u64,
    pub vandermonde_ops: u64,
    pub product_ops: u64,
    /// Operations to apply `G_I⁻¹` to the payloads.
    pub apply_ops: u64,
    pub imag_residue: f64,
}

/// Decodes `Â⁻¹` (order `order`) from exactly `k` reports.
pub fn master_decode(reports: &[WorkerReport], gen: &BrsGenerator, order: usize) -> Result<DecodeResult> {
    let k = gen.params().k;
    if reports.len() < k {
        return Err(Error::Unrecoverable {
            stage: "inversion".into(),
            received: reports.len(),
            needed: k,
        });
    }
    let mut ids: Vec<usize> = reports.iter().map(|r| r.worker_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return arg("duplicate worker ids among reports");
    }
    let used = &reports[..k];
    let payloads: Vec<(usize, &ComplexMatrix)> = used.iter().map(|r| (r.worker_id, &r.payload)).collect();
    let dec = decode_payloads(gen, &payloads)?;
    // Each block is Â_jᵀ (T × N); transpose back and drop padding columns.
    let cols: Vec<RealMatrix> = dec.blocks.iter().map(RealMatrix::transpose).collect();
    let estimate = RealMatrix::hcat(&cols)?.column_slice(0..order);
    Ok(DecodeResult {
        estimate,
        responders: used.iter().map(|r| r.worker_id).collect(),
        online_ops: dec.inverse.online_ops(),
        vandermonde_ops: dec.inverse.vandermonde_ops,
        product_ops: dec.inverse.product_ops,
        apply_ops: dec.apply_ops,
        imag_residue: dec.imag_residue,
    })
}

/// Per-worker accounting for a simulated run.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerSummary {
    pub worker_id: usize,
    pub blocks: usize,
    pub solve_ops: u64,
    pub encode_ops: u64,
    pub response_time: f64,
}

/// Outcome of [`simulate`].
#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub params: SchemeParams,
    pub decode: DecodeResult,
    pub workers: Vec<WorkerSummary>,
    /// Complex symbols in the broadcast share polynomial.
    pub symbols_sent: usize,
    /// Complex symbols received by the master.
    pub symbols_received: usize,
    pub wall_time_ms: f64,
}

/// The share material and generator for one deployment.
#[derive(Clone, Debug)]
pub struct Deployment {
    pub params: SchemeParams,
    pub generator: BrsGenerator,
    pub bundle: ShareBundle,
    pub keys: SecretKeys,
}

/// Builds the generator and shares `a` for parameters `params`.
pub fn deploy(a: &RealMatrix, params: &SchemeParams, seed: u64) -> Result<Deployment> {
    let params = params.for_order(a.cols());
    let eval = make_eval_points(params.n, Some(params.q), derive_seed(seed, SEED_POINTS))?;
    let masks = make_mask_set(params.k, params.q, derive_seed(seed, SEED_MASKS))?;
    let generator = build_generator(&params, &eval)?;
    let bundle = encode_shares(&partition_columns(a, params.k)?, &eval, &masks)?;
    let keys = SecretKeys::new(eval, &masks);
    Ok(Deployment {
        params,
        generator,
        bundle,
        keys,
    })
}

/// Full pipeline: share `a`, run workers, keep the first `k` responders,
/// decode.
///
/// Workers that the straggler model discards are not executed; their
/// results could never reach the decoder.
pub fn simulate(
    a: &RealMatrix,
    params: &SchemeParams,
    cfg: &SolverConfig,
    straggle: &StragglerModel,
    seed: u64,
) -> Result<SimulationRun> {
    if !a.is_square() {
        return arg(format!("expected a square matrix, got {:?}", a.shape()));
    }
    cfg.validate()?;
    let start = Instant::now();
    let dep = deploy(a, params, seed)?;
    let p = dep.params;
    let responders = straggle.responders(p.n, p.k, "inversion")?;
    let reports: Vec<WorkerReport> = responders
        .par_iter()
        .map(|&(id, time)| {
            let mut r = run_worker(id, &dep.bundle, &dep.keys, &dep.generator, cfg)?;
            r.response_time = time;
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let decode = master_decode(&reports, &dep.generator, a.rows())?;
    let workers = reports
        .iter()
        .map(|r| WorkerSummary {
            worker_id: r.worker_id,
            blocks: r.solver_iterations.len(),
            solve_ops: r.solve_ops,
            encode_ops: r.encode_ops,
            response_time: r.response_time,
        })
        .collect();
    Ok(SimulationRun {
        params: p,
        decode,
        workers,
        symbols_sent: crate::share::share_symbol_count(&dep.bundle),
        symbols_received: reports.iter().map(|r| r.payload.rows() * r.payload.cols()).sum(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// What an eavesdropper sees once worker ids are stripped.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub payloads: Vec<ComplexMatrix>,
    pub tau: usize,
    /// `τ!`, the number of group assignments to try.
    pub ambiguity: f64,
    /// Groups with at least one responder.
    pub groups_hit: usize,
    pub covers_all_groups: bool,
}

pub fn anonymized_transcript(reports: &[WorkerReport], gen: &BrsGenerator) -> Transcript {
    let groups = tau_groups(gen.mask());
    let mut hit = vec![false; groups.tau];
    for r in reports {
        if let Some(g) = groups.group_of(r.worker_id) {
            hit[g] = true;
        }
    }
    let groups_hit = hit.iter().filter(|&&h| h).count();
    Transcript {
        payloads: reports.iter().map(|r| r.payload.clone()).collect(),
        tau: groups.tau,
        ambiguity: (1..=groups.tau).map(|i| i as f64).product(),
        groups_hit,
        covers_all_groups: groups_hit == groups.tau,
    }
}

/// Fractional-repetition baseline: `k` groups of `s + 1` identical
/// replicas. A default replica per block is fixed offline; online, the
/// master walks the stragglers and advances past failed defaults.
///
/// Returns the operation count of that repair pass when `stragglers`
/// (`(group, replica)` pairs) fail.
pub fn repetition_decode_ops(k: usize, s: usize, stragglers: &[(usize, usize)]) -> u64 {
    let mut chosen = vec![0usize; k];
    let dead = |g: usize, r: usize| stragglers.contains(&(g, r));
    let mut ops = 0u64;
    for &(g, r) in stragglers {
        ops += 1;
        if chosen[g] == r {
            ops += 1;
            while chosen[g] <= s && dead(g, chosen[g]) {
                chosen[g] += 1;
                ops += 1;
            }
        }
    }
    ops
}

/// One row of the decode-cost comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct DecodeOpsRow {
    pub k: usize,
    /// Smallest admissible `n` for this `k`.
    #[serde(skip)]
    pub n: usize,
    pub brs_online_ops: u64,
    pub repetition_ops: u64,
}

/// Decode-matrix construction cost of the BRS scheme against the
/// repetition baseline with `rep_s` stragglers.
///
/// BRS cost is averaged over `trials` random responder sets at the
/// smallest admissible `n` per `k`. The baseline is charged its worst
/// straggler pattern: the first `rep_s` replicas of one group.
pub fn decode_ops_profile(k_values: &[usize], trials: usize, rep_s: usize, seed: u64) -> Result<Vec<DecodeOpsRow>> {
    if trials == 0 {
        return arg("trials must be at least 1");
    }
    let mut rng = rng(seed);
    let mut rows = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let params = (k + 1..=k * (k + 1))
            .find_map(|n| crate::brs::validate_params(n, k, None).ok())
            .ok_or_else(|| Error::Parameter(format!("no admissible n for k = {k}")))?;
        let eval = make_eval_points(params.n, Some(params.q), derive_seed(seed, k as u64))?;
        let gen = build_generator(&params, &eval)?;
        let mut total = 0u64;
        for _ in 0..trials {
            let ids = rand::seq::index::sample(&mut rng, params.n, k).into_vec();
            total += restricted_inverse(&gen, &ids)?.online_ops();
        }
        let pattern: Vec<(usize, usize)> = (0..rep_s).map(|r| (0, r)).collect();
        rows.push(DecodeOpsRow {
            k,
            n: params.n,
            brs_online_ops: total / trials as u64,
            repetition_ops: repetition_decode_ops(k, rep_s, &pattern),
        });
    }
    Ok(rows)
}
