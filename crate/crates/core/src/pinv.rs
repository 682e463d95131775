//! Three-round coded pseudoinverse.
//!
//! 1. Polynomial-code multiplication gives the Gram matrix `B = AᵀA`.
//! 2. `B` goes to every worker; each estimates its row blocks of `B⁻¹`,
//!    encodes them with the BRS generator, and the master decodes `B̂⁻¹`
//!    from any `k` answers.
//! 3. Polynomial-code multiplication of `B̂⁻¹`'s row blocks with `Aᵀ`'s
//!    column blocks returns `Â† = B̂⁻¹Aᵀ`.
//!
//! Every round tolerates `n − k` stragglers and draws its own straggler
//! pattern.

use std::time::Instant;

use rayon::prelude::*;

use crate::brs::{build_generator, BrsGenerator, SchemeParams};
use crate::cmm::{cmm_gram, cmm_rowblock_product, CmmParams};
use crate::error::{arg, Error, Result};
use crate::estimate::estimate_block_rows;
use crate::field::{make_eval_points, make_mask_set};
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::random::derive_seed;
use crate::scheme::{decode_payloads, encode_payload};
use crate::share::{encode_shares, partition_columns, reconstruct, share_symbol_count, SecretKeys, ShareBundle};
use crate::solver::SolverConfig;
use crate::straggler::StragglerModel;

const SEED_CMM: u64 = 10;
const SEED_POINTS: u64 = 20;
const SEED_MASKS: u64 = 21;

#[derive(Clone, Debug, PartialEq)]
pub struct PinvRunConfig {
    /// Inversion parameters; `k` must be a perfect square.
    pub scheme: SchemeParams,
    pub solver: SolverConfig,
    pub straggle: StragglerModel,
    pub seed: u64,
}

impl PinvRunConfig {
    pub fn new(scheme: SchemeParams, solver: SolverConfig) -> Self {
        Self {
            scheme,
            solver,
            straggle: StragglerModel::none(),
            seed: 0,
        }
    }

    pub fn with_stragglers(mut self, straggle: StragglerModel) -> Self {
        self.straggle = straggle;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `√k`, or an error when `k` is not a perfect square.
    pub fn k_bar(&self) -> Result<usize> {
        let k = self.scheme.k;
        let kb = k.isqrt();
        if kb * kb != k {
            return Err(Error::Parameter(format!(
                "the pseudoinverse pipeline needs a square k, got {k}"
            )));
        }
        Ok(kb)
    }
}

/// Traffic of one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTelemetry {
    pub round: usize,
    /// Worker ids whose answers were used (0-based).
    pub responders: Vec<usize>,
    pub symbols_sent: usize,
    pub symbols_received: usize,
}

#[derive(Clone, Debug)]
pub struct PinvRun {
    /// `Â†`, `M × N`.
    pub estimate: RealMatrix,
    /// The Gram matrix from round 1.
    pub gram: RealMatrix,
    /// `B̂⁻¹` from round 2.
    pub gram_inverse: RealMatrix,
    pub rounds: Vec<RoundTelemetry>,
    pub decode_online_ops: u64,
    pub wall_time_ms: f64,
}

/// How `B` reaches the workers in round 2.
enum Broadcast<'a> {
    Plain(&'a RealMatrix),
    Shared(&'a ShareBundle, &'a SecretKeys),
}

fn round_responders(cfg: &PinvRunConfig, round: u64, k: usize, stage: &str) -> Result<Vec<usize>> {
    let model = cfg.straggle.clone().with_seed(derive_seed(cfg.straggle.seed, round));
    Ok(model
        .responders(cfg.scheme.n, k, stage)?
        .into_iter()
        .map(|(id, _)| id)
        .collect())
}

/// Worker side of round 2: estimate own row blocks of `B⁻¹` and encode.
fn row_block_worker(
    worker: usize,
    broadcast: &Broadcast,
    gen: &BrsGenerator,
    t: usize,
    solver: &SolverConfig,
) -> Result<ComplexMatrix> {
    let owned;
    let b = match broadcast {
        Broadcast::Plain(b) => *b,
        Broadcast::Shared(bundle, keys) => {
            owned = reconstruct(bundle, keys)?;
            &owned
        }
    };
    let order = b.rows();
    let blocks = gen
        .task_set(worker)
        .iter()
        .map(|&j| {
            let start = (j * t).min(order);
            let end = ((j + 1) * t).min(order);
            let est = estimate_block_rows(b, start..end, solver)?;
            // Rows past the order are padding and stay zero.
            Ok((j, est.block.resized(t, order).to_complex()))
        })
        .collect::<Result<Vec<_>>>()?;
    encode_payload(gen, worker, &blocks)
}

fn run(a: &RealMatrix, cfg: &PinvRunConfig, secure: bool) -> Result<PinvRun> {
    let start = Instant::now();
    let (rows, cols) = a.shape();
    if rows <= cols {
        return arg(format!(
            "left pseudoinverse needs more rows than columns, got {rows}x{cols}"
        ));
    }
    cfg.solver.validate()?;
    let kb = cfg.k_bar()?;
    let params = cfg.scheme.for_order(cols);
    let (n, k) = (params.n, params.k);
    let cmm = CmmParams::new(kb, n, derive_seed(cfg.seed, SEED_CMM))?;

    // Round 1: B = AᵀA.
    let ids = round_responders(cfg, 1, k, "round 1 (Gram product)")?;
    let gram_out = cmm_gram(a, &cmm, &ids)?;
    let gram = gram_out.product;
    let mut rounds = vec![RoundTelemetry {
        round: 1,
        responders: gram_out.responders,
        symbols_sent: gram_out.symbols_sent,
        symbols_received: gram_out.symbols_received,
    }];

    // Round 2: coded row-block inversion of B.
    let eval = make_eval_points(n, Some(params.q), derive_seed(cfg.seed, SEED_POINTS))?;
    let gen = build_generator(&params, &eval)?;
    let shared;
    let (broadcast, sent) = if secure {
        let masks = make_mask_set(k, params.q, derive_seed(cfg.seed, SEED_MASKS))?;
        let bundle = encode_shares(&partition_columns(&gram, k)?, &eval, &masks)?;
        shared = (bundle, SecretKeys::new(eval.clone(), &masks));
        let sent = n * share_symbol_count(&shared.0);
        (Broadcast::Shared(&shared.0, &shared.1), sent)
    } else {
        (Broadcast::Plain(&gram), n * cols * cols)
    };
    let ids = round_responders(cfg, 2, k, "round 2 (coded inversion)")?;
    let payloads: Vec<ComplexMatrix> = ids
        .par_iter()
        .map(|&w| row_block_worker(w, &broadcast, &gen, params.t, &cfg.solver))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, &ComplexMatrix)> = ids.iter().copied().zip(payloads.iter()).collect();
    let dec = decode_payloads(&gen, &pairs)?;
    let gram_inverse = RealMatrix::vcat(&dec.blocks)?.row_slice(0..cols);
    rounds.push(RoundTelemetry {
        round: 2,
        responders: ids,
        symbols_sent: sent,
        symbols_received: payloads.iter().map(|p| p.rows() * p.cols()).sum(),
    });

    // Round 3: Â† = B̂⁻¹Aᵀ.
    let ids = round_responders(cfg, 3, k, "round 3 (final product)")?;
    let prod = cmm_rowblock_product(&gram_inverse, &a.transpose(), &cmm, &ids)?;
    rounds.push(RoundTelemetry {
        round: 3,
        responders: prod.responders,
        symbols_sent: prod.symbols_sent,
        symbols_received: prod.symbols_received,
    });

    Ok(PinvRun {
        estimate: prod.product,
        gram,
        gram_inverse,
        rounds,
        decode_online_ops: dec.inverse.online_ops(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Three-round pseudoinverse with a plain broadcast of `B`.
pub fn pinv_three_round(a: &RealMatrix, cfg: &PinvRunConfig) -> Result<PinvRun> {
    run(a, cfg, false)
}

/// As [`pinv_three_round`], but `B` is distributed as a Lagrange share
/// polynomial and rebuilt by each worker.
pub fn pinv_secure_variant(a: &RealMatrix, cfg: &PinvRunConfig) -> Result<PinvRun> {
    run(a, cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brs::validate_params;
    use crate::estimate::estimate_pseudoinverse;
    use crate::random::gaussian_matrix;

    fn config(n: usize, k: usize, eps: f64) -> PinvRunConfig {
        PinvRunConfig::new(
            validate_params(n, k, None).unwrap(),
            SolverConfig::cg(eps).with_max_iterations(400),
        )
    }

    #[test]
    fn orthonormal_columns() {
        let a = RealMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let run = pinv_three_round(&a, &config(4, 1, 1e-14)).unwrap();
        assert!(run.estimate.max_abs_diff(&a.transpose()).unwrap() < 1e-12);
        assert_eq!(run.rounds.len(), 3);
    }

    #[test]
    fn matches_single_server_at_eighteen_nine() {
        let a = gaussian_matrix(24, 12, 1.0, 21);
        let cfg = config(18, 9, 1e-10).with_stragglers(StragglerModel::random(9, 3));
        let run = pinv_three_round(&a, &cfg).unwrap();
        let gram = a.transpose().matmul(&a).unwrap();
        assert!(run.gram.max_abs_diff(&gram).unwrap() < 1e-9);
        let oracle = estimate_pseudoinverse(&a, &cfg.solver).unwrap();
        assert!(run.estimate.max_abs_diff(&oracle).unwrap() < 1e-7);
        for r in &run.rounds {
            assert_eq!(r.responders.len(), 9);
        }
    }

    #[test]
    fn secure_variant_agrees() {
        let a = gaussian_matrix(12, 6, 1.0, 21);
        let cfg = config(6, 1, 1e-12).with_seed(4);
        let plain = pinv_three_round(&a, &cfg).unwrap();
        let secure = pinv_secure_variant(&a, &cfg).unwrap();
        assert!(plain.estimate.max_abs_diff(&secure.estimate).unwrap() < 1e-9);
        assert_eq!(secure.rounds[1].symbols_sent, 6 * 36);
    }

    #[test]
    fn rejections() {
        let cfg = config(6, 3, 1e-8);
        let a = gaussian_matrix(8, 4, 1.0, 0);
        assert!(matches!(pinv_three_round(&a, &cfg), Err(Error::Parameter(_))));
        let cfg = config(4, 1, 1e-8);
        assert!(pinv_three_round(&gaussian_matrix(3, 3, 1.0, 0), &cfg).is_err());
        let cfg = cfg.with_stragglers(StragglerModel::fixed(vec![0, 1, 2, 3]));
        let err = pinv_three_round(&gaussian_matrix(6, 3, 1.0, 0), &cfg).unwrap_err();
        assert!(err.to_string().contains("round 1"), "{err}");
    }
}
