//! Simulated worker latencies.
//!
//! Every worker gets a response time, or none if it never answers. The
//! master keeps the first `k` answers ordered by time, then by worker id.

use std::str::FromStr;

use rand::seq::index::sample;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::random::rng;

/// Latency of a worker that is not delayed or failed.
pub const BASE_LATENCY: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub enum StragglerMode {
    /// These workers (0-based) never respond; everyone else answers at
    /// [`BASE_LATENCY`].
    FixedSet(Vec<usize>),
    /// `count` workers drawn uniformly without replacement never respond.
    RandomUniform(usize),
    /// Every worker responds after `BASE_LATENCY + Exp(rate)`.
    DelayExponential(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StragglerModel {
    pub mode: StragglerMode,
    pub seed: u64,
}

impl StragglerModel {
    pub fn none() -> Self {
        Self::fixed(Vec::new())
    }

    pub fn fixed(ids: Vec<usize>) -> Self {
        Self {
            mode: StragglerMode::FixedSet(ids),
            seed: 0,
        }
    }

    pub fn random(count: usize, seed: u64) -> Self {
        Self {
            mode: StragglerMode::RandomUniform(count),
            seed,
        }
    }

    pub fn exponential(rate: f64, seed: u64) -> Self {
        Self {
            mode: StragglerMode::DelayExponential(rate),
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Response time per worker; `None` for workers that never respond.
    pub fn response_times(&self, n: usize) -> Result<Vec<Option<f64>>> {
        let mut rng = rng(self.seed);
        match &self.mode {
            StragglerMode::FixedSet(ids) => {
                if let Some(bad) = ids.iter().find(|&&i| i >= n) {
                    return Err(Error::Argument(format!(
                        "straggler id {} out of range for {n} workers",
                        bad + 1
                    )));
                }
                Ok((0..n)
                    .map(|i| (!ids.contains(&i)).then_some(BASE_LATENCY))
                    .collect())
            }
            StragglerMode::RandomUniform(count) => {
                if *count > n {
                    return Err(Error::Argument(format!(
                        "cannot fail {count} of {n} workers"
                    )));
                }
                let failed = sample(&mut rng, n, *count).into_vec();
                Ok((0..n)
                    .map(|i| (!failed.contains(&i)).then_some(BASE_LATENCY))
                    .collect())
            }
            StragglerMode::DelayExponential(rate) => {
                let exp = Exp::new(*rate)
                    .map_err(|_| Error::Argument(format!("invalid delay rate {rate}")))?;
                Ok((0..n)
                    .map(|_| Some(BASE_LATENCY + exp.sample(&mut rng)))
                    .collect())
            }
        }
    }

    /// The first `k` responders as `(worker, time)`, earliest first.
    pub fn responders(&self, n: usize, k: usize, stage: &str) -> Result<Vec<(usize, f64)>> {
        let times = self.response_times(n)?;
        let mut answered: Vec<(usize, f64)> = times
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (i, t)))
            .collect();
        if answered.len() < k {
            return Err(Error::Unrecoverable {
                stage: stage.to_string(),
                received: answered.len(),
                needed: k,
            });
        }
        answered.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        answered.truncate(k);
        Ok(answered)
    }
}

impl FromStr for StragglerModel {
    type Err = Error;

    /// `""`/`none`, a comma list of 1-based worker ids, `random:COUNT`, or
    /// `exp:RATE`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |why: &str| Error::Parse(format!("straggler spec {s:?}: {why}"));
        if s.is_empty() || s == "none" {
            return Ok(Self::none());
        }
        if let Some(rate) = s.strip_prefix("exp:") {
            let rate: f64 = rate.parse().map_err(|_| bad("bad rate"))?;
            if !(rate.is_finite() && rate > 0.0) {
                return Err(bad("rate must be positive"));
            }
            return Ok(Self::exponential(rate, 0));
        }
        if let Some(count) = s.strip_prefix("random:") {
            let count = count.parse().map_err(|_| bad("bad count"))?;
            return Ok(Self::random(count, 0));
        }
        let mut ids = Vec::new();
        for part in s.split(',') {
            let id: usize = part.trim().parse().map_err(|_| bad("bad worker id"))?;
            if id == 0 {
                return Err(bad("worker ids are 1-based"));
            }
            if !ids.contains(&(id - 1)) {
                ids.push(id - 1);
            }
        }
        Ok(Self::fixed(ids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_stragglers_picks_lowest_ids() {
        let r = StragglerModel::none().responders(6, 3, "t").unwrap();
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn fixed_set_skips_listed_workers() {
        let m: StragglerModel = "2,4,6".parse().unwrap();
        assert_eq!(m.mode, StragglerMode::FixedSet(vec![1, 3, 5]));
        let r = m.responders(6, 3, "t").unwrap();
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 2, 4]);
        let err = "1,2,3,4".parse::<StragglerModel>().unwrap().responders(6, 3, "inversion");
        assert!(matches!(
            err,
            Err(Error::Unrecoverable { received: 2, needed: 3, .. })
        ));
    }

    #[test]
    fn random_and_exponential_are_seeded() {
        let a = StragglerModel::random(2, 9).response_times(10).unwrap();
        assert_eq!(a, StragglerModel::random(2, 9).response_times(10).unwrap());
        assert_eq!(a.iter().filter(|t| t.is_none()).count(), 2);

        let e = StragglerModel::exponential(2.0, 4);
        let r = e.responders(10, 5, "t").unwrap();
        assert_eq!(r, e.responders(10, 5, "t").unwrap());
        assert!(r.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn parse_errors() {
        for bad in ["0", "x", "exp:-1", "exp:", "random:z"] {
            assert!(bad.parse::<StragglerModel>().is_err(), "{bad}");
        }
        assert!(StragglerModel::fixed(vec![7]).response_times(6).is_err());
        assert!(StragglerModel::random(7, 0).response_times(6).is_err());
    }
}
