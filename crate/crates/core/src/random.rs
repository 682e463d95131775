//! Seeded random inputs.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-seed for a named purpose (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `rows x cols` matrix with i.i.d. `scale · N(0, 1)` entries.
pub fn gaussian_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> RealMatrix {
    let mut rng = rng(seed);
    RealMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    })
}

pub fn gaussian_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Parsed form of `gaussian:ROWS:COLS:SCALE:SEED`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub rows: usize,
    pub cols: usize,
    pub scale: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn generate(&self) -> RealMatrix {
        gaussian_matrix(self.rows, self.cols, self.scale, self.seed)
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("generator spec {s:?}: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 5 || parts[0] != "gaussian" {
            return Err(bad("expected gaussian:ROWS:COLS:SCALE:SEED"));
        }
        let rows: usize = parts[1].parse().map_err(|_| bad("bad row count"))?;
        let cols: usize = parts[2].parse().map_err(|_| bad("bad column count"))?;
        let scale: f64 = parts[3].parse().map_err(|_| bad("bad scale"))?;
        let seed: u64 = parts[4].parse().map_err(|_| bad("bad seed"))?;
        if rows == 0 || cols == 0 {
            return Err(bad("dimensions must be positive"));
        }
        if !scale.is_finite() {
            return Err(bad("scale must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            scale,
            seed,
        })
    }
}
