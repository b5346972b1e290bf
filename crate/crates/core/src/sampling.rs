//! Seeded index sampling with probability proportional to nonnegative weights.
//!
//! Solvers draw column `j` with probability `|A_j|^2 / |A|_F^2` and row `i`
//! with probability `|A^i|^2 / |A|_F^2` from an [`IndexSampler`] built over
//! the cached norms of a [`ProblemMatrix`](crate::ProblemMatrix).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Pseudorandom stream used by every solver run and generator.
///
/// Backed by ChaCha8 seeded through `ChaCha8Rng::seed_from_u64`, whose output
/// is specified independently of platform and endianness. Uniform doubles take
/// the top 53 bits of a `u64`, giving values in `[0, 1)`.
#[derive(Clone, Debug)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate (ziggurat method).
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }
}

/// Cumulative-weight table; draws invert a uniform variate by binary search.
#[derive(Clone, Debug)]
pub struct IndexSampler {
    cumulative: Vec<f64>,
    total: f64,
    last_positive: usize,
}

impl IndexSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        let mut last_positive = None;
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeights(format!("weight {k} is {w}")));
            }
            if w > 0.0 {
                last_positive = Some(k);
            }
            acc += w;
            cumulative.push(acc);
        }
        let last_positive =
            last_positive.ok_or_else(|| Error::InvalidWeights("all weights are zero".into()))?;
        Ok(IndexSampler { cumulative, total: acc, last_positive })
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Probability of drawing index `k`.
    pub fn probability(&self, k: usize) -> f64 {
        let lo = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
        (self.cumulative[k] - lo) / self.total
    }

    /// Returns the first index whose cumulative weight exceeds `u * total`.
    /// Zero-weight indices repeat their predecessor's cumulative value and so
    /// can never be that first index.
    #[inline]
    pub fn draw(&self, rng: &mut Rng) -> usize {
        let target = rng.next_f64() * self.total;
        let k = self.cumulative.partition_point(|&c| c <= target);
        // u * total can round up to total itself
        k.min(self.last_positive)
    }
}

/// Seed for trial `trial` of an ensemble rooted at `base_seed`.
///
/// `splitmix64(base_seed ^ splitmix64(trial + 1))`. Both steps are bijections
/// of `u64`, so distinct trials under one base never collide.
pub fn derive_trial_seed(base_seed: u64, trial: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(trial.wrapping_add(1)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parses a seed written in decimal or as `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse::<u64>(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}
