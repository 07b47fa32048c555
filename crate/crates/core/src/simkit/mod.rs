//! Independent oracles for the closed forms.
//!
//! * [`mc`] samples the exact connection and secrecy-outage events, with no
//!   exponent averaging and no product-to-sum step.
//! * [`kl`] integrates the warden's true relative entropy numerically.
//! * [`warden`] simulates the optimal likelihood-ratio detector.
//!
//! Random streams are split into fixed blocks of [`BLOCK_TRIALS`] trials.
//! Block `k` draws from ChaCha8 stream `k` of the run seed, so results do not
//! depend on how blocks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub mod kl;
pub mod mc;
pub mod quadrature;
pub mod warden;

pub use kl::{block_kl_per_hop, gaussian_kl, jensen_kl_per_hop, true_kl_per_hop};
pub use mc::{exact_secrecy_outage, mc_connection, mc_secrecy_outage};
pub use warden::{warden_detection_error, Hypothesis, WardenModel, WardenObservation};

/// Trials per independent random stream.
pub const BLOCK_TRIALS: u64 = 4096;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A Monte Carlo estimate with its normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub trials: u64,
    pub half_width_95: f64,
    pub seed: u64,
}

impl OracleEstimate {
    /// Estimate of a Bernoulli probability from `hits` successes.
    pub fn proportion(hits: u64, trials: u64, seed: u64) -> Self {
        let value = hits as f64 / trials as f64;
        Self {
            value,
            trials,
            half_width_95: Z95 * (value * (1.0 - value) / trials as f64).sqrt(),
            seed,
        }
    }

    /// Standard error implied by the 95% half-width.
    pub fn std_error(&self) -> f64 {
        self.half_width_95 / Z95
    }

    /// `|value - reference| <= k * half_width_95`.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.half_width_95
    }
}

pub(crate) fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Trial ranges `[start, end)` of each block.
pub(crate) fn blocks(trials: u64) -> impl Iterator<Item = (u64, u64, u64)> {
    let count = trials.div_ceil(BLOCK_TRIALS);
    (0..count).map(move |k| {
        let start = k * BLOCK_TRIALS;
        (k, start, (start + BLOCK_TRIALS).min(trials))
    })
}
