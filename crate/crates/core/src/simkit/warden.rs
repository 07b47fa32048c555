//! Optimal likelihood-ratio warden.
//!
//! Under H1 each hop draws one LoS/NLoS state; every one of its `L` samples
//! is `sqrt(p) a h' x + n` with fresh `h' ~ CN(0, 1)`, a unit-amplitude PSK
//! symbol `x` and noise `n ~ CN(0, sigma_0^2)`. Given the state the samples
//! are i.i.d. `CN(0, p a^2 + sigma_0^2)`, so the per-hop received energy is a
//! sufficient statistic and the exact likelihood ratio marginalizes over the
//! state only. The warden knows every parameter, which makes it the strongest
//! detector for this model.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{self, NetworkScenario};
use crate::error::{Error, Result};
use crate::simkit::{block_rng, blocks, OracleEstimate, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// No transmission.
    H0,
    /// Covert transmission on every hop.
    H1,
}

/// All samples the warden collects for one message, hop-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WardenObservation {
    pub samples: Vec<Complex64>,
    pub hypothesis: Hypothesis,
}

#[derive(Debug, Clone, Copy)]
struct HopModel {
    p_los: f64,
    power: f64,
    /// Squared large-scale amplitude per state.
    amp2: [f64; 2],
    /// `p a^2 / sigma_0^2` per state.
    snr: [f64; 2],
}

/// Statistical model of the warden's observations for one allocation.
#[derive(Debug, Clone)]
pub struct WardenModel {
    hops: Vec<HopModel>,
    codeword_length: usize,
    noise_floor: f64,
}

impl WardenModel {
    pub fn new(scenario: &NetworkScenario, powers: &[f64]) -> Result<Self> {
        let chans = channel::hop_channels(scenario)?;
        if powers.len() != chans.len() {
            return Err(Error::InvalidScenario(format!(
                "{} powers for {} hops",
                powers.len(),
                chans.len()
            )));
        }
        if let Some(i) = powers.iter().position(|p| !(*p >= 0.0)) {
            return Err(Error::NonPositivePower {
                hop: i + 1,
                power: powers[i],
            });
        }
        let lambda0 = scenario.reference_gain;
        let hops = chans
            .iter()
            .zip(powers)
            .map(|(ch, &power)| {
                let amp2 = [
                    lambda0 * ch.dist_uav.powf(-scenario.path_loss_los),
                    scenario.excess_nlos * lambda0 * ch.dist_uav.powf(-scenario.path_loss_nlos),
                ];
                HopModel {
                    p_los: ch.p_los,
                    power,
                    amp2,
                    snr: [power * ch.gain_los, power * ch.gain_nlos],
                }
            })
            .collect();
        Ok(Self {
            hops,
            codeword_length: scenario.codeword_length,
            noise_floor: scenario.noise_floor(),
        })
    }

    pub fn sample_count(&self) -> usize {
        self.hops.len() * self.codeword_length
    }

    /// Draws one observation under `hypothesis`.
    pub fn simulate<R: Rng + ?Sized>(&self, hypothesis: Hypothesis, rng: &mut R) -> WardenObservation {
        let mut samples = Vec::with_capacity(self.sample_count());
        self.simulate_into(hypothesis, rng, &mut samples);
        WardenObservation {
            samples,
            hypothesis,
        }
    }

    fn simulate_into<R: Rng + ?Sized>(
        &self,
        hypothesis: Hypothesis,
        rng: &mut R,
        samples: &mut Vec<Complex64>,
    ) {
        samples.clear();
        let noise_sd = (0.5 * self.noise_floor).sqrt();
        for hop in &self.hops {
            let amp = match hypothesis {
                Hypothesis::H0 => 0.0,
                Hypothesis::H1 => {
                    let los = rng.random::<f64>() < hop.p_los;
                    let a2 = if los { hop.amp2[0] } else { hop.amp2[1] };
                    (hop.power * a2).sqrt()
                }
            };
            for _ in 0..self.codeword_length {
                let noise = Complex64::new(
                    noise_sd * rng.sample::<f64, _>(StandardNormal),
                    noise_sd * rng.sample::<f64, _>(StandardNormal),
                );
                let y = if hypothesis == Hypothesis::H1 {
                    let fade = Complex64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    ) * std::f64::consts::FRAC_1_SQRT_2;
                    let phase = rng.random::<f64>() * std::f64::consts::TAU;
                    fade * Complex64::from_polar(amp, phase) + noise
                } else {
                    noise
                };
                samples.push(y);
            }
        }
    }

    /// `ln Q1(y) / Q0(y)` for one observation.
    pub fn log_likelihood_ratio(&self, samples: &[Complex64]) -> f64 {
        let len = self.codeword_length as f64;
        self.hops
            .iter()
            .zip(samples.chunks(self.codeword_length))
            .map(|(hop, chunk)| {
                let energy: f64 = chunk.iter().map(|y| y.norm_sqr()).sum::<f64>() / self.noise_floor;
                let terms = [0, 1].map(|s| {
                    let x = hop.snr[s];
                    -len * x.ln_1p() + energy * x / (1.0 + x)
                });
                let w = [hop.p_los, 1.0 - hop.p_los];
                log_sum_exp(&w, &terms)
            })
            .sum()
    }
}

fn log_sum_exp(weights: &[f64; 2], terms: &[f64; 2]) -> f64 {
    let m = (0..2)
        .filter(|&i| weights[i] > 0.0)
        .map(|i| terms[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = (0..2)
        .filter(|&i| weights[i] > 0.0)
        .map(|i| weights[i] * (terms[i] - m).exp())
        .sum();
    m + s.ln()
}

/// Smallest empirical `P_FA + P_MD` over all likelihood-ratio thresholds.
///
/// The first `trials / 2` trials are drawn under H0 and the rest under H1.
pub fn warden_detection_error(
    scenario: &NetworkScenario,
    powers: &[f64],
    trials: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    if trials < 2 {
        return Err(Error::Domain("the warden needs at least 2 trials".into()));
    }
    let model = WardenModel::new(scenario, powers)?;
    let n0 = trials / 2;
    let ranges: Vec<_> = blocks(trials).collect();
    let llrs: Vec<Vec<f64>> = ranges
        .into_par_iter()
        .map(|(k, start, end)| {
            let mut rng = block_rng(seed, k);
            let mut buf = Vec::with_capacity(model.sample_count());
            (start..end)
                .map(|i| {
                    let h = if i < n0 { Hypothesis::H0 } else { Hypothesis::H1 };
                    model.simulate_into(h, &mut rng, &mut buf);
                    model.log_likelihood_ratio(&buf)
                })
                .collect()
        })
        .collect();
    let llrs: Vec<f64> = llrs.into_iter().flatten().collect();
    let (h0, h1) = llrs.split_at(n0 as usize);
    let (value, p_fa, p_md) = min_error_sum(h0, h1);
    let (m0, m1) = (h0.len() as f64, h1.len() as f64);
    let half_width_95 = Z95 * (p_fa * (1.0 - p_fa) / m0 + p_md * (1.0 - p_md) / m1).sqrt();
    Ok(OracleEstimate {
        value,
        trials,
        half_width_95,
        seed,
    })
}

/// Threshold sweep for the rule "declare H1 when LLR > tau".
/// Returns `(min P_FA + P_MD, P_FA, P_MD)` at the minimizer.
pub fn min_error_sum(h0: &[f64], h1: &[f64]) -> (f64, f64, f64) {
    let mut all: Vec<(f64, bool)> = h0
        .iter()
        .map(|&v| (v, false))
        .chain(h1.iter().map(|&v| (v, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (m0, m1) = (h0.len() as f64, h1.len() as f64);
    // tau below everything: every H0 trial is a false alarm, no misses
    let mut false_alarms = h0.len();
    let mut misses = 0usize;
    let mut best = (1.0, 1.0, 0.0);
    let mut i = 0;
    while i < all.len() {
        let tau = all[i].0;
        while i < all.len() && all[i].0 == tau {
            if all[i].1 {
                misses += 1;
            } else {
                false_alarms -= 1;
            }
            i += 1;
        }
        let p_fa = false_alarms as f64 / m0;
        let p_md = misses as f64 / m1;
        if p_fa + p_md < best.0 {
            best = (p_fa + p_md, p_fa, p_md);
        }
    }
    best
}
