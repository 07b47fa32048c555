//! Monte Carlo estimates of the exact end-to-end connection and secrecy
//! outage events under Rayleigh fading and random LoS/NLoS states.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::channel::{self, exact_hop_security, HopChannel, NetworkScenario};
use crate::error::{Error, Result};
use crate::simkit::{block_rng, blocks, OracleEstimate};

fn check_inputs(scenario: &NetworkScenario, powers: &[f64], trials: u64) -> Result<()> {
    scenario.validate()?;
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    if powers.len() != scenario.hops {
        return Err(Error::InvalidScenario(format!(
            "{} powers for {} hops",
            powers.len(),
            scenario.hops
        )));
    }
    if let Some(i) = powers.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::NonPositivePower {
            hop: i + 1,
            power: powers[i],
        });
    }
    Ok(())
}

/// Counts trials for which `event` holds, block by block.
fn count<F>(trials: u64, seed: u64, event: F) -> u64
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    let ranges: Vec<_> = blocks(trials).collect();
    ranges
        .into_par_iter()
        .map(|(k, start, end)| {
            let mut rng = block_rng(seed, k);
            (start..end).filter(|_| event(&mut rng)).count() as u64
        })
        .sum()
}

/// Estimates `Pr{every hop's receiver SNR >= gamma_c}` with `gamma_c = 2^{R_t} - 1`.
pub fn mc_connection(
    scenario: &NetworkScenario,
    powers: &[f64],
    rate_tx: f64,
    trials: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    check_inputs(scenario, powers, trials)?;
    let gamma_c = rate_tx.exp2() - 1.0;
    let coeff = scenario.terrestrial_coeff();
    let hits = count(trials, seed, |rng| {
        // draw every hop so the stream layout does not depend on early exits
        let mut ok = true;
        for p in powers {
            let fade: f64 = rng.sample(Exp1);
            ok &= p * fade / coeff >= gamma_c;
        }
        ok
    });
    Ok(OracleEstimate::proportion(hits, trials, seed))
}

/// Estimates the exact secrecy outage `1 - Pr{every hop's UAV SNR < gamma_e}`
/// with `gamma_e = 2^{R_e} - 1`, sampling the LoS state and fading per hop.
pub fn mc_secrecy_outage(
    scenario: &NetworkScenario,
    powers: &[f64],
    rate_redundancy: f64,
    trials: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    check_inputs(scenario, powers, trials)?;
    let chans = channel::hop_channels(scenario)?;
    let gamma_e = rate_redundancy.exp2() - 1.0;
    let secure = count(trials, seed, |rng| {
        let mut ok = true;
        for (p, ch) in powers.iter().zip(&chans) {
            let los = rng.random::<f64>() < ch.p_los;
            let fade: f64 = rng.sample(Exp1);
            let gain = if los { ch.gain_los } else { ch.gain_nlos };
            ok &= p * gain * fade < gamma_e;
        }
        ok
    });
    let est = OracleEstimate::proportion(secure, trials, seed);
    Ok(OracleEstimate {
        value: 1.0 - est.value,
        ..est
    })
}

/// Exact secrecy outage by direct evaluation of the LoS/NLoS mixture per hop.
pub fn exact_secrecy_outage(powers: &[f64], gamma_e: f64, channels: &[HopChannel]) -> f64 {
    let log_secure: f64 = powers
        .iter()
        .zip(channels)
        .map(|(p, ch)| exact_hop_security(*p, gamma_e, ch).ln())
        .sum();
    -log_secure.exp_m1()
}
