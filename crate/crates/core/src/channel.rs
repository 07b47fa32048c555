//! Linear relay geometry and the hybrid LoS/NLoS air-to-ground channel.
//!
//! Nodes sit on the source-destination axis at `k * D / N` for `k = 0..=N`;
//! hop `n` is transmitted by node `n - 1`. The UAV hovers at height `H` above
//! a ground point `uav_ground_offset` along the same axis.
//!
//! All quantities are linear (watts, power ratios). Noise is stored already
//! normalized by the reference path loss, `sigma^2 = sigma_0^2 / lambda_0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry and propagation constants of one multi-hop link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    /// Source-destination distance `D` in meters.
    pub distance_sd: f64,
    /// Number of hops `N`; there are `N - 1` relays.
    pub hops: usize,
    /// UAV altitude `H` in meters.
    pub uav_height: f64,
    /// Ground projection of the UAV along the source-destination axis, meters.
    pub uav_ground_offset: f64,
    /// Terrestrial path-loss exponent.
    pub path_loss_terrestrial: f64,
    /// Air-to-ground LoS path-loss exponent.
    pub path_loss_los: f64,
    /// Air-to-ground NLoS path-loss exponent.
    pub path_loss_nlos: f64,
    /// Environment constant `B` of the LoS-probability curve.
    pub env_b: f64,
    /// Environment constant `C` of the LoS-probability curve.
    pub env_c: f64,
    /// Excess NLoS attenuation, linear in (0, 1].
    pub excess_nlos: f64,
    /// Noise power normalized by the reference path loss, watts.
    pub noise_normalized: f64,
    /// Path loss at the 1 m reference distance, linear. Only the warden
    /// simulator uses it, to recover the absolute noise floor.
    pub reference_gain: f64,
    /// Symbols per hop observed by the warden.
    pub codeword_length: usize,
}

impl NetworkScenario {
    /// A scenario with the urban reference constants: `alpha = 3`,
    /// `beta = (2.5, 2.8)`, `B = 0.136`, `C = 11.95`, `eta = -20 dB`,
    /// `sigma^2 = -70 dBm`, `lambda_0 = -40 dB`, `L = 10`, UAV above the midpoint.
    pub fn new(distance_sd: f64, hops: usize, uav_height: f64) -> Self {
        Self {
            distance_sd,
            hops,
            uav_height,
            uav_ground_offset: distance_sd / 2.0,
            path_loss_terrestrial: 3.0,
            path_loss_los: 2.5,
            path_loss_nlos: 2.8,
            env_b: 0.136,
            env_c: 11.95,
            excess_nlos: 0.01,
            noise_normalized: 1e-10,
            reference_gain: 1e-4,
            codeword_length: 10,
        }
    }

    /// Same scenario with a different hop count.
    pub fn with_hops(&self, hops: usize) -> Self {
        Self {
            hops,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        if !(self.distance_sd > 0.0 && self.distance_sd.is_finite()) {
            return fail(format!("distance_sd must be positive, got {}", self.distance_sd));
        }
        if self.hops == 0 {
            return fail("hops must be at least 1".into());
        }
        if !(self.uav_height > 0.0 && self.uav_height.is_finite()) {
            return fail(format!("uav_height must be positive, got {}", self.uav_height));
        }
        if !(0.0..=self.distance_sd).contains(&self.uav_ground_offset) {
            return fail(format!(
                "uav_ground_offset must lie in [0, {}], got {}",
                self.distance_sd, self.uav_ground_offset
            ));
        }
        for (name, v) in [
            ("path_loss_terrestrial", self.path_loss_terrestrial),
            ("path_loss_los", self.path_loss_los),
            ("path_loss_nlos", self.path_loss_nlos),
            ("env_b", self.env_b),
            ("env_c", self.env_c),
            ("noise_normalized", self.noise_normalized),
            ("reference_gain", self.reference_gain),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.excess_nlos > 0.0 && self.excess_nlos <= 1.0) {
            return fail(format!("excess_nlos must lie in (0, 1], got {}", self.excess_nlos));
        }
        if self.codeword_length == 0 {
            return fail("codeword_length must be at least 1".into());
        }
        Ok(())
    }

    /// Per-hop terrestrial distance `D / N`.
    pub fn hop_distance(&self) -> f64 {
        self.distance_sd / self.hops as f64
    }

    /// `d_tr^alpha * sigma^2`: the receiver SNR threshold scale per unit power.
    pub fn terrestrial_coeff(&self) -> f64 {
        self.hop_distance().powf(self.path_loss_terrestrial) * self.noise_normalized
    }

    /// Absolute noise floor `sigma_0^2 = sigma^2 * lambda_0`.
    pub fn noise_floor(&self) -> f64 {
        self.noise_normalized * self.reference_gain
    }

    fn check_hop(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.hops {
            return Err(Error::HopIndex {
                index: n,
                hops: self.hops,
            });
        }
        Ok(())
    }
}

/// Per-hop channel coefficients seen by the optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopChannel {
    /// Hop index `n`, 1-based.
    pub index: usize,
    /// Transmitter-to-UAV distance, meters.
    pub dist_uav: f64,
    /// Elevation angle at the UAV, degrees.
    pub elevation_deg: f64,
    pub p_los: f64,
    /// Eavesdropper SNR per unit power and unit fading, LoS state.
    pub gain_los: f64,
    /// Eavesdropper SNR per unit power and unit fading, NLoS state.
    pub gain_nlos: f64,
    /// `b_n`: LoS-weighted inverse UAV gain (watts). Per-hop leakage
    /// probability is approximated as `exp(-gamma_e * b_n / p_n)`.
    pub secrecy_coeff: f64,
    /// `c_n`: coefficient of `p_n^2` in the quadratic relative-entropy bound.
    pub covert_coeff: f64,
}

impl HopChannel {
    /// Builds the coefficients from the per-state gains.
    pub fn from_gains(
        index: usize,
        dist_uav: f64,
        elevation_deg: f64,
        p_los: f64,
        gain_los: f64,
        gain_nlos: f64,
        codeword_length: usize,
    ) -> Self {
        let p_nlos = 1.0 - p_los;
        let secrecy_coeff = p_los / gain_los + p_nlos / gain_nlos;
        let covert_coeff = 0.5
            * codeword_length as f64
            * (p_los * gain_los * gain_los + p_nlos * gain_nlos * gain_nlos);
        Self {
            index,
            dist_uav,
            elevation_deg,
            p_los,
            gain_los,
            gain_nlos,
            secrecy_coeff,
            covert_coeff,
        }
    }
}

/// Position of the hop-`n` transmitter along the axis, meters from the source.
pub fn transmitter_position(scenario: &NetworkScenario, n: usize) -> Result<f64> {
    scenario.check_hop(n)?;
    Ok((n - 1) as f64 * scenario.distance_sd / scenario.hops as f64)
}

/// Distance from the hop-`n` transmitter to the UAV.
pub fn uav_distance(scenario: &NetworkScenario, n: usize) -> Result<f64> {
    let x = scenario.uav_ground_offset - transmitter_position(scenario, n)?;
    Ok(scenario.uav_height.hypot(x))
}

/// Elevation angle in degrees of a UAV at height `height` and slant range `dist_uav`.
pub fn elevation_angle(height: f64, dist_uav: f64) -> Result<f64> {
    if !(height > 0.0 && height <= dist_uav) {
        return Err(Error::Domain(format!(
            "elevation angle needs 0 < H <= d, got H={height} d={dist_uav}"
        )));
    }
    Ok((height / dist_uav).asin().to_degrees())
}

/// Logistic LoS probability at elevation `theta_deg`.
pub fn los_probability(theta_deg: f64, env_b: f64, env_c: f64) -> f64 {
    1.0 / (1.0 + env_c * (-env_b * (theta_deg - env_c)).exp())
}

/// Channel coefficients for every hop of the scenario.
pub fn hop_channels(scenario: &NetworkScenario) -> Result<Vec<HopChannel>> {
    scenario.validate()?;
    (1..=scenario.hops)
        .map(|n| {
            let d = uav_distance(scenario, n)?;
            // hypot can round below H when the horizontal offset is tiny
            let d = d.max(scenario.uav_height);
            let theta = elevation_angle(scenario.uav_height, d)?;
            let p_los = los_probability(theta, scenario.env_b, scenario.env_c);
            let sigma2 = scenario.noise_normalized;
            let gain_los = d.powf(-scenario.path_loss_los) / sigma2;
            let gain_nlos = scenario.excess_nlos * d.powf(-scenario.path_loss_nlos) / sigma2;
            Ok(HopChannel::from_gains(
                n,
                d,
                theta,
                p_los,
                gain_los,
                gain_nlos,
                scenario.codeword_length,
            ))
        })
        .collect()
}

fn check_powers(powers: &[f64]) -> Result<()> {
    for (i, &p) in powers.iter().enumerate() {
        if !(p > 0.0) || p.is_nan() {
            return Err(Error::NonPositivePower {
                hop: i + 1,
                power: p,
            });
        }
    }
    Ok(())
}

/// Probability that every hop's receiver SNR exceeds `gamma_c`.
pub fn connection_probability(
    powers: &[f64],
    gamma_c: f64,
    scenario: &NetworkScenario,
) -> Result<f64> {
    if powers.len() != scenario.hops {
        return Err(Error::InvalidScenario(format!(
            "{} powers for {} hops",
            powers.len(),
            scenario.hops
        )));
    }
    connection_probability_with(powers, gamma_c, scenario.terrestrial_coeff())
}

/// [`connection_probability`] given `d_tr^alpha * sigma^2` directly.
pub fn connection_probability_with(
    powers: &[f64],
    gamma_c: f64,
    terrestrial_coeff: f64,
) -> Result<f64> {
    check_powers(powers)?;
    if !(gamma_c >= 0.0) {
        return Err(Error::Domain(format!("gamma_c must be >= 0, got {gamma_c}")));
    }
    if gamma_c == 0.0 {
        return Ok(1.0);
    }
    let exponent: f64 = powers.iter().map(|p| terrestrial_coeff / p).sum();
    Ok((-gamma_c * exponent).exp())
}

/// End-to-end secrecy outage probability under the per-hop exponential
/// approximation: `1 - prod_n (1 - exp(-gamma_e b_n / p_n))`.
pub fn secrecy_outage_probability(
    powers: &[f64],
    gamma_e: f64,
    channels: &[HopChannel],
) -> Result<f64> {
    check_powers(powers)?;
    if powers.len() != channels.len() {
        return Err(Error::InvalidScenario(format!(
            "{} powers for {} hops",
            powers.len(),
            channels.len()
        )));
    }
    if !(gamma_e > 0.0) {
        return Err(Error::Domain(format!("gamma_e must be positive, got {gamma_e}")));
    }
    // 1 - prod(1 - x_n), accumulated in log space to keep small outages exact.
    let log_secure: f64 = powers
        .iter()
        .zip(channels)
        .map(|(p, ch)| (-(-gamma_e * ch.secrecy_coeff / p).exp()).ln_1p())
        .sum();
    Ok(-log_secure.exp_m1())
}

/// Exact per-hop probability that the UAV's SNR stays below `gamma_e`,
/// averaging over the LoS state instead of averaging the exponent.
pub fn exact_hop_security(power: f64, gamma_e: f64, channel: &HopChannel) -> f64 {
    let los = -(-gamma_e / (power * channel.gain_los)).exp_m1();
    let nlos = -(-gamma_e / (power * channel.gain_nlos)).exp_m1();
    channel.p_los * los + (1.0 - channel.p_los) * nlos
}

/// Approximate per-hop security probability, `1 - exp(-gamma_e b_n / p_n)`.
pub fn approx_hop_security(power: f64, gamma_e: f64, channel: &HopChannel) -> f64 {
    -(-gamma_e * channel.secrecy_coeff / power).exp_m1()
}
