//! Numerical relative entropy between the warden's observation laws.
//!
//! With the noise power normalized to one, a received sample under state `s`
//! is `CN(0, 1 + x_s)` where `x_s = p * gain_s`. Circular symmetry reduces
//! every divergence to a one-dimensional integral over received energy.
//!
//! Ordering for a fixed hop (each step is an inequality):
//!
//! ```text
//! true_kl  <=  block_kl  <=  jensen_kl  <=  c_n p^2
//! ```
//!
//! `true_kl` draws the LoS state per sample; `block_kl` draws it once per
//! hop as the warden simulator does; `jensen_kl` swaps the mixture and the
//! divergence; the last step uses `ln(1 + x) >= x - x^2 / 2`.

use crate::channel::{self, HopChannel, NetworkScenario};
use crate::error::{Error, Result};
use crate::simkit::quadrature::{geometric_breakpoints, integrate};

const REL_TOL: f64 = 1e-11;

/// `D(CN(0, 1 + x) || CN(0, 1)) = x - ln(1 + x)` for a single sample.
pub fn gaussian_kl(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // x^2/2 - x^3/3 + x^4/4 - x^5/5
        let x2 = x * x;
        x2 * (0.5 - x / 3.0 + x2 / 4.0 - x2 * x / 5.0)
    } else {
        x - x.ln_1p()
    }
}

/// `e^l (l - 1) + 1`, the integrand of `KL` written against the reference density.
fn phi(l: f64) -> f64 {
    if l.abs() < 0.1 {
        const C: [f64; 9] = [
            1.0 / 2.0,
            1.0 / 3.0,
            1.0 / 8.0,
            1.0 / 30.0,
            1.0 / 144.0,
            1.0 / 840.0,
            1.0 / 5760.0,
            1.0 / 45360.0,
            1.0 / 403200.0,
        ];
        let mut acc = 0.0;
        for c in C.iter().rev() {
            acc = acc * l + c;
        }
        acc * l * l
    } else {
        l.exp() * (l - 1.0) + 1.0
    }
}

/// Log density ratio `ln sum_i w_i exp(a_i)`, accurate when the exponents are small.
fn log_mixture(weights: &[f64; 2], exponents: &[f64; 2]) -> f64 {
    let m = exponents
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(a, _)| *a)
        .fold(f64::NEG_INFINITY, f64::max);
    if m.abs() < 0.5 {
        let s: f64 = weights
            .iter()
            .zip(exponents)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, a)| w * a.exp_m1())
            .sum();
        s.ln_1p()
    } else {
        let s: f64 = weights
            .iter()
            .zip(exponents)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, a)| w * (a - m).exp())
            .sum();
        m + s.ln()
    }
}

/// `int g0(r) phi(l(r)) dr`, where `log_g0` is the reference log density.
fn divergence_integral<L, G>(log_ratio: L, log_g0: G, scale_lo: f64, scale_hi: f64) -> Result<f64>
where
    L: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let integrand = |r: f64| {
        let lg0 = log_g0(r);
        if lg0 == f64::NEG_INFINITY {
            return 0.0;
        }
        let l = log_ratio(r);
        if l.abs() < 0.1 {
            lg0.exp() * phi(l)
        } else {
            (l + lg0).exp() * (l - 1.0) + lg0.exp()
        }
    };
    let bp = geometric_breakpoints(scale_lo, scale_hi, 1.25);
    let r = integrate(integrand, &bp, REL_TOL, 1e-300, 20_000);
    if !(r.value.is_finite()) || r.error > 1e-8 * r.value.abs().max(1e-300) {
        return Err(Error::Domain(format!(
            "divergence quadrature did not converge: {} +/- {}",
            r.value, r.error
        )));
    }
    Ok(r.value.max(0.0))
}

fn state_snrs(channel: &HopChannel, power: f64) -> ([f64; 2], [f64; 2]) {
    (
        [channel.p_los, 1.0 - channel.p_los],
        [power * channel.gain_los, power * channel.gain_nlos],
    )
}

fn hop(scenario: &NetworkScenario, n: usize) -> Result<HopChannel> {
    let chans = channel::hop_channels(scenario)?;
    chans
        .get(n.wrapping_sub(1))
        .copied()
        .ok_or(Error::HopIndex {
            index: n,
            hops: scenario.hops,
        })
}

/// `L * D(q_mix || q_0)` with the LoS state mixed per received sample.
pub fn true_kl_per_hop(scenario: &NetworkScenario, power: f64, n: usize) -> Result<f64> {
    let ch = hop(scenario, n)?;
    true_kl_for(&ch, power, scenario.codeword_length)
}

/// [`true_kl_per_hop`] for an explicit channel.
pub fn true_kl_for(channel: &HopChannel, power: f64, codeword_length: usize) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::NonPositivePower {
            hop: channel.index,
            power,
        });
    }
    if power == 0.0 {
        return Ok(0.0);
    }
    let (w, x) = state_snrs(channel, power);
    let a_scale = [-x[0].ln_1p(), -x[1].ln_1p()];
    let r_slope = [x[0] / (1.0 + x[0]), x[1] / (1.0 + x[1])];
    let log_ratio = |r: f64| log_mixture(&w, &[a_scale[0] + r * r_slope[0], a_scale[1] + r * r_slope[1]]);
    let v_max = 1.0 + x[0].max(x[1]);
    let per_sample = divergence_integral(log_ratio, |r| -r, 1e-4, 80.0 * v_max)?;
    Ok(codeword_length as f64 * per_sample)
}

/// Exact relative entropy of one hop's `L` samples when the LoS state is
/// drawn once per hop: a mixture of two Gamma laws of the received energy.
pub fn block_kl_per_hop(scenario: &NetworkScenario, power: f64, n: usize) -> Result<f64> {
    let ch = hop(scenario, n)?;
    block_kl_for(&ch, power, scenario.codeword_length)
}

/// [`block_kl_per_hop`] for an explicit channel.
pub fn block_kl_for(channel: &HopChannel, power: f64, codeword_length: usize) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::NonPositivePower {
            hop: channel.index,
            power,
        });
    }
    if power == 0.0 {
        return Ok(0.0);
    }
    let len = codeword_length as f64;
    let (w, x) = state_snrs(channel, power);
    let a_scale = [-len * x[0].ln_1p(), -len * x[1].ln_1p()];
    let s_slope = [x[0] / (1.0 + x[0]), x[1] / (1.0 + x[1])];
    let log_ratio = |s: f64| log_mixture(&w, &[a_scale[0] + s * s_slope[0], a_scale[1] + s * s_slope[1]]);
    let ln_gamma_len: f64 = (1..codeword_length).map(|k| (k as f64).ln()).sum();
    let log_g0 = move |s: f64| {
        if s <= 0.0 {
            if codeword_length == 1 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (len - 1.0) * s.ln() - s - ln_gamma_len
        }
    };
    let v_max = 1.0 + x[0].max(x[1]);
    let s_max = v_max * (2.0 * len + 20.0 * len.sqrt() + 80.0);
    divergence_integral(log_ratio, log_g0, 1e-4, s_max)
}

/// `L * (P_los D_los + P_nlos D_nlos)`: the mixture moved outside the divergence.
pub fn jensen_kl_per_hop(channel: &HopChannel, power: f64, codeword_length: usize) -> f64 {
    let (w, x) = state_snrs(channel, power);
    codeword_length as f64 * (w[0] * gaussian_kl(x[0]) + w[1] * gaussian_kl(x[1]))
}
