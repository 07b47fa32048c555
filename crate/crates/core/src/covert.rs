//! Covert (low probability of detection) throughput maximization.
//!
//! The warden's relative entropy is bounded by `sum_n c_n p_n^2`, so the
//! power subproblem is
//!
//! ```text
//! min  sum 1/p_n   s.t.  sum c_n p_n^2 <= 2 eps^2,   sum p_n <= P_T
//! ```
//!
//! Stationarity gives `2 lambda c_n p_n^3 + mu p_n^2 = 1` per hop. With only two
//! constraints the active set is enumerated exactly: divergence only, power
//! only, then both (nested bisection on the multipliers).

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, HopChannel, NetworkScenario};
use crate::error::{Error, Result};
use crate::numerics::{bisect, lambert_w0, positive_cubic_root, RootBracket};

/// Covertness budget and sum-power limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertConstraints {
    /// Covertness budget `eps`: the detection error sum must stay above `1 - eps`.
    pub epsilon: f64,
    /// Total transmit power over all hops, watts.
    pub power_total: f64,
}

impl CovertConstraints {
    pub fn new(epsilon: f64, power_total: f64) -> Result<Self> {
        let c = Self {
            epsilon,
            power_total,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConstraint(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.power_total > 0.0 && self.power_total.is_finite()) {
            return Err(Error::InvalidConstraint(format!(
                "power_total must be positive, got {}",
                self.power_total
            )));
        }
        Ok(())
    }

    /// Relative-entropy budget `2 eps^2`.
    pub fn kl_budget(&self) -> f64 {
        2.0 * self.epsilon * self.epsilon
    }
}

/// KKT multipliers of the divergence and sum-power constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub kl: f64,
    pub power: f64,
}

/// Which constraints bind at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveSet {
    Divergence,
    Power,
    Both,
}

impl ActiveSet {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActiveSet::Divergence => "divergence",
            ActiveSet::Power => "power",
            ActiveSet::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovertAllocation {
    pub powers: Vec<f64>,
    pub multipliers: Multipliers,
    pub active: ActiveSet,
}

/// Scaled KKT residuals; every field is dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `max_n |2 lambda c_n p_n^3 + mu p_n^2 - 1|`, i.e. the gradient residual times `p_n^2`.
    pub stationarity: f64,
    /// Relative violation of the divergence budget.
    pub divergence_excess: f64,
    /// Relative violation of the power budget.
    pub power_excess: f64,
    /// Magnitude of any negative multiplier.
    pub dual_infeasibility: f64,
    /// `lambda |sum c p^2 - 2 eps^2| / sum 1/p`.
    pub slackness_divergence: f64,
    /// `mu |sum p - P_T| / sum 1/p`.
    pub slackness_power: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        [
            self.stationarity,
            self.divergence_excess,
            self.power_excess,
            self.dual_infeasibility,
            self.slackness_divergence,
            self.slackness_power,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Everything the planner reports for one hop count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertSolution {
    pub hops: usize,
    pub powers: Vec<f64>,
    pub rate_tx: f64,
    /// Decoding threshold `2^{R_t} - 1`.
    pub gamma_c: f64,
    pub p_connect: f64,
    /// Quadratic upper bound on the warden's relative entropy, nats.
    pub kl_bound: f64,
    pub throughput: f64,
    /// `A_2 = d_tr^alpha sigma^2 sum 1/p_n`.
    pub a2: f64,
    /// Present for the optimized allocation, absent for the equal-power baseline.
    pub multipliers: Option<Multipliers>,
    pub active: Option<ActiveSet>,
}

impl CovertSolution {
    pub fn average_power(&self) -> f64 {
        self.powers.iter().sum::<f64>() / self.hops as f64
    }
}

/// `sum_n c_n p_n^2`, the quadratic bound on the warden's relative entropy.
pub fn kl_bound(powers: &[f64], channels: &[HopChannel]) -> f64 {
    powers
        .iter()
        .zip(channels)
        .map(|(p, ch)| ch.covert_coeff * p * p)
        .sum()
}

fn powers_for(channels: &[HopChannel], lambda: f64, mu: f64) -> Result<Vec<f64>> {
    channels
        .iter()
        .map(|ch| positive_cubic_root(mu, 2.0 * lambda * ch.covert_coeff))
        .collect()
}

/// Minimizes `sum 1/p_n` under the divergence and sum-power budgets.
pub fn allocate_covert_power(
    channels: &[HopChannel],
    constraints: &CovertConstraints,
) -> Result<CovertAllocation> {
    constraints.validate()?;
    if channels.is_empty() {
        return Err(Error::InvalidScenario("at least one hop is required".into()));
    }
    let budget = constraints.kl_budget();
    let power_total = constraints.power_total;
    let hops = channels.len() as f64;
    let c_sum: f64 = channels.iter().map(|ch| ch.covert_coeff).sum();

    // Divergence only (mu = 0): p_n = (2 lambda c_n)^{-1/3}, scaled onto the budget.
    let cbrt_sum: f64 = channels.iter().map(|ch| ch.covert_coeff.cbrt()).sum();
    let scale = (budget / cbrt_sum).sqrt();
    let powers: Vec<f64> = channels
        .iter()
        .map(|ch| scale / ch.covert_coeff.cbrt())
        .collect();
    if powers.iter().sum::<f64>() <= power_total {
        let lambda = 0.5 * (cbrt_sum / budget).powf(1.5);
        return Ok(CovertAllocation {
            powers,
            multipliers: Multipliers {
                kl: lambda,
                power: 0.0,
            },
            active: ActiveSet::Divergence,
        });
    }

    // Power only (lambda = 0): stationarity forces an even split.
    let even = power_total / hops;
    if c_sum * even * even <= budget {
        return Ok(CovertAllocation {
            powers: vec![even; channels.len()],
            multipliers: Multipliers {
                kl: 0.0,
                power: even.powi(-2),
            },
            active: ActiveSet::Power,
        });
    }

    // Both active. For a given mu the divergence multiplier is the root of
    // sum c p^2 = budget; mu is then tuned until sum p = P_T.
    let mu_max = c_sum / budget;
    let kl_at = |lambda: f64, mu: f64| -> Result<f64> {
        Ok(kl_bound(&powers_for(channels, lambda, mu)?, channels))
    };
    let lambda_for = |mu: f64| -> Result<f64> {
        if mu >= mu_max {
            return Ok(0.0);
        }
        let mut s_hi = (0.5 * (cbrt_sum / budget).powf(1.5)).ln();
        while kl_at(s_hi.exp(), mu)? > budget {
            s_hi += 1.0;
        }
        let mut s_lo = s_hi - 1.0;
        while kl_at(s_lo.exp(), mu)? <= budget {
            s_lo -= 4.0;
            if s_lo < -745.0 {
                return Ok(0.0);
            }
        }
        let f = |s: f64| kl_at(s.exp(), mu).map_or(f64::NAN, |kl| kl / budget - 1.0);
        let bracket = RootBracket::new(s_lo, s_hi)
            .with_tol(f64::MIN_POSITIVE)
            .with_max_iter(4000);
        let mut s = bisect(f, bracket)?;
        while kl_at(s.exp(), mu)? > budget {
            s = s.next_up();
        }
        Ok(s.exp())
    };
    let excess_power = |mu: f64| -> f64 {
        lambda_for(mu)
            .and_then(|lambda| powers_for(channels, lambda, mu))
            .map_or(f64::NAN, |p| p.iter().sum::<f64>() / power_total - 1.0)
    };
    let bracket = RootBracket::new(0.0, mu_max)
        .with_tol(f64::MIN_POSITIVE)
        .with_max_iter(4000);
    let mut mu = match bisect(excess_power, bracket) {
        Ok(mu) => mu,
        Err(e) => {
            return Err(Error::Infeasible(format!(
                "could not bracket the power multiplier: {e}"
            )))
        }
    };
    let mut guard = 0;
    while excess_power(mu) > 0.0 && guard < 64 {
        mu = mu.next_up();
        guard += 1;
    }
    let lambda = lambda_for(mu)?;
    Ok(CovertAllocation {
        powers: powers_for(channels, lambda, mu)?,
        multipliers: Multipliers {
            kl: lambda,
            power: mu,
        },
        active: ActiveSet::Both,
    })
}

/// Optimality certificate of an allocation, independent of how it was found.
pub fn kkt_residuals(
    channels: &[HopChannel],
    constraints: &CovertConstraints,
    powers: &[f64],
    multipliers: &Multipliers,
) -> KktResiduals {
    let Multipliers { kl: lambda, power: mu } = *multipliers;
    let budget = constraints.kl_budget();
    let kl = kl_bound(powers, channels);
    let total: f64 = powers.iter().sum();
    let objective: f64 = powers.iter().map(|p| p.recip()).sum();
    let stationarity = powers
        .iter()
        .zip(channels)
        .map(|(p, ch)| (2.0 * lambda * ch.covert_coeff * p * p * p + mu * p * p - 1.0).abs())
        .fold(0.0, f64::max);
    KktResiduals {
        stationarity,
        divergence_excess: ((kl - budget) / budget).max(0.0),
        power_excess: ((total - constraints.power_total) / constraints.power_total).max(0.0),
        dual_infeasibility: (-lambda).max(-mu).max(0.0),
        slackness_divergence: lambda * (kl - budget).abs() / objective,
        slackness_power: mu * (total - constraints.power_total).abs() / objective,
    }
}

/// The rate objective `exp(-(2^R - 1) A_2) R`.
pub fn covert_rate_objective(rate: f64, a2: f64) -> f64 {
    (-(rate * LN_2).exp_m1() * a2).exp() * rate
}

/// Throughput-maximizing transmission rate `W0(1 / A_2) / ln 2`.
pub fn optimal_covert_rate(a2: f64) -> Result<f64> {
    if !(a2 > 0.0) {
        return Err(Error::Domain(format!("covert rate needs A_2 > 0, got {a2}")));
    }
    Ok(lambert_w0(a2.recip())? / LN_2)
}

fn finish(
    channels: &[HopChannel],
    terrestrial_coeff: f64,
    powers: Vec<f64>,
    multipliers: Option<Multipliers>,
    active: Option<ActiveSet>,
) -> Result<CovertSolution> {
    let a2 = terrestrial_coeff * powers.iter().map(|p| p.recip()).sum::<f64>();
    let rate_tx = optimal_covert_rate(a2)?;
    let gamma_c = rate_tx.exp2() - 1.0;
    let p_connect = channel::connection_probability_with(&powers, gamma_c, terrestrial_coeff)?;
    let hops = channels.len();
    Ok(CovertSolution {
        hops,
        kl_bound: kl_bound(&powers, channels),
        powers,
        rate_tx,
        gamma_c,
        p_connect,
        throughput: p_connect * rate_tx / hops as f64,
        a2,
        multipliers,
        active,
    })
}

/// Optimal allocation and rate for the given channels.
pub fn solve_covert(
    channels: &[HopChannel],
    terrestrial_coeff: f64,
    constraints: &CovertConstraints,
) -> Result<CovertSolution> {
    let alloc = allocate_covert_power(channels, constraints)?;
    finish(
        channels,
        terrestrial_coeff,
        alloc.powers,
        Some(alloc.multipliers),
        Some(alloc.active),
    )
}

/// Optimal allocation and rate for `scenario.hops` hops.
pub fn evaluate_covert(
    scenario: &NetworkScenario,
    constraints: &CovertConstraints,
) -> Result<CovertSolution> {
    let channels = channel::hop_channels(scenario)?;
    solve_covert(&channels, scenario.terrestrial_coeff(), constraints)
}

/// Baseline: the largest common power meeting both budgets,
/// `min(P_T / N, sqrt(2 eps^2 / sum c_n))`.
pub fn equal_power_covert_with(
    channels: &[HopChannel],
    terrestrial_coeff: f64,
    constraints: &CovertConstraints,
) -> Result<CovertSolution> {
    constraints.validate()?;
    if channels.is_empty() {
        return Err(Error::InvalidScenario("at least one hop is required".into()));
    }
    let c_sum: f64 = channels.iter().map(|ch| ch.covert_coeff).sum();
    let p = (constraints.power_total / channels.len() as f64)
        .min((constraints.kl_budget() / c_sum).sqrt());
    finish(channels, terrestrial_coeff, vec![p; channels.len()], None, None)
}

pub fn equal_power_covert(
    scenario: &NetworkScenario,
    constraints: &CovertConstraints,
) -> Result<CovertSolution> {
    let channels = channel::hop_channels(scenario)?;
    equal_power_covert_with(&channels, scenario.terrestrial_coeff(), constraints)
}

/// Enumerates `N = 1..=n_max`, returning the throughput maximizer (ties to smaller `N`).
pub fn search_hops_covert(
    template: &NetworkScenario,
    constraints: &CovertConstraints,
    n_max: usize,
) -> Result<(usize, CovertSolution)> {
    if n_max == 0 {
        return Err(Error::InvalidScenario("n_max must be at least 1".into()));
    }
    let results: Vec<Result<CovertSolution>> = (1..=n_max)
        .into_par_iter()
        .map(|n| evaluate_covert(&template.with_hops(n), constraints))
        .collect();
    let mut best: Option<CovertSolution> = None;
    for r in results {
        let sol = r?;
        if best.as_ref().map_or(true, |b| sol.throughput > b.throughput) {
            best = Some(sol);
        }
    }
    let best = best.expect("n_max >= 1");
    Ok((best.hops, best))
}
