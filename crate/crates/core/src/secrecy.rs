//! Secrecy-outage-constrained throughput maximization.
//!
//! For a fixed hop count the problem separates. Powers and the wiretap
//! threshold `gamma_e` follow from a Lagrangian solution of
//! `min sum t_n  s.t.  sum exp(-b_n t_n) <= zeta` with `t_n = gamma_e / p_n`
//! and the sum-power constraint active. The secrecy rate then maximizes a
//! quasi-concave one-dimensional objective whose stationary point is given by
//! the principal Lambert W branch. The hop count is found by enumeration.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, HopChannel, NetworkScenario};
use crate::error::{Error, Result};
use crate::numerics::{bisect, lambert_w0, RootBracket};

/// Secrecy-outage budget and sum-power limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecrecyConstraints {
    /// Secrecy outage budget `zeta`, in (0, 1).
    pub zeta: f64,
    /// Total transmit power over all hops, watts.
    pub power_total: f64,
}

impl SecrecyConstraints {
    pub fn new(zeta: f64, power_total: f64) -> Result<Self> {
        let c = Self { zeta, power_total };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::InvalidConstraint(format!(
                "zeta must lie in (0, 1), got {}",
                self.zeta
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
}

/// Optimal per-hop powers and wiretap threshold for a fixed hop count.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyAllocation {
    pub gamma_e: f64,
    pub powers: Vec<f64>,
    /// `t_n = gamma_e / p_n`.
    pub t: Vec<f64>,
}

/// Everything the planner reports for one hop count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecySolution {
    pub hops: usize,
    pub powers: Vec<f64>,
    pub gamma_e: f64,
    /// Decoding threshold `(gamma_e + 1) 2^{R_s} - 1` used for `p_connect`.
    pub gamma_c: f64,
    pub rate_tx: f64,
    pub rate_secret: f64,
    pub rate_redundancy: f64,
    pub p_connect: f64,
    /// Product-form outage `1 - prod(1 - exp(-gamma_e b_n / p_n))`.
    pub p_secrecy_outage: f64,
    /// Sum-form outage `sum exp(-gamma_e b_n / p_n)`, the quantity held at `zeta`.
    pub sop_sum: f64,
    pub throughput: f64,
    pub a1: f64,
}

/// Closed-form power allocation with both constraints active.
pub fn allocate_secrecy_power(
    channels: &[HopChannel],
    constraints: &SecrecyConstraints,
) -> Result<SecrecyAllocation> {
    constraints.validate()?;
    if channels.is_empty() {
        return Err(Error::InvalidScenario("at least one hop is required".into()));
    }
    let inv_sum: f64 = channels.iter().map(|ch| ch.secrecy_coeff.recip()).sum();
    let t: Vec<f64> = channels
        .iter()
        .map(|ch| (ch.secrecy_coeff * inv_sum / constraints.zeta).ln() / ch.secrecy_coeff)
        .collect();
    if let Some(n) = t.iter().position(|&tn| !(tn > 0.0) || !tn.is_finite()) {
        return Err(Error::Infeasible(format!(
            "t_{} = {} <= 0: zeta {} too loose for this geometry",
            n + 1,
            t[n],
            constraints.zeta
        )));
    }
    let gamma_e = constraints.power_total / t.iter().map(|tn| tn.recip()).sum::<f64>();
    let powers = t.iter().map(|tn| gamma_e / tn).collect();
    Ok(SecrecyAllocation { gamma_e, powers, t })
}

/// `A_1 = d_tr^alpha sigma^2 sum_n t_n`.
pub fn secrecy_a1(t: &[f64], terrestrial_coeff: f64) -> f64 {
    terrestrial_coeff * t.iter().sum::<f64>()
}

/// The rate objective `exp(-((gamma_e + 1) 2^R - 1) A_1 / gamma_e) R`.
pub fn secrecy_rate_objective(rate: f64, gamma_e: f64, a1: f64) -> f64 {
    let gamma_c = (gamma_e + 1.0) * rate.exp2() - 1.0;
    (-gamma_c * a1 / gamma_e).exp() * rate
}

/// First-order condition `1 - (A_1 / gamma_e)(gamma_e + 1) ln2 2^R R`.
pub fn secrecy_stationarity(rate: f64, gamma_e: f64, a1: f64) -> f64 {
    1.0 - a1 / gamma_e * (gamma_e + 1.0) * LN_2 * rate.exp2() * rate
}

/// Throughput-maximizing secrecy rate `W0(gamma_e / (A_1 (gamma_e + 1))) / ln 2`.
pub fn optimal_secrecy_rate(gamma_e: f64, a1: f64) -> Result<f64> {
    if !(gamma_e > 0.0 && a1 > 0.0) {
        return Err(Error::Domain(format!(
            "secrecy rate needs gamma_e > 0 and A_1 > 0, got {gamma_e}, {a1}"
        )));
    }
    Ok(lambert_w0(gamma_e / (a1 * (gamma_e + 1.0)))? / LN_2)
}

/// Optimal allocation and rates for the given channels.
pub fn solve_secrecy(
    channels: &[HopChannel],
    terrestrial_coeff: f64,
    constraints: &SecrecyConstraints,
) -> Result<SecrecySolution> {
    let alloc = allocate_secrecy_power(channels, constraints)?;
    finish(channels, terrestrial_coeff, alloc)
}

/// Optimal allocation and rates for `scenario.hops` hops.
pub fn evaluate_secrecy(
    scenario: &NetworkScenario,
    constraints: &SecrecyConstraints,
) -> Result<SecrecySolution> {
    let channels = channel::hop_channels(scenario)?;
    solve_secrecy(&channels, scenario.terrestrial_coeff(), constraints)
}

/// Baseline with the same power on every hop.
///
/// The common `t = gamma_e / p` is the smallest value meeting the sum-form
/// outage budget and the sum-power constraint is active, so `p = P_T / N`.
/// Rates are then chosen exactly as in the optimized path.
pub fn equal_power_secrecy_with(
    channels: &[HopChannel],
    terrestrial_coeff: f64,
    constraints: &SecrecyConstraints,
) -> Result<SecrecySolution> {
    constraints.validate()?;
    if channels.is_empty() {
        return Err(Error::InvalidScenario("at least one hop is required".into()));
    }
    let hops = channels.len() as f64;
    let zeta = constraints.zeta;
    let b_min = channels
        .iter()
        .map(|ch| ch.secrecy_coeff)
        .fold(f64::INFINITY, f64::min);
    let sop = |t: f64| -> f64 {
        channels
            .iter()
            .map(|ch| (-ch.secrecy_coeff * t).exp())
            .sum::<f64>()
            - zeta
    };
    // at t_hi every term is at most zeta / 2N
    let t_hi = (2.0 * hops / zeta).ln() / b_min;
    if !(t_hi > 0.0) {
        return Err(Error::Infeasible(format!("zeta {zeta} admits no equal-power point")));
    }
    let bracket = RootBracket::new(0.0, t_hi)
        .with_tol(f64::MIN_POSITIVE)
        .with_max_iter(4000);
    let mut t = bisect(sop, bracket)?;
    // step onto the feasible side of the budget
    while sop(t) > 0.0 {
        t = t.next_up();
    }
    let gamma_e = constraints.power_total * t / hops;
    let alloc = SecrecyAllocation {
        gamma_e,
        powers: vec![constraints.power_total / hops; channels.len()],
        t: vec![t; channels.len()],
    };
    finish(channels, terrestrial_coeff, alloc)
}

/// [`equal_power_secrecy_with`] for `scenario.hops` hops.
pub fn equal_power_secrecy(
    scenario: &NetworkScenario,
    constraints: &SecrecyConstraints,
) -> Result<SecrecySolution> {
    let channels = channel::hop_channels(scenario)?;
    equal_power_secrecy_with(&channels, scenario.terrestrial_coeff(), constraints)
}

fn finish(
    channels: &[HopChannel],
    terrestrial_coeff: f64,
    alloc: SecrecyAllocation,
) -> Result<SecrecySolution> {
    let SecrecyAllocation { gamma_e, powers, t } = alloc;
    let a1 = secrecy_a1(&t, terrestrial_coeff);
    let rate_secret = optimal_secrecy_rate(gamma_e, a1)?;
    let rate_redundancy = gamma_e.ln_1p() / LN_2;
    let rate_tx = rate_redundancy + rate_secret;
    let gamma_c = (gamma_e + 1.0) * rate_secret.exp2() - 1.0;
    let p_connect = channel::connection_probability_with(&powers, gamma_c, terrestrial_coeff)?;
    let p_secrecy_outage = channel::secrecy_outage_probability(&powers, gamma_e, channels)?;
    let sop_sum = channels
        .iter()
        .zip(&t)
        .map(|(ch, tn)| (-ch.secrecy_coeff * tn).exp())
        .sum();
    let hops = channels.len();
    Ok(SecrecySolution {
        hops,
        powers,
        gamma_e,
        gamma_c,
        rate_tx,
        rate_secret,
        rate_redundancy,
        p_connect,
        p_secrecy_outage,
        sop_sum,
        throughput: p_connect * rate_secret / hops as f64,
        a1,
    })
}

/// Enumerates `N = 1..=n_max` and returns the throughput maximizer.
///
/// Ties go to the smaller hop count. Hop counts whose allocation is
/// infeasible are skipped; if none is feasible the first error is returned.
pub fn search_hops_secrecy(
    template: &NetworkScenario,
    constraints: &SecrecyConstraints,
    n_max: usize,
) -> Result<(usize, SecrecySolution)> {
    search_hops(template, n_max, |s| evaluate_secrecy(s, constraints))
}

/// Like [`search_hops_secrecy`] but with the equal-power baseline at each `N`.
pub fn search_hops_secrecy_equal_power(
    template: &NetworkScenario,
    constraints: &SecrecyConstraints,
    n_max: usize,
) -> Result<(usize, SecrecySolution)> {
    search_hops(template, n_max, |s| equal_power_secrecy(s, constraints))
}

fn search_hops<F>(
    template: &NetworkScenario,
    n_max: usize,
    eval: F,
) -> Result<(usize, SecrecySolution)>
where
    F: Fn(&NetworkScenario) -> Result<SecrecySolution> + Sync,
{
    if n_max == 0 {
        return Err(Error::InvalidScenario("n_max must be at least 1".into()));
    }
    let results: Vec<Result<SecrecySolution>> = (1..=n_max)
        .into_par_iter()
        .map(|n| eval(&template.with_hops(n)))
        .collect();
    let mut best: Option<SecrecySolution> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(sol) => {
                if best.as_ref().map_or(true, |b| sol.throughput > b.throughput) {
                    best = Some(sol);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(sol) => Ok((sol.hops, sol)),
        None => Err(first_err.expect("n_max >= 1 yields at least one result")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(b: &[f64]) -> Vec<HopChannel> {
        b.iter()
            .enumerate()
            .map(|(i, &bn)| HopChannel {
                index: i + 1,
                dist_uav: 300.0,
                elevation_deg: 90.0,
                p_los: 1.0,
                gain_los: bn.recip(),
                gain_nlos: bn.recip(),
                secrecy_coeff: bn,
                covert_coeff: 1.0,
            })
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn single_hop_reduction() {
        let ch = synthetic(&[2e-3]);
        let c = SecrecyConstraints::new(0.05, 0.7).unwrap();
        let a = allocate_secrecy_power(&ch, &c).unwrap();
        let t1 = (1.0f64 / 0.05).ln() / 2e-3;
        assert!(rel(a.t[0], t1) < 1e-14);
        assert!(rel(a.gamma_e, 0.7 * t1) < 1e-14);
        assert!(rel(a.powers[0], 0.7) < 1e-14);
    }

    #[test]
    fn equal_coefficients_split_evenly() {
        let ch = synthetic(&[1e-3; 5]);
        let c = SecrecyConstraints::new(0.1, 2.0).unwrap();
        let a = allocate_secrecy_power(&ch, &c).unwrap();
        for (tn, pn) in a.t.iter().zip(&a.powers) {
            assert!(rel(*tn, a.t[0]) < 1e-15);
            assert!(rel(*pn, 0.4) < 1e-14);
        }
    }

    #[test]
    fn active_constraints_at_reference_geometry() {
        let s = NetworkScenario::new(300.0, 3, 300.0);
        let ch = channel::hop_channels(&s).unwrap();
        let c = SecrecyConstraints::new(0.1, 1.0).unwrap();
        let a = allocate_secrecy_power(&ch, &c).unwrap();
        let sop: f64 = ch
            .iter()
            .zip(&a.t)
            .map(|(h, t)| (-h.secrecy_coeff * t).exp())
            .sum();
        assert!((sop - 0.1).abs() < 1e-9);
        assert!((a.powers.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (p, t) in a.powers.iter().zip(&a.t) {
            assert!(rel(p * t, a.gamma_e) < 1e-14);
        }
    }

    #[test]
    fn infeasible_budget_is_reported() {
        // b_n * sum_k 1/b_k >= 1, so any zeta < 1 keeps every t_n positive
        let ch = synthetic(&[1.0, 1e-6]);
        let c = SecrecyConstraints::new(0.9, 1.0).unwrap();
        assert!(allocate_secrecy_power(&ch, &c).unwrap().t.iter().all(|&t| t > 0.0));
        let mut c = c;
        c.zeta = 1.5;
        assert!(matches!(
            allocate_secrecy_power(&ch, &c),
            Err(Error::InvalidConstraint(_))
        ));
        assert!(SecrecyConstraints::new(0.0, 1.0).is_err());
        assert!(SecrecyConstraints::new(0.1, 0.0).is_err());
        assert!(allocate_secrecy_power(&[], &SecrecyConstraints::new(0.1, 1.0).unwrap()).is_err());
    }

    #[test]
    fn rate_at_unit_lambert_argument() {
        // gamma / (A1 (gamma + 1)) = e  =>  R = 1 / ln 2
        let gamma = 3.0;
        let a1 = gamma / (std::f64::consts::E * (gamma + 1.0));
        let r = optimal_secrecy_rate(gamma, a1).unwrap();
        assert!((r - 1.0 / LN_2).abs() < 1e-14);
        assert!((r - 1.442_69).abs() < 1e-5);
        assert!(optimal_secrecy_rate(gamma, 1e30).unwrap() < 1e-29);
        assert!(optimal_secrecy_rate(0.0, 1.0).is_err());
        assert!(optimal_secrecy_rate(1.0, -1.0).is_err());
    }

    #[test]
    fn gamma_e_decreases_with_zeta() {
        let s = NetworkScenario::new(300.0, 7, 300.0);
        let ch = channel::hop_channels(&s).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..10 {
            let zeta = 0.001 * 300f64.powf(k as f64 / 9.0);
            let a = allocate_secrecy_power(&ch, &SecrecyConstraints::new(zeta, 1.0).unwrap())
                .unwrap();
            assert!(a.gamma_e < prev);
            prev = a.gamma_e;
        }
    }

    #[test]
    fn solution_invariants() {
        let s = NetworkScenario::new(300.0, 7, 300.0);
        let c = SecrecyConstraints::new(0.1, 1.0).unwrap();
        let sol = evaluate_secrecy(&s, &c).unwrap();
        assert_eq!(sol.hops, 7);
        assert!(sol.powers.iter().sum::<f64>() <= 1.0 + 1e-12);
        assert_eq!(sol.rate_tx, sol.rate_redundancy + sol.rate_secret);
        assert!(sol.rate_secret > 0.0 && sol.rate_secret < sol.rate_tx);
        assert!(sol.p_secrecy_outage <= c.zeta + 1e-9);
        assert!((sol.p_secrecy_outage - c.zeta).abs() <= c.zeta * c.zeta * 7.0);
        assert!(secrecy_stationarity(sol.rate_secret, sol.gamma_e, sol.a1).abs() < 1e-9);
        let expect = sol.p_connect * sol.rate_secret / 7.0;
        assert!(rel(sol.throughput, expect) < 1e-15);
    }

    #[test]
    fn looser_budget_never_hurts() {
        let s = NetworkScenario::new(300.0, 5, 300.0);
        let tight = evaluate_secrecy(&s, &SecrecyConstraints::new(0.01, 0.1).unwrap()).unwrap();
        let loose = evaluate_secrecy(&s, &SecrecyConstraints::new(0.1, 0.1).unwrap()).unwrap();
        assert!(loose.throughput >= tight.throughput);
    }

    #[test]
    fn equal_power_matches_optimum_when_symmetric() {
        let ch = synthetic(&[3e-4; 4]);
        let c = SecrecyConstraints::new(0.05, 1.0).unwrap();
        let opt = solve_secrecy(&ch, 1e-5, &c).unwrap();
        let eq = equal_power_secrecy_with(&ch, 1e-5, &c).unwrap();
        assert!((opt.throughput - eq.throughput).abs() < 1e-9);
        assert!(eq.sop_sum <= c.zeta);

        let s1 = NetworkScenario::new(300.0, 1, 300.0);
        let opt = evaluate_secrecy(&s1, &c).unwrap();
        let eq = equal_power_secrecy(&s1, &c).unwrap();
        assert!((opt.throughput - eq.throughput).abs() < 1e-9);
    }

    #[test]
    fn equal_power_is_dominated_off_center() {
        let mut s = NetworkScenario::new(300.0, 6, 200.0);
        s.uav_ground_offset = 60.0;
        for zeta in [0.01, 0.05, 0.2] {
            let c = SecrecyConstraints::new(zeta, 1.0).unwrap();
            let opt = evaluate_secrecy(&s, &c).unwrap();
            let eq = equal_power_secrecy(&s, &c).unwrap();
            assert!(eq.throughput <= opt.throughput, "zeta {zeta}");
            assert!((eq.powers.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hop_search_edges() {
        let s = NetworkScenario::new(300.0, 1, 300.0);
        let c = SecrecyConstraints::new(0.1, 1.0).unwrap();
        let (n, sol) = search_hops_secrecy(&s, &c, 1).unwrap();
        assert_eq!((n, sol.hops), (1, 1));
        assert!(search_hops_secrecy(&s, &c, 0).is_err());
    }

    #[test]
    fn tiny_power_needs_relays() {
        let s = NetworkScenario::new(300.0, 1, 300.0);
        let c = SecrecyConstraints::new(0.1, 1e-6).unwrap();
        let one = evaluate_secrecy(&s.with_hops(1), &c).unwrap().throughput;
        let (n, best) = search_hops_secrecy(&s, &c, 60).unwrap();
        assert!(n > 1);
        assert!(best.throughput > one);
    }
}
