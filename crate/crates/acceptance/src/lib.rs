//! Reference oracles and helpers for the acceptance run. They deliberately
//! avoid the library's own solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relayguard::cli::{execute, parse_config, Report, Table};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on a log scale between `lo` and `hi`.
pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
}

/// Maximizer of a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force minimum of `sum 1/p` over `sum c p^2 <= kl_budget`,
/// `sum p <= power_total`. The first `N - 1` powers run over a uniform grid
/// of `steps` points on their individual ranges; the last takes the largest
/// value both budgets still allow (the objective falls in every coordinate).
pub fn covert_grid_min(c: &[f64], kl_budget: f64, power_total: f64, steps: usize) -> f64 {
    let n = c.len();
    let p_max: Vec<f64> = c
        .iter()
        .map(|ci| power_total.min((kl_budget / ci).sqrt()))
        .collect();
    let mut best = f64::INFINITY;
    let mut idx = vec![1usize; n - 1];
    loop {
        let mut power_left = power_total;
        let mut kl_left = kl_budget;
        let mut obj = 0.0;
        for (i, &k) in idx.iter().enumerate() {
            let p = p_max[i] * k as f64 / steps as f64;
            power_left -= p;
            kl_left -= c[i] * p * p;
            obj += 1.0 / p;
        }
        if power_left > 0.0 && kl_left > 0.0 {
            let last = power_left.min((kl_left / c[n - 1]).sqrt());
            best = best.min(obj + 1.0 / last);
        }
        // odometer over the grid
        let mut d = 0;
        loop {
            if d == idx.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 1;
            d += 1;
        }
    }
}

pub fn run_config(text: &str) -> Report {
    execute(&parse_config(text).expect("config")).expect("run")
}

pub fn sweep_table(report: &Report) -> &Table {
    report.table("sweep").expect("sweep table")
}

pub fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Index of the maximum if `xs` rises to it and falls after it.
pub fn unimodal_peak(xs: &[f64]) -> Option<usize> {
    let k = xs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?
        .0;
    let rises = xs[..=k].windows(2).all(|w| w[1] >= w[0]);
    let falls = xs[k..].windows(2).all(|w| w[1] <= w[0]);
    (rises && falls).then_some(k)
}

/// Index of the minimum if `xs` falls to it and rises after it.
pub fn valley(xs: &[f64]) -> Option<usize> {
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    unimodal_peak(&neg)
}

pub fn scenario_block(distance: f64, hops: usize, height: f64) -> String {
    format!("[scenario]\ndistance = \"{distance:?} m\"\nhops = {hops}\nheight = \"{height:?} m\"\n")
}
