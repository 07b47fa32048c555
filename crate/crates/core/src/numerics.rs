//! Scalar special functions and root finders shared by both optimizers.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Default absolute tolerance on roots.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Search interval for [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            tol: DEFAULT_TOL,
            max_iter: 200,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Principal branch of the Lambert W function.
///
/// Halley iteration started from `ln(1 + x)` for `x >= 0`; a short series is
/// used for `|x| < 1e-4` and a branch-point expansion seeds negative inputs.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch {
        return Err(Error::Domain(format!("lambert_w0 needs x >= -1/e, got {x}")));
    }
    if x == branch {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x.abs() < 1e-4 {
        // W(x) = x - x^2 + 3/2 x^3 - 8/3 x^4 + 125/24 x^5
        let x2 = x * x;
        return Ok(x - x2 + 1.5 * x2 * x - (8.0 / 3.0) * x2 * x2 + (125.0 / 24.0) * x2 * x2 * x);
    }

    let mut w = if x > 0.0 {
        x.ln_1p()
    } else {
        let p = (2.0 * (E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// Bisection on a continuous function whose sign differs at the bracket ends.
///
/// Stops once `|f(mid)| <= tol`, the interval is narrower than `tol`, or the
/// midpoint can no longer be distinguished from an endpoint.
pub fn bisect<F>(mut f: F, bracket: RootBracket) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let RootBracket {
        mut lo,
        mut hi,
        tol,
        max_iter,
    } = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "bracket needs lo < hi and tol > 0, got [{lo}, {hi}] tol {tol}"
        )));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NotBracketed { lo, hi });
    }

    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid.abs() <= tol || hi - lo <= tol {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::MaxIterations(max_iter))
}

/// The unique positive root of `a3 p^3 + a2 p^2 = 1`.
pub fn positive_cubic_root(a2: f64, a3: f64) -> Result<f64> {
    if !(a2 >= 0.0 && a3 >= 0.0) || a2 + a3 <= 0.0 || !(a2 + a3).is_finite() {
        return Err(Error::Domain(format!(
            "positive_cubic_root needs a2, a3 >= 0 with a2 + a3 > 0, got a2={a2} a3={a3}"
        )));
    }
    if a3 == 0.0 {
        return Ok(a2.sqrt().recip());
    }
    if a2 == 0.0 {
        return Ok(a3.cbrt().recip());
    }

    // Each term alone is at most one, so the root lies left of both
    // single-term roots. The polynomial is convex and increasing on p > 0,
    // hence Newton from the right decreases monotonically onto the root.
    let mut p = (a2.sqrt().recip()).min(a3.cbrt().recip());
    for _ in 0..100 {
        let f = (a3 * p + a2) * p * p - 1.0;
        let df = (3.0 * a3 * p + 2.0 * a2) * p;
        let next = p - f / df;
        if !(next < p) || next <= 0.0 {
            break;
        }
        p = next;
    }
    Ok(p)
}
