//! Scalar minimisation and root finding.

use crate::error::{Result, VgError};

/// Golden-section search. Under unimodality the returned point is within
/// `tol` of the minimiser; for monotone `f` it converges to an endpoint.
pub fn golden_minimize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || !(tol > 0.0) {
        return Err(VgError::Bracket { lo, hi });
    }
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection for `f(x) = target` with `f` strictly monotone on `[lo, hi]`.
///
/// `f` is only evaluated at `lo`, `hi` and interior midpoints, so callers
/// guarding an open interval pass already-shrunk endpoints. Stops when
/// `|f(x) − target| ≤ tol` or the bracket can no longer be halved.
pub fn solve_monotone<F: FnMut(f64) -> f64>(
    mut f: F,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(VgError::Bracket { lo, hi });
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    let increasing = f_hi > f_lo;
    let (min, max) = if increasing { (f_lo, f_hi) } else { (f_hi, f_lo) };
    if !(target >= min && target <= max) {
        return Err(VgError::NoBracket { target, f_lo, f_hi });
    }
    if (f_lo - target).abs() <= tol {
        return Ok(lo);
    }
    if (f_hi - target).abs() <= tol {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if (fm - target).abs() <= tol {
            return Ok(m);
        }
        if (fm < target) == increasing {
            a = m;
        } else {
            b = m;
        }
    }
}
