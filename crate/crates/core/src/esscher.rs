//! Esscher risk-neutral measure: the ratio `g(h)`, the root `h*` and the
//! tilted parameter sets used by the pricing engines.

use crate::density::{expectation, DensityConfig};
use crate::error::{Result, VgError};
use crate::vg::{mgf, VgParams};

/// Risk-neutral measure obtained by Esscher tilting at `h_star`.
///
/// `tilted` is the law of `Y` under the measure; `tilted_plus` is the law
/// tilted once more by `e^{Y}`, i.e. the share measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsscherMeasure {
    pub h_star: f64,
    pub rate: f64,
    pub base: VgParams,
    pub tilted: VgParams,
    pub tilted_plus: VgParams,
}

/// True iff the strip is wider than one, so that `(h1, h2 − 1)` is non-empty.
pub fn solvability(p: &VgParams) -> bool {
    p.strip().width() > 1.0
}

/// `g(h) = M(h + 1, 1)^{1/α}·e^{−μ(h+1)/α} / (M(h, 1)^{1/α}·e^{−μh/α})`
/// `= D(h)/D(h + 1)` with `D(h) = 1 − ½θσ²h² − δθh`, on `(h1, h2 − 1)`.
pub fn g_ratio(p: &VgParams, h: f64) -> Result<f64> {
    let s = p.strip();
    let (lo, hi) = (s.h1, s.h2 - 1.0);
    if !(h > lo && h < hi) {
        return Err(VgError::OutOfDomain { h, lo, hi });
    }
    Ok(p.mgf_base(h) / p.mgf_base(h + 1.0))
}

fn g_log_derivative(p: &VgParams, h: f64) -> f64 {
    let d = |x: f64| -p.delta * p.theta - p.sigma * p.sigma * p.theta * x;
    d(h) / p.mgf_base(h) - d(h + 1.0) / p.mgf_base(h + 1.0)
}

/// Parameters of the law `e^{hy} f(y, t) / M(h, t)`: `δ̃ = δ + hσ²`,
/// `θ̃ = θ / (1 − ½θσ²h² − δθh)`; `μ`, `σ`, `α` are unchanged.
pub fn tilt(p: &VgParams, h: f64) -> Result<VgParams> {
    let s = p.strip();
    if !s.contains(h) {
        return Err(VgError::OutOfStrip { h, h1: s.h1, h2: s.h2 });
    }
    Ok(VgParams {
        delta: p.delta + h * p.sigma * p.sigma,
        theta: p.theta / p.mgf_base(h),
        ..*p
    })
}

/// `M(h + z, t) / M(h, t)`, the moment generating function of the tilted law.
pub fn tilted_mgf(p: &VgParams, h: f64, z: f64, t: f64) -> Result<f64> {
    Ok(mgf(p, h + z, t)? / mgf(p, h, t)?)
}

impl EsscherMeasure {
    /// Measure at a given `h`, which must lie in `(h1, h2 − 1)` so that both
    /// tilted laws exist.
    pub fn at(p: &VgParams, rate: f64, h: f64) -> Result<Self> {
        p.validate()?;
        if !rate.is_finite() {
            return Err(VgError::Market(format!("rate must be finite, got {rate}")));
        }
        g_ratio(p, h)?;
        let tilted = tilt(p, h)?;
        let tilted_plus = VgParams {
            delta: tilted.delta + p.sigma * p.sigma,
            theta: tilted.theta * ((rate - p.mu) / p.alpha).exp(),
            ..tilted
        };
        Ok(EsscherMeasure { h_star: h, rate, base: *p, tilted, tilted_plus })
    }
}

/// Unique root of `g(h) = e^{(r−μ)/α}` on `(h1, h2 − 1)`.
///
/// Bisection on `log g` between `h1 + ε` and `h2 − 1 − ε`, `ε = 1e−10·(h2 − h1)`,
/// followed by up to five Newton steps that are kept only if they stay inside
/// the bracket and reduce the residual.
pub fn solve_h_star(p: &VgParams, rate: f64) -> Result<EsscherMeasure> {
    p.validate()?;
    let s = p.strip();
    if !solvability(p) {
        return Err(VgError::NotSolvable(s.width()));
    }
    let target = (rate - p.mu) / p.alpha;
    let eps = 1e-10 * s.width();
    let resid = |h: f64| (p.mgf_base(h) / p.mgf_base(h + 1.0)).ln() - target;
    let (mut lo, mut hi) = (s.h1 + eps, s.h2 - 1.0 - eps);
    if resid(lo) > 0.0 || resid(hi) < 0.0 {
        return Err(VgError::NoBracket { target, f_lo: resid(lo) + target, f_hi: resid(hi) + target });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if resid(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut h = 0.5 * (lo + hi);
    for _ in 0..5 {
        let r = resid(h);
        if r == 0.0 {
            break;
        }
        let next = h - r / g_log_derivative(p, h);
        if next > s.h1 && next < s.h2 - 1.0 && resid(next).abs() < r.abs() {
            h = next;
        } else {
            break;
        }
    }
    EsscherMeasure::at(p, rate, h)
}

/// `|e^{−rτ} E^Q[e^{Y_τ}] − 1|` from the closed-form MGF of the tilted law.
pub fn martingale_check(m: &EsscherMeasure, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(VgError::Horizon(tau));
    }
    let strip = m.tilted.strip();
    if !strip.contains(1.0) {
        return Err(VgError::Strip(format!(
            "z = 1 is outside the tilted strip ({}, {})",
            strip.h1, strip.h2
        )));
    }
    Ok(((-m.rate * tau).exp() * mgf(&m.tilted, 1.0, tau)? - 1.0).abs())
}

/// As [`martingale_check`] but with `E^Q[e^{Y_τ}]` integrated numerically
/// against the mixture density of the tilted law.
pub fn martingale_check_numeric(m: &EsscherMeasure, tau: f64, cfg: &DensityConfig) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(VgError::Horizon(tau));
    }
    let e = expectation(&m.tilted, tau, |y| (y - m.rate * tau).exp(), cfg)?;
    Ok((e - 1.0).abs())
}

/// `E^P[e^{hY_τ} / M(h, τ)]`, which equals one for every `h` in the strip.
pub fn radon_nikodym_mass(p: &VgParams, h: f64, tau: f64, cfg: &DensityConfig) -> Result<f64> {
    let m = mgf(p, h, tau)?;
    expectation(p, tau, |y| (h * y).exp() / m, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_at_zero() {
        let p = VgParams::spy_daily();
        let g = g_ratio(&p, 0.0).unwrap();
        let d1 = 1.0 - 0.5 * p.theta * p.sigma * p.sigma - p.delta * p.theta;
        assert!((g - 1.0 / d1).abs() < 1e-15);
        assert!((g - 1.794888).abs() < 1e-6, "{g}");
        assert!((g - 1.79494).abs() < 1e-4);
    }

    #[test]
    fn h_star_spy() {
        let p = VgParams::spy_daily();
        let m = solve_h_star(&p, 0.06).unwrap();
        assert!((m.h_star - (-0.4700)).abs() < 5e-4, "{}", m.h_star);
        let g = g_ratio(&p, m.h_star).unwrap();
        assert!((g - ((0.06 - p.mu) / p.alpha).exp()).abs() < 1e-12);
    }

    #[test]
    fn tilt_at_minus_point_four() {
        let t = tilt(&VgParams::spy_daily(), -0.4).unwrap();
        assert!((t.delta - (-0.4816481)).abs() < 1e-12, "{}", t.delta);
        assert!((t.theta - 1.0433449059).abs() < 1e-9, "{}", t.theta);
        assert!((t.delta - (-0.48165)).abs() < 1e-5 && (t.theta - 1.04335).abs() < 1e-5);
    }

    #[test]
    fn plus_set_is_tilt_at_h_plus_one() {
        let p = VgParams::spy_daily();
        let m = solve_h_star(&p, 0.06).unwrap();
        let direct = tilt(&p, m.h_star + 1.0).unwrap();
        assert!((direct.delta - m.tilted_plus.delta).abs() < 1e-14);
        assert!((direct.theta - m.tilted_plus.theta).abs() < 1e-12);
    }

    #[test]
    fn unsolvable_when_sigma_large() {
        let p = VgParams { sigma: 50.0, ..VgParams::spy_daily() };
        assert!(!solvability(&p));
        assert!(matches!(solve_h_star(&p, 0.06), Err(VgError::NotSolvable(_))));
    }

    #[test]
    fn override_outside_strip_rejected() {
        let p = VgParams::spy_daily();
        assert!(EsscherMeasure::at(&p, 0.06, -2.6997).is_err());
    }
}
