//! Five-parameter Variance-Gamma law: parameters, characteristic function and
//! exponent, moment generating function, cumulants and Lévy density.
//!
//! The process is `Y_t = tμ + δ G_t + σ W(G_t)` where `G_t` is a Gamma process
//! with shape `α` per unit time and scale `θ`. All functions here are pure.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Result, VgError};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Location `mu`, symmetry `delta`, volatility `sigma`, Gamma shape `alpha`
/// and Gamma scale `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgParams {
    pub mu: f64,
    pub delta: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub theta: f64,
}

/// Open interval `(h1, h2)` on which the moment generating function is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfStrip {
    pub h1: f64,
    pub h2: f64,
}

impl MgfStrip {
    pub fn contains(&self, h: f64) -> bool {
        h > self.h1 && h < self.h2
    }

    pub fn width(&self) -> f64 {
        self.h2 - self.h1
    }
}

/// Exponential decay rates of the Lévy density: `x2 < 0 < x1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteepnessPair {
    pub x1: f64,
    pub x2: f64,
}

/// Mean, variance, skewness and excess kurtosis of `Y_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Cumulants {
    /// Raw (non-excess) kurtosis.
    pub fn kurtosis(&self) -> f64 {
        3.0 + self.excess_kurtosis
    }

    /// Cumulants of `Y_t` given those of `Y_1`.
    pub fn at_horizon(&self, t: f64) -> Cumulants {
        Cumulants {
            mean: self.mean * t,
            variance: self.variance * t,
            skewness: self.skewness / t.sqrt(),
            excess_kurtosis: self.excess_kurtosis / t,
        }
    }
}

/// Membership of the KoBoL family: `c± |u|^{-ν-1} e^{-λ±|u|}` with `ν = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoBoL {
    pub nu: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl VgParams {
    pub fn new(mu: f64, delta: f64, sigma: f64, alpha: f64, theta: f64) -> Result<Self> {
        let p = VgParams { mu, delta, sigma, alpha, theta };
        p.validate()?;
        Ok(p)
    }

    /// Daily SPY estimates used throughout the examples and tests.
    pub fn spy_daily() -> Self {
        VgParams { mu: 0.0848, delta: -0.0577, sigma: 1.0295, alpha: 0.8845, theta: 0.9378 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.delta, self.sigma, self.alpha, self.theta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(VgError::InvalidParams("all parameters must be finite".into()));
        }
        if self.sigma <= 0.0 {
            return Err(VgError::InvalidParams(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.alpha <= 0.0 {
            return Err(VgError::InvalidParams(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.theta <= 0.0 {
            return Err(VgError::InvalidParams(format!("theta must be > 0, got {}", self.theta)));
        }
        Ok(())
    }

    fn discriminant_root(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        (self.delta * self.delta / (s2 * s2) + 2.0 / (self.theta * s2)).sqrt()
    }

    pub fn strip(&self) -> MgfStrip {
        let shift = self.delta / (self.sigma * self.sigma);
        let root = self.discriminant_root();
        MgfStrip { h1: -shift - root, h2: -shift + root }
    }

    pub fn steepness(&self) -> SteepnessPair {
        let shift = self.delta / (self.sigma * self.sigma);
        let root = self.discriminant_root();
        SteepnessPair { x1: shift + root, x2: shift - root }
    }

    /// `1 − δθh − ½σ²θh²`, the base of the MGF denominator.
    pub fn mgf_base(&self, h: f64) -> f64 {
        1.0 - self.delta * self.theta * h - 0.5 * self.sigma * self.sigma * self.theta * h * h
    }

    /// `Q(z) = 1 + ½θσ²z² − iδθz`.
    pub fn q_poly(&self, z: Complex64) -> Complex64 {
        let c = 0.5 * self.theta * self.sigma * self.sigma;
        1.0 + c * z * z - I * (self.delta * self.theta) * z
    }

    /// Logarithm of `Q(z)` continued analytically off the real axis.
    ///
    /// `Q = c (z − i x1)(z − i x2)`; each factor gets its own logarithm with a
    /// vertical cut running away from the real axis, so the result is analytic
    /// everywhere except on `{Re z = 0, Im z ≥ x1}` and `{Re z = 0, Im z ≤ x2}`.
    /// The value is taken from the principal log of `Q` shifted by the
    /// multiple of `2πi` selected by the factorised form.
    pub fn log_q(&self, z: Complex64) -> Complex64 {
        let sp = self.steepness();
        let c = 0.5 * self.theta * self.sigma * self.sigma;
        let up = (I * (z - I * sp.x1)).ln() - I * FRAC_PI_2;
        let down = (-I * (z - I * sp.x2)).ln() + I * FRAC_PI_2;
        let factored = c.ln() + up + down;
        let direct = self.q_poly(z).ln();
        let turns = ((factored.im - direct.im) / (2.0 * PI)).round();
        direct + I * (2.0 * PI * turns)
    }
}

/// `E[e^{iξY_t}] = e^{itμξ} / (1 − iδθξ + ½σ²θξ²)^{tα}`.
pub fn char_fn(p: &VgParams, xi: f64, t: f64) -> Complex64 {
    let c = 0.5 * p.theta * p.sigma * p.sigma;
    let base = Complex64::new(1.0 + c * xi * xi, -p.delta * p.theta * xi);
    (I * (t * p.mu * xi) - t * p.alpha * base.ln()).exp()
}

/// `φ(z) = −iμz + α log(1 + ½θσ²z² − iδθz)`, so that `E[e^{izY_t}] = e^{−tφ(z)}`
/// wherever the expectation exists.
///
/// Fails only when `z` sits on one of the two vertical branch cuts through the
/// zeros `i·x1`, `i·x2` of the quadratic.
pub fn char_exponent(p: &VgParams, z: Complex64) -> Result<Complex64> {
    let sp = p.steepness();
    if z.re == 0.0 && (z.im >= sp.x1 || z.im <= sp.x2) {
        return Err(VgError::BranchFailure(format!(
            "z = {z} lies on a branch cut (Im z outside ({}, {}))",
            sp.x2, sp.x1
        )));
    }
    Ok(-I * p.mu * z + p.alpha * p.log_q(z))
}

/// Fails unless the horizontal line `Im z = q` stays inside the analytic strip
/// of `φ`, i.e. `x2 < q < x1`.
pub fn check_contour(p: &VgParams, q: f64) -> Result<()> {
    let sp = p.steepness();
    if q > sp.x2 && q < sp.x1 {
        Ok(())
    } else {
        Err(VgError::BranchFailure(format!(
            "contour Im z = {q} crosses a branch cut; need {} < q < {}",
            sp.x2, sp.x1
        )))
    }
}

/// `E[e^{hY_t}] = e^{tμh} / (1 − ½θσ²h² − δθh)^{tα}` for `h1 < h < h2`.
pub fn mgf(p: &VgParams, h: f64, t: f64) -> Result<f64> {
    let strip = p.strip();
    if !strip.contains(h) {
        return Err(VgError::OutOfStrip { h, h1: strip.h1, h2: strip.h2 });
    }
    Ok((t * p.mu * h - t * p.alpha * p.mgf_base(h).ln()).exp())
}

/// Cumulants of `Y_1` from the derivatives of `K(h) = μh − α log(1 − ah − ½bh²)`
/// at zero, with `a = δθ` and `b = σ²θ`:
/// `κ1 = μ + αa`, `κ2 = α(b + a²)`, `κ3 = α(3ab + 2a³)`, `κ4 = α(3b² + 12a²b + 6a⁴)`.
pub fn cumulants(p: &VgParams) -> Cumulants {
    let a = p.delta * p.theta;
    let b = p.sigma * p.sigma * p.theta;
    let k1 = p.mu + p.alpha * a;
    let k2 = p.alpha * (b + a * a);
    let k3 = p.alpha * (3.0 * a * b + 2.0 * a * a * a);
    let k4 = p.alpha * (3.0 * b * b + 12.0 * a * a * b + 6.0 * a.powi(4));
    Cumulants {
        mean: k1,
        variance: k2,
        skewness: k3 / k2.powf(1.5),
        excess_kurtosis: k4 / (k2 * k2),
    }
}

/// Lévy intensity `α e^{−x1 u}/u` for `u > 0` and `α e^{−x2 u}/|u|` for `u < 0`.
///
/// With `φ(ξ) = −iμξ + ∫(1 − e^{−iξu}) Π(u) du` this is the jump intensity of
/// `−Y`: the `u > 0` branch decays at the rate of the lower MGF endpoint.
pub fn levy_density(p: &VgParams, u: f64) -> Result<f64> {
    if u == 0.0 || !u.is_finite() {
        return Err(VgError::Domain(format!("Lévy density is undefined at u = {u}")));
    }
    let sp = p.steepness();
    let rate = if u > 0.0 { sp.x1 } else { sp.x2 };
    Ok(p.alpha * (-rate * u).exp() / u.abs())
}

pub fn kobol_classify(p: &VgParams) -> KoBoL {
    let sp = p.steepness();
    KoBoL { nu: 0.0, c_plus: p.alpha, c_minus: p.alpha, lambda_plus: sp.x1, lambda_minus: sp.x2 }
}

/// Drift `a = μ + αθδ` and scale `b = √(α(θ²δ² + σ²θ))` of the normal limit
/// `Y_t ≈ N(ta, tb²)`.
pub fn asymptotic_normal_params(p: &VgParams) -> (f64, f64) {
    let a = p.mu + p.alpha * p.theta * p.delta;
    let b2 = p.alpha * (p.theta * p.theta * p.delta * p.delta + p.sigma * p.sigma * p.theta);
    (a, b2.sqrt())
}
