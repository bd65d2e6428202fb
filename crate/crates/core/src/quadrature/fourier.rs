//! Fourier integrals on uniform grids evaluated with the fractional FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::frft::frft;
use super::newton_cotes::{composite_integrate, NewtonCotesRule};
use crate::error::{Result, VgError};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Node count `n`, frequency spacing `gamma`, output spacing `beta`,
/// fractional parameter `frac = beta·gamma/(2π)` and contour damping `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierGrid {
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    pub frac: f64,
    pub q: f64,
}

impl FourierGrid {
    pub fn new(n: usize, gamma: f64, beta: f64, q: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(VgError::Grid(format!("n must be a power of two >= 16, got {n}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(VgError::Grid(format!("spacings must be positive: gamma={gamma}, beta={beta}")));
        }
        let frac = beta * gamma / (2.0 * PI);
        if frac >= 1.0 {
            return Err(VgError::FracRange(frac));
        }
        Ok(FourierGrid { n, gamma, beta, frac, q })
    }

    /// Half-width `a/2 = nγ/2` of the truncated frequency range.
    pub fn half_width(&self) -> f64 {
        0.5 * self.n as f64 * self.gamma
    }
}

/// `S_k = Σ_j s_j e^{−iξ_j w_k}` with `ξ_j = xi0 + jγ` and `w_k = w0 + k·dw`,
/// for `k = 0..n`, through one fractional FFT with `frac = γ·dw/(2π)`.
pub fn lattice_sum(samples: &[Complex64], xi0: f64, gamma: f64, w0: f64, dw: f64) -> Result<Vec<Complex64>> {
    let frac = gamma * dw / (2.0 * PI);
    let pre: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(j, &s)| s * Complex64::from_polar(1.0, -(j as f64) * gamma * w0))
        .collect();
    let g = frft(&pre, frac)?;
    Ok(g.into_iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -xi0 * (w0 + k as f64 * dw)))
        .collect())
}

/// Panels used for each rotated tail integral.
const TAIL_PANELS: usize = 48;
/// Nodes on the circle used for Cauchy-formula derivatives.
const CAUCHY_NODES: usize = 48;

/// `∫_{−∞}^{∞} e^{−iξw} F0(ξ) dξ` for `w = w0 + k·dw`, `k ∈ outputs`.
///
/// The real line is cut at `±A`, `A = nγ/2`. The inner part is the midpoint
/// sum on `ξ_j = −A + (j + ½)γ`, computed for every `k` by [`lattice_sum`],
/// plus the `γ²`, `γ⁴` and `γ⁶` Euler–Maclaurin endpoint terms. Each outer part is
/// rotated onto the vertical ray from `±A` on which `e^{−iξw}` decays and
/// integrated with the composite Newton–Cotes rule.
///
/// `f0` must be analytic for `|Re ξ| ≥ A/2` and decay like `|ξ|^{−decay}`.
/// The grid never samples `ξ = 0`, so an odd pole there is handled as a
/// principal value.
pub fn closed_fourier_integral<F: Fn(Complex64) -> Complex64>(
    f0: F,
    decay: f64,
    n: usize,
    gamma: f64,
    w0: f64,
    dw: f64,
    outputs: &[usize],
) -> Result<Vec<Complex64>> {
    let a = 0.5 * n as f64 * gamma;
    let xi0 = -a + 0.5 * gamma;
    let samples: Vec<Complex64> = (0..n).map(|j| f0(Complex64::new(xi0 + j as f64 * gamma, 0.0))).collect();
    if let Some(j) = samples.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(VgError::NonFiniteSample(xi0 + j as f64 * gamma));
    }
    let sums = lattice_sum(&samples, xi0, gamma, w0, dw)?;
    let right = cauchy_derivatives(&f0, a, 0.25 * a);
    let left = cauchy_derivatives(&f0, -a, 0.25 * a);

    let mut out = Vec::with_capacity(outputs.len());
    for &k in outputs {
        if k >= n {
            return Err(VgError::Grid(format!("output index {k} exceeds n = {n}")));
        }
        let w = w0 + k as f64 * dw;
        if gamma * w.abs() > 1.5 {
            return Err(VgError::Grid(format!(
                "frequency spacing {gamma} too coarse for output {w} (need gamma·|w| <= 1.5)"
            )));
        }
        let em = |m: usize| {
            binomial_derivative(&right, m, w) * Complex64::from_polar(1.0, -a * w)
                - binomial_derivative(&left, m, w) * Complex64::from_polar(1.0, a * w)
        };
        let endpoint = em(1) * (gamma.powi(2) / 24.0) - em(3) * (7.0 * gamma.powi(4) / 5760.0)
            + em(5) * (31.0 * gamma.powi(6) / 967_680.0);
        let tails = outward_tail(&f0, a, w, decay)? - outward_tail(&f0, -a, w, decay)?;
        out.push(sums[k] * gamma + endpoint + tails);
    }
    Ok(out)
}

/// `F0^{(m)}(c)` for `m = 0..6` by the trapezoid rule on a circle of radius `rho`.
fn cauchy_derivatives<F: Fn(Complex64) -> Complex64>(f0: &F, c: f64, rho: f64) -> [Complex64; 6] {
    let mut acc = [Complex64::new(0.0, 0.0); 6];
    for m in 0..CAUCHY_NODES {
        let e = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / CAUCHY_NODES as f64);
        let v = f0(c + rho * e);
        let mut inv = Complex64::new(1.0, 0.0);
        for slot in acc.iter_mut() {
            *slot += v * inv;
            inv /= e;
        }
    }
    let mut fact = 1.0;
    let mut scale = 1.0;
    for (k, slot) in acc.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
            scale *= rho;
        }
        *slot *= fact / (scale * CAUCHY_NODES as f64);
    }
    acc
}

/// `e^{iξw} d^m/dξ^m [e^{−iξw} F0(ξ)] = Σ_j C(m, j) (−iw)^{m−j} F0^{(j)}`.
fn binomial_derivative(d: &[Complex64; 6], m: usize, w: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let mut binom = 1.0;
    for (j, dj) in d.iter().enumerate().take(m + 1) {
        total += dj * binom * (-I * w).powu((m - j) as u32);
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    total
}

/// `∫ e^{−iξw} F0(ξ) dξ` from `start` outward to `sign(start)·∞` along the
/// real axis, evaluated on the vertical ray `start − i·sign(w)·u`.
fn outward_tail<F: Fn(Complex64) -> Complex64>(f0: &F, start: f64, w: f64, decay: f64) -> Result<Complex64> {
    let rule_on = |hi: f64| NewtonCotesRule::new(0.0, hi, TAIL_PANELS);
    if w == 0.0 {
        if decay <= 1.0 {
            return Err(VgError::Tail(format!(
                "integrand decays like |xi|^-{decay}; the tail diverges at zero frequency"
            )));
        }
        let v_max = (46.0 / (decay - 1.0)).min(600.0);
        let rule = rule_on(v_max)?;
        return composite_integrate(
            |v: f64| {
                let x = start * v.exp();
                f0(Complex64::new(x, 0.0)) * x
            },
            &rule,
        );
    }
    let s = w.signum();
    let rate = w.abs();
    let scale = start.abs().min(1.0 / rate);
    let v_max = (1.0 + 46.0 / (rate * scale)).ln();
    let rule = rule_on(v_max)?;
    let body = composite_integrate(
        |v: f64| {
            let u = scale * v.exp_m1();
            f0(Complex64::new(start, -s * u)) * ((-rate * u).exp() * scale * v.exp())
        },
        &rule,
    )?;
    Ok(-I * s * Complex64::from_polar(1.0, -start * w) * body)
}
