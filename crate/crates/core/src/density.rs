//! Density and distribution function of `Y_t` by normal-Gamma mixture
//! quadrature and by Fourier inversion of the characteristic function.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Result, VgError};
use crate::esscher::tilt;
use crate::quadrature::{closed_fourier_integral, composite_integrate, std_normal_cdf, std_normal_sf, NewtonCotesRule};
use crate::vg::{cumulants, mgf, VgParams};

/// Log-integrand drop, relative to its maximum, at which integration stops.
const DROP: f64 = 45.0;

/// Quadrature controls for the mixture route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityConfig {
    /// Newton–Cotes panels for each mixing integral.
    pub panels: usize,
    /// Panels on each side of the location for [`expectation`].
    pub expectation_panels: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig { panels: 200, expectation_panels: 200 }
    }
}

/// Which route evaluates the density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityEngine {
    Mixture,
    Fourier,
}

/// Density and distribution function on ascending points `ys`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub ys: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    pub t: f64,
    pub params: VgParams,
}

impl DensityGrid {
    /// Trapezoid-rule mass of `pdf` over the grid.
    pub fn mass(&self) -> f64 {
        self.ys
            .windows(2)
            .zip(self.pdf.windows(2))
            .map(|(y, f)| 0.5 * (y[1] - y[0]) * (f[0] + f[1]))
            .sum()
    }
}

/// Values from a Fourier inversion together with the largest imaginary part
/// discarded when taking the real part.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOutput {
    pub values: Vec<f64>,
    pub imag_residue: f64,
    pub n: usize,
    pub gamma: f64,
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(VgError::Horizon(t))
    }
}

/// Integrates `e^{ℓ(s)}` for a concave `ℓ` with maximum at `mode`, between the
/// points where `ℓ` has fallen by [`DROP`].
fn integrate_log_concave<L: Fn(f64) -> f64>(l: L, mode: f64, width: f64, panels: usize) -> Result<f64> {
    let top = l(mode);
    let target = top - DROP;
    let edge = |dir: f64| {
        let mut step = width.max(1e-3);
        let mut inner = mode;
        let mut outer = mode + dir * step;
        let mut tries = 0;
        while l(outer) > target && tries < 80 {
            inner = outer;
            step *= 2.0;
            outer = mode + dir * step;
            tries += 1;
        }
        for _ in 0..100 {
            let mid = 0.5 * (inner + outer);
            if mid == inner || mid == outer {
                break;
            }
            if l(mid) > target {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        outer
    };
    let (lo, hi) = (edge(-1.0), edge(1.0));
    let rule = NewtonCotesRule::new(lo, hi, panels)?;
    Ok(composite_integrate(|s| (l(s) - top).exp(), &rule)? * top.exp())
}

/// `f(y, t) = ∫₀^∞ (2πv)^{−1/2} e^{−(y−tμ−δv)²/(2vσ²)} v^{tα−1} e^{−v/θ} dv / (σΓ(tα)θ^{tα})`.
///
/// With `v = θe^s` the log-integrand is
/// `c + (tα − ½)s − A e^{−s} − B e^{s}`, `A = (y−tμ)²/(2σ²θ)`, `B = 1 + δ²θ/(2σ²)`,
/// which is concave with a closed-form maximiser; the integral runs over the
/// range where it is within [`DROP`] of the maximum. When `y = tμ` and
/// `tα ≤ ½` the density is infinite.
pub fn pdf_mixture(p: &VgParams, y: f64, t: f64, cfg: &DensityConfig) -> Result<f64> {
    pdf_centered(p, y - t * p.mu, t, cfg)
}

/// [`pdf_mixture`] at `y = tμ + yc`, for offsets below the resolution of `tμ`.
fn pdf_centered(p: &VgParams, yc: f64, t: f64, cfg: &DensityConfig) -> Result<f64> {
    check_horizon(t)?;
    p.validate()?;
    let shape = t * p.alpha;
    let s2 = p.sigma * p.sigma;
    let a = yc * yc / (2.0 * s2 * p.theta);
    let b = 1.0 + p.delta * p.delta * p.theta / (2.0 * s2);
    let slope = shape - 0.5;
    if a == 0.0 && slope <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let c = -0.5 * (2.0 * PI * s2 * p.theta).ln() + yc * p.delta / s2 - ln_gamma(shape);
    // positive root of B x² − slope·x − A = 0 in x = e^s, written to avoid cancellation
    let disc = (slope * slope + 4.0 * a * b).sqrt();
    let x = if slope >= 0.0 { (slope + disc) / (2.0 * b) } else { 2.0 * a / (disc - slope) };
    let mode = x.ln();
    let curvature = a / x + b * x;
    let l = |s: f64| c + slope * s - a * (-s).exp() - b * s.exp();
    integrate_log_concave(l, mode, 1.0 / curvature.sqrt(), cfg.panels)
}

/// Mixing integral of `P(Y_t ≤ y | G = v)` (`upper = false`) or of
/// `P(Y_t > y | G = v)` (`upper = true`) against the Gamma law of `G_t`.
fn mixture_tail(p: &VgParams, y: f64, t: f64, upper: bool, cfg: &DensityConfig) -> Result<f64> {
    check_horizon(t)?;
    p.validate()?;
    let shape = t * p.alpha;
    let yc = y - t * p.mu;
    let lg = ln_gamma(shape);
    // Gamma(shape, θ) density of v = θe^s, per unit s
    let log_gamma_weight = |s: f64| shape * s - s.exp() - lg;
    let mode = shape.ln();
    let top = log_gamma_weight(mode);
    let mut lo = mode - DROP / shape;
    while log_gamma_weight(lo) > top - DROP {
        lo -= mode - lo;
    }
    let mut hi = mode + 1.0;
    while log_gamma_weight(hi) > top - DROP {
        hi += 1.0;
    }
    // Below v_cut the conditional probability is within e^{−400} of 0 or 1, so
    // that piece is the saturated value times the Gamma distribution function.
    let mut saturated = 0.0;
    let mut start = lo;
    if yc != 0.0 {
        let v_cut = yc * yc / (1600.0 * p.sigma * p.sigma);
        if p.delta.abs() * v_cut.sqrt() / p.sigma < 10.0 {
            let s_cut = (v_cut / p.theta).ln();
            if s_cut > lo {
                let below = if (yc > 0.0) != upper { 1.0 } else { 0.0 };
                saturated = below * gamma_lr(shape, v_cut / p.theta);
                start = s_cut;
            }
        }
    }
    if start >= hi {
        return Ok(saturated);
    }
    let rule = NewtonCotesRule::new(start, hi, cfg.panels)?;
    let body = composite_integrate(
        |s| {
            let v = p.theta * s.exp();
            let z = if v > 0.0 {
                (yc - p.delta * v) / (p.sigma * v.sqrt())
            } else if yc == 0.0 {
                0.0
            } else {
                yc.signum() * f64::INFINITY
            };
            let prob = if upper { std_normal_sf(z) } else { std_normal_cdf(z) };
            prob * log_gamma_weight(s).exp()
        },
        &rule,
    )?;
    Ok(saturated + body)
}

/// `P(Y_t ≤ y)` as a normal-Gamma mixture.
pub fn cdf_mixture(p: &VgParams, y: f64, t: f64, cfg: &DensityConfig) -> Result<f64> {
    mixture_tail(p, y, t, false, cfg)
}

/// `P(Y_t > y)` as a normal-Gamma mixture, accurate far in the upper tail.
pub fn sf_mixture(p: &VgParams, y: f64, t: f64, cfg: &DensityConfig) -> Result<f64> {
    mixture_tail(p, y, t, true, cfg)
}

/// Uniform spacing of `ys`, or a grid error.
fn uniform_step(ys: &[f64]) -> Result<f64> {
    if ys.is_empty() {
        return Err(VgError::Grid("empty evaluation grid".into()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(VgError::Grid("evaluation grid contains non-finite points".into()));
    }
    if ys.len() == 1 {
        return Ok(0.0);
    }
    let step = (ys[ys.len() - 1] - ys[0]) / (ys.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(VgError::Grid("evaluation grid must be ascending".into()));
    }
    for (k, y) in ys.iter().enumerate() {
        if (y - (ys[0] + k as f64 * step)).abs() > 1e-9 * step.max(y.abs()) {
            return Err(VgError::Grid(format!("evaluation grid is not uniform at index {k}")));
        }
    }
    Ok(step)
}

/// Node count and spacing for inverting at `ys`: the period `2π/γ` covers the
/// span, twenty standard deviations and forty decay lengths of the slower tail.
fn inversion_grid(p: &VgParams, ys: &[f64], t: f64) -> (usize, f64) {
    let span = ys[ys.len() - 1] - ys[0];
    let sd = (t * cumulants(p).variance).sqrt();
    let sp = p.steepness();
    let decay_len = 1.0 / sp.x1.min(-sp.x2);
    let reach = (ys[0] - t * p.mu).abs().max((ys[ys.len() - 1] - t * p.mu).abs());
    // the endpoint closure needs γ·|y − tμ| ≤ 1.5; keep a margin
    let period = (span + 20.0 * sd + 40.0 * decay_len).max(2.0 * PI * reach / 1.4);
    let n = ys.len().next_power_of_two().max(2048);
    (n, 2.0 * PI / period)
}

/// `(1/2π) ∫ e^{−iξ(y − tμ)} Q(ξ)^{−tα} dξ` at every point of the uniform grid `ys`.
pub fn pdf_fourier(p: &VgParams, ys: &[f64], t: f64) -> Result<FourierOutput> {
    check_horizon(t)?;
    p.validate()?;
    let dw = uniform_step(ys)?;
    let (n, gamma) = inversion_grid(p, ys, t);
    let shape = t * p.alpha;
    let f0 = |z: Complex64| (-shape * p.log_q(z)).exp();
    let outputs: Vec<usize> = (0..ys.len()).collect();
    let raw = closed_fourier_integral(f0, 2.0 * shape, n, gamma, ys[0] - t * p.mu, dw, &outputs)?;
    Ok(collect(raw, n, gamma, |v| v.re / (2.0 * PI), |v| v.im / (2.0 * PI)))
}

/// `½ − (1/2π) PV∫ e^{−iξ(y − tμ)} Q(ξ)^{−tα} / (iξ) dξ` on the uniform grid `ys`.
/// The symmetric node set never contains `ξ = 0`.
pub fn cdf_fourier(p: &VgParams, ys: &[f64], t: f64) -> Result<FourierOutput> {
    check_horizon(t)?;
    p.validate()?;
    let dw = uniform_step(ys)?;
    let (n, gamma) = inversion_grid(p, ys, t);
    let shape = t * p.alpha;
    let f0 = |z: Complex64| (-shape * p.log_q(z)).exp() / (Complex64::i() * z);
    let outputs: Vec<usize> = (0..ys.len()).collect();
    let raw = closed_fourier_integral(f0, 1.0 + 2.0 * shape, n, gamma, ys[0] - t * p.mu, dw, &outputs)?;
    Ok(collect(raw, n, gamma, |v| 0.5 - v.re / (2.0 * PI), |v| v.im / (2.0 * PI)))
}

fn collect(
    raw: Vec<Complex64>,
    n: usize,
    gamma: f64,
    value: impl Fn(Complex64) -> f64,
    imag: impl Fn(Complex64) -> f64,
) -> FourierOutput {
    let imag_residue = raw.iter().map(|&v| imag(v).abs()).fold(0.0, f64::max);
    FourierOutput { values: raw.into_iter().map(value).collect(), imag_residue, n, gamma }
}

/// Density of the Esscher-tilted law as the VG density with tilted parameters.
pub fn esscher_pdf(p: &VgParams, h: f64, y: f64, t: f64, cfg: &DensityConfig) -> Result<f64> {
    pdf_mixture(&tilt(p, h)?, y, t, cfg)
}

/// Density of the Esscher-tilted law as `e^{hy} f(y, t) / M(h, t)`.
pub fn esscher_pdf_reweighted(p: &VgParams, h: f64, y: f64, t: f64, cfg: &DensityConfig) -> Result<f64> {
    let m = mgf(p, h, t)?;
    Ok((h * y).exp() * pdf_mixture(p, y, t, cfg)? / m)
}

/// `E[g(Y_t)]` by quadrature against [`pdf_mixture`].
///
/// Uses `y = tμ ± e^u` on each side, which absorbs the integrable peak at
/// `y = tμ` when `tα < ½`; the lower `u` limit scales with `1/(tα)` so the
/// mass near the peak is not lost.
pub fn expectation<G: Fn(f64) -> f64>(p: &VgParams, t: f64, g: G, cfg: &DensityConfig) -> Result<f64> {
    check_horizon(t)?;
    p.validate()?;
    let loc = t * p.mu;
    let shape = t * p.alpha;
    let sd = (t * cumulants(p).variance).sqrt();
    let sp = p.steepness();
    let reach = 60.0 / sp.x1.min(-sp.x2) + 20.0 * sd;
    let u_lo = -(DROP / (2.0 * shape)).max(60.0) + sd.ln();
    let rule = NewtonCotesRule::new(u_lo, reach.ln(), cfg.expectation_panels)?;
    let mut total = 0.0;
    for side in [-1.0, 1.0] {
        let mut err = None;
        let part = composite_integrate(
            |u| {
                let d = u.exp();
                match pdf_centered(p, side * d, t, cfg) {
                    Ok(f) => g(loc + side * d) * f * d,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            &rule,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        total += part;
    }
    Ok(total)
}

/// Density and distribution function on `ys` by the selected route.
pub fn density_grid(
    p: &VgParams,
    ys: &[f64],
    t: f64,
    engine: DensityEngine,
    cfg: &DensityConfig,
) -> Result<DensityGrid> {
    let (pdf, cdf) = match engine {
        DensityEngine::Mixture => {
            let pdf = ys.iter().map(|&y| pdf_mixture(p, y, t, cfg)).collect::<Result<Vec<_>>>()?;
            let cdf = ys.iter().map(|&y| cdf_mixture(p, y, t, cfg)).collect::<Result<Vec<_>>>()?;
            (pdf, cdf)
        }
        DensityEngine::Fourier => (pdf_fourier(p, ys, t)?.values, cdf_fourier(p, ys, t)?.values),
    };
    Ok(DensityGrid { ys: ys.to_vec(), pdf, cdf, t, params: *p })
}

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count).map(|k| lo + k as f64 * step).collect()
        }
    }
}
