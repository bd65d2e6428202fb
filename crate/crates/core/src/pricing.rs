//! European call prices under the VG risk-neutral measure: the extended
//! Black–Scholes form built from two tilted distribution functions, the
//! generalized form as a damped Fourier integral, payoff-transform utilities,
//! damping calibration, the Black–Scholes benchmark and price surfaces.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{cdf_fourier, sf_mixture, DensityConfig, DensityEngine};
use crate::error::{Result, VgError};
use crate::esscher::{solve_h_star, EsscherMeasure};
use crate::quadrature::{closed_fourier_integral, golden_minimize, lattice_sum, std_normal_cdf, FourierGrid};
use crate::vg::{check_contour, VgParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Spot, strike, continuously compounded rate per year and maturity in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketContext {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub tau: f64,
}

impl MarketContext {
    pub fn new(spot: f64, strike: f64, rate: f64, tau: f64) -> Result<Self> {
        let m = MarketContext { spot, strike, rate, tau };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(VgError::Market(format!("spot must be > 0, got {}", self.spot)));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(VgError::Market(format!("strike must be > 0, got {}", self.strike)));
        }
        if !self.rate.is_finite() {
            return Err(VgError::Market(format!("rate must be finite, got {}", self.rate)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(VgError::Horizon(self.tau));
        }
        Ok(())
    }

    /// `k = S/K`.
    pub fn moneyness(&self) -> f64 {
        self.spot / self.strike
    }

    /// `max(0, S − Ke^{−rτ})`, the lower no-arbitrage bound.
    pub fn lower_bound(&self) -> f64 {
        (self.spot - self.strike * (-self.rate * self.tau).exp()).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Extended,
    Generalized,
    BlackScholes,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Extended => "extended",
            Engine::Generalized => "generalized",
            Engine::BlackScholes => "black_scholes",
        }
    }
}

/// Numerical details attached to a quote.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Esscher parameter of the measure used, if any.
    pub h_star: Option<f64>,
    /// Frequency nodes and spacing of the Fourier grid, if one was used.
    pub grid_n: Option<usize>,
    pub grid_gamma: Option<f64>,
    /// Contour damping for the generalized engine.
    pub q: Option<f64>,
    /// Modulus of the integrand at the truncation point `±nγ/2`, scaled like the price.
    pub tail_bound: Option<f64>,
    /// Imaginary part discarded when taking the real part, scaled like the price.
    pub imag_residue: Option<f64>,
    /// Distribution-function route used by the extended engine.
    pub cdf_route: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub price: f64,
    pub engine: Engine,
    pub diagnostics: Diagnostics,
}

impl PriceQuote {
    /// `max(0, S − Ke^{−rτ}) − tol ≤ price ≤ S + tol` with `tol = 1e−6·S`.
    pub fn within_bounds(&self, mkt: &MarketContext) -> bool {
        let tol = 1e-6 * mkt.spot;
        self.price >= mkt.lower_bound() - tol && self.price <= mkt.spot + tol
    }
}

/// Controls shared by both VG engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingConfig {
    pub density: DensityConfig,
    /// Distribution-function route of the extended engine.
    pub cdf_route: DensityEngine,
    /// Frequency nodes of the generalized engine.
    pub n: usize,
    /// Contour damping; `None` uses [`default_q`].
    pub q: Option<f64>,
    /// Use this Esscher parameter instead of solving for `h*`.
    pub h_star_override: Option<f64>,
    /// Model time units per year: parameters are applied at horizon
    /// `time_scale·τ` with rate `r/time_scale`.
    pub time_scale: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            density: DensityConfig::default(),
            cdf_route: DensityEngine::Mixture,
            n: 4096,
            q: None,
            h_star_override: None,
            time_scale: 1.0,
        }
    }
}

impl PricingConfig {
    fn check(&self) -> Result<()> {
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(VgError::Market(format!("time scale must be > 0, got {}", self.time_scale)));
        }
        Ok(())
    }
}

/// Risk-neutral measure for `p` at annual rate `rate` under `cfg`.
pub fn measure_for(p: &VgParams, rate: f64, cfg: &PricingConfig) -> Result<EsscherMeasure> {
    cfg.check()?;
    let r = rate / cfg.time_scale;
    match cfg.h_star_override {
        Some(h) => EsscherMeasure::at(p, r, h),
        None => solve_h_star(p, r),
    }
}

/// `S·P̃′(Y_τ > log(K/S)) − Ke^{−rτ}·P̃(Y_τ > log(K/S))`, where `P̃` and `P̃′`
/// are the laws tilted at `h*` and `h* + 1`.
pub fn price_extended(p: &VgParams, mkt: &MarketContext, cfg: &PricingConfig) -> Result<PriceQuote> {
    mkt.validate()?;
    let m = measure_for(p, mkt.rate, cfg)?;
    price_extended_with(&m, mkt, cfg)
}

/// [`price_extended`] for an already constructed measure.
pub fn price_extended_with(m: &EsscherMeasure, mkt: &MarketContext, cfg: &PricingConfig) -> Result<PriceQuote> {
    mkt.validate()?;
    cfg.check()?;
    let x = (mkt.strike / mkt.spot).ln();
    let t = cfg.time_scale * mkt.tau;
    let sf = |q: &VgParams| -> Result<f64> {
        match cfg.cdf_route {
            DensityEngine::Mixture => sf_mixture(q, x, t, &cfg.density),
            DensityEngine::Fourier => Ok(1.0 - cdf_fourier(q, &[x], t)?.values[0]),
        }
    };
    let price = mkt.spot * sf(&m.tilted_plus)? - mkt.strike * (-mkt.rate * mkt.tau).exp() * sf(&m.tilted)?;
    let route = match cfg.cdf_route {
        DensityEngine::Mixture => "mixture",
        DensityEngine::Fourier => "fourier",
    };
    Ok(PriceQuote {
        price,
        engine: Engine::Extended,
        diagnostics: Diagnostics { h_star: Some(m.h_star), cdf_route: Some(route.into()), ..Default::default() },
    })
}

/// `k·e^{−iy·log k} / (iy(iy − 1))`, the transform `∫ e^{−iyx}(e^x − k)⁺ dx`,
/// defined for `Im y < −1`.
pub fn payoff_transform(k: f64, y: Complex64) -> Result<Complex64> {
    if !(y.im < -1.0) {
        return Err(VgError::Strip(format!("payoff transform needs Im y < -1, got {}", y.im)));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(VgError::Market(format!("strike ratio must be > 0, got {k}")));
    }
    let iy = I * y;
    Ok(k * (-iy * k.ln()).exp() / (iy * (iy - 1.0)))
}

/// Truncated frequency grid for payoff recovery: `ξ_j = −nγ/2 + jγ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffGrid {
    pub n: usize,
    pub gamma: f64,
}

impl Default for PayoffGrid {
    /// 4096 nodes at spacing 1/128.
    fn default() -> Self {
        PayoffGrid { n: 4096, gamma: 1.0 / 128.0 }
    }
}

/// `(1/2π) ∫ e^{iyx} ĝ(y, k) dy` along `Im y = q`, truncated to the grid and
/// evaluated at the uniform points `xs` by one fractional FFT:
/// `(γ/2π) e^{−qx} Σ_j e^{iξ_j x} ĝ(ξ_j + iq)`.
pub fn payoff_recover(k: f64, q: f64, xs: &[f64], grid: &PayoffGrid) -> Result<Vec<f64>> {
    if !(q < -1.0) {
        return Err(VgError::Strip(format!("damping must satisfy q < -1, got {q}")));
    }
    let grid = FourierGrid::new(grid.n, grid.gamma, 1.0, q)?;
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let dx = if xs.len() > 1 { (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64 } else { 0.0 };
    for (j, x) in xs.iter().enumerate() {
        if (x - (xs[0] + j as f64 * dx)).abs() > 1e-9 * dx.abs().max(x.abs()).max(1e-300) {
            return Err(VgError::Grid(format!("payoff grid is not uniform at index {j}")));
        }
    }
    let xi0 = -grid.half_width();
    let samples = (0..grid.n)
        .map(|j| payoff_transform(k, Complex64::new(xi0 + j as f64 * grid.gamma, q)))
        .collect::<Result<Vec<_>>>()?;
    let sums = lattice_sum(&samples, xi0, grid.gamma, -xs[0], -dx)?;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(j, &x)| grid.gamma / (2.0 * PI) * (-q * x).exp() * sums[j].re)
        .collect())
}

/// Root-mean-square gap between `(e^x − k)⁺` and its recovery at `m` points
/// equally spaced on `[−M, M]`.
pub fn er_objective(k: f64, q: f64, half_range: f64, m: usize, grid: &PayoffGrid) -> Result<f64> {
    if m < 2 {
        return Err(VgError::Grid(format!("need at least two sample points, got {m}")));
    }
    if !(half_range > 0.0) {
        return Err(VgError::Grid(format!("half range must be > 0, got {half_range}")));
    }
    let xs = crate::density::linspace(-half_range, half_range, m);
    let rec = payoff_recover(k, q, &xs, grid)?;
    let ss: f64 = xs.iter().zip(&rec).map(|(&x, r)| ((x.exp() - k).max(0.0) - r).powi(2)).sum();
    Ok((ss / m as f64).sqrt())
}

/// Half range and sample count of the recovery error used for calibration.
pub const ER_HALF_RANGE: f64 = 2.0;
pub const ER_SAMPLES: usize = 201;

/// Damping that minimises [`er_objective`] over `[−3, −1.001]` by golden section.
pub fn calibrate_q(k: f64, grid: &PayoffGrid) -> Result<f64> {
    let mut failure = None;
    let q = golden_minimize(
        |q| match er_objective(k, q, ER_HALF_RANGE, ER_SAMPLES, grid) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        -3.0,
        -1.001,
        1e-7,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(q),
    }
}

/// [`calibrate_q`] at `k = 1` on the default grid, computed once per process.
pub fn default_q() -> f64 {
    static Q: OnceLock<f64> = OnceLock::new();
    *Q.get_or_init(|| calibrate_q(1.0, &PayoffGrid::default()).expect("default calibration is well posed"))
}

/// Grid for the damped price integral at damping `q`: the spacing is a
/// twenty-fifth of `2π` times the distance from the contour to the nearest
/// singularity of the integrand.
pub fn pricing_grid(tilted: &VgParams, q: f64, n: usize) -> Result<FourierGrid> {
    check_contour(tilted, q)?;
    if !(q < -1.0) {
        return Err(VgError::Strip(format!("damping must satisfy q < -1, got {q}")));
    }
    let sp = tilted.steepness();
    let d = (-q - 1.0).min(-q).min(sp.x1 - q).min(q - sp.x2);
    FourierGrid::new(n, 2.0 * PI * d / 25.0, 1.0, q)
}

/// `(K/2π) ∫_{Im z = q} e^{iz·log(S/K) − τ(r + φ̃(z))} / (iz(iz − 1)) dz` with
/// `φ̃` the exponent of the law tilted at `h*`.
pub fn price_generalized(p: &VgParams, mkt: &MarketContext, cfg: &PricingConfig) -> Result<PriceQuote> {
    mkt.validate()?;
    let m = measure_for(p, mkt.rate, cfg)?;
    let q = cfg.q.unwrap_or_else(default_q);
    let grid = pricing_grid(&m.tilted, q, cfg.n)?;
    price_generalized_with(&m, mkt, &grid, cfg)
}

/// [`price_generalized`] for an already constructed measure and grid.
pub fn price_generalized_with(
    m: &EsscherMeasure,
    mkt: &MarketContext,
    grid: &FourierGrid,
    cfg: &PricingConfig,
) -> Result<PriceQuote> {
    mkt.validate()?;
    let x = (mkt.spot / mkt.strike).ln();
    let mut out = generalized_lattice(m, mkt.spot, mkt.tau, x, 0.0, 1, grid, cfg)?;
    let (price, imag, tail) = out.pop().expect("one output");
    if imag > 1e-6 * mkt.strike {
        return Err(VgError::Tail(format!("imaginary residue {imag} exceeds 1e-6·K")));
    }
    Ok(PriceQuote {
        price,
        engine: Engine::Generalized,
        diagnostics: Diagnostics {
            h_star: Some(m.h_star),
            grid_n: Some(grid.n),
            grid_gamma: Some(grid.gamma),
            q: Some(grid.q),
            tail_bound: Some(tail),
            imag_residue: Some(imag),
            cdf_route: None,
        },
    })
}

/// Generalized-engine prices at log-moneyness `log(S/K) = x0 + j·dx`,
/// `j < count`, from one fractional FFT. Returns `(price, |imag|, tail)` per point.
#[allow(clippy::too_many_arguments)]
pub fn generalized_lattice(
    m: &EsscherMeasure,
    spot: f64,
    tau: f64,
    x0: f64,
    dx: f64,
    count: usize,
    grid: &FourierGrid,
    cfg: &PricingConfig,
) -> Result<Vec<(f64, f64, f64)>> {
    cfg.check()?;
    if !(tau > 0.0) {
        return Err(VgError::Horizon(tau));
    }
    if count == 0 || count > grid.n {
        return Err(VgError::Grid(format!("output count {count} must be in 1..={}", grid.n)));
    }
    let tilted = m.tilted;
    check_contour(&tilted, grid.q)?;
    let t = cfg.time_scale * tau;
    let r = m.rate;
    let shape = t * tilted.alpha;
    let q = grid.q;
    let f0 = |xi: Complex64| {
        let z = xi + I * q;
        let iz = I * z;
        (-shape * tilted.log_q(z)).exp() / (iz * (iz - 1.0))
    };
    let a = grid.half_width();
    let tail = f0(Complex64::new(a, 0.0)).norm();
    let outputs: Vec<usize> = (0..count).collect();
    // w = −(x + tμ) with x = log(S/K)
    let raw = closed_fourier_integral(f0, 2.0 + 2.0 * shape, grid.n, grid.gamma, -(x0 + t * tilted.mu), -dx, &outputs)?;
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(j, v)| {
            let x = x0 + j as f64 * dx;
            let strike = spot * (-x).exp();
            let scale = strike * (-q * (x + t * tilted.mu) - t * r).exp() / (2.0 * PI);
            (scale * v.re, scale * v.im.abs(), scale * tail)
        })
        .collect())
}

/// `S·N(d1) − Ke^{−rτ}·N(d2)`, `d1 = (log(S/K) + (r + ½v²)τ)/(v√τ)`, `d2 = d1 − v√τ`.
pub fn black_scholes(mkt: &MarketContext, vol: f64) -> Result<PriceQuote> {
    mkt.validate()?;
    if !(vol > 0.0 && vol.is_finite()) {
        return Err(VgError::Market(format!("volatility must be > 0, got {vol}")));
    }
    let sd = vol * mkt.tau.sqrt();
    let d1 = ((mkt.spot / mkt.strike).ln() + (mkt.rate + 0.5 * vol * vol) * mkt.tau) / sd;
    let d2 = d1 - sd;
    let price = mkt.spot * std_normal_cdf(d1) - mkt.strike * (-mkt.rate * mkt.tau).exp() * std_normal_cdf(d2);
    Ok(PriceQuote { price, engine: Engine::BlackScholes, diagnostics: Diagnostics::default() })
}

/// Benchmark volatility of the replication preset.
pub const SPY_BS_VOL: f64 = 0.1848;
pub const SPY_RATE: f64 = 0.06;
pub const SPY_SPOT: f64 = 438.98;
/// Maturities of the replication lattice, in years.
pub const REFERENCE_TAUS: [f64; 6] = [0.0625, 0.125, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub strike: f64,
    pub moneyness: f64,
    pub tau: f64,
    pub quote: PriceQuote,
}

/// Prices on `strikes × taus`, strike-major, with one measure shared by all cells.
#[allow(clippy::too_many_arguments)]
pub fn price_surface(
    p: &VgParams,
    rate: f64,
    spot: f64,
    strikes: &[f64],
    taus: &[f64],
    engine: Engine,
    vol_bs: f64,
    cfg: &PricingConfig,
) -> Result<Vec<SurfaceCell>> {
    let measure = match engine {
        Engine::BlackScholes => None,
        _ => Some(measure_for(p, rate, cfg)?),
    };
    let q = cfg.q.unwrap_or_else(|| if engine == Engine::Generalized { default_q() } else { -1.5 });
    let grid = match (&measure, engine) {
        (Some(m), Engine::Generalized) => Some(pricing_grid(&m.tilted, q, cfg.n)?),
        _ => None,
    };
    let mut out = Vec::with_capacity(strikes.len() * taus.len());
    for &strike in strikes {
        for &tau in taus {
            let mkt = MarketContext::new(spot, strike, rate, tau)?;
            let quote = match (engine, &measure, &grid) {
                (Engine::BlackScholes, _, _) => black_scholes(&mkt, vol_bs)?,
                (Engine::Extended, Some(m), _) => price_extended_with(m, &mkt, cfg)?,
                (Engine::Generalized, Some(m), Some(g)) => price_generalized_with(m, &mkt, g, cfg)?,
                _ => unreachable!("measure and grid are built for VG engines"),
            };
            out.push(SurfaceCell { strike, moneyness: spot / strike, tau, quote });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorCell {
    pub strike: f64,
    pub moneyness: f64,
    pub tau: f64,
    pub error: f64,
}

/// `(F_VG − F_BS)/K` per cell with the extended engine.
pub fn error_surface(
    p: &VgParams,
    rate: f64,
    spot: f64,
    strikes: &[f64],
    taus: &[f64],
    vol_bs: f64,
    cfg: &PricingConfig,
) -> Result<Vec<ErrorCell>> {
    let vg = price_surface(p, rate, spot, strikes, taus, Engine::Extended, vol_bs, cfg)?;
    vg.into_iter()
        .map(|c| {
            let mkt = MarketContext::new(spot, c.strike, rate, c.tau)?;
            let bs = black_scholes(&mkt, vol_bs)?.price;
            Ok(ErrorCell { strike: c.strike, moneyness: c.moneyness, tau: c.tau, error: (c.quote.price - bs) / c.strike })
        })
        .collect()
}

/// One printed row of the reference price table.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
pub struct ReferenceRow {
    pub strike: f64,
    pub moneyness: f64,
    pub tau: f64,
    pub bsm: f64,
    pub vg_extended: f64,
    pub vg_generalized: f64,
}

/// The 186 printed cells of the SPY call table, strike-major.
pub fn reference_table() -> &'static [ReferenceRow] {
    static ROWS: OnceLock<Vec<ReferenceRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        csv::Reader::from_reader(include_str!("../data/reference_prices.csv").as_bytes())
            .deserialize()
            .collect::<std::result::Result<Vec<ReferenceRow>, _>>()
            .expect("embedded table parses")
    })
}

/// The 31 printed strikes, moneyness 2.00 down to 0.50.
pub fn reference_strikes() -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in reference_table() {
        if out.last() != Some(&r.strike) {
            out.push(r.strike);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub strike: f64,
    pub moneyness: f64,
    pub tau: f64,
    pub bsm_printed: f64,
    pub bsm: f64,
    pub extended_printed: f64,
    pub extended: f64,
    pub generalized_printed: f64,
    pub generalized: f64,
}

/// Side-by-side comparison with the printed table. No pass/fail is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    /// Esscher parameter actually used for the VG columns.
    pub h_star: f64,
    /// Requested override, if any.
    pub requested_override: Option<f64>,
    /// Why the override was or was not applied.
    pub override_status: String,
    pub rows: Vec<ReplicationRow>,
    pub max_abs_dev_extended: f64,
    pub max_abs_dev_generalized: f64,
}

/// Prices every printed cell with both engines. An override outside
/// `(h1, h2 − 1)` has no valid tilted law; it is reported and the solved `h*`
/// is used instead.
pub fn replication_report(p: &VgParams, h_override: Option<f64>, cfg: &PricingConfig) -> Result<ReplicationReport> {
    let solved = measure_for(p, SPY_RATE, &PricingConfig { h_star_override: None, ..*cfg })?;
    let (measure, status) = match h_override {
        None => (solved, "no override requested; solved h* used".to_string()),
        Some(h) => match measure_for(p, SPY_RATE, &PricingConfig { h_star_override: Some(h), ..*cfg }) {
            Ok(m) => (m, format!("override h = {h} applied")),
            Err(e) => (solved, format!("override h = {h} outside strip / n/a ({e}); solved h* = {} used", solved.h_star)),
        },
    };
    let q = cfg.q.unwrap_or_else(default_q);
    let grid = pricing_grid(&measure.tilted, q, cfg.n)?;
    let mut rows = Vec::with_capacity(reference_table().len());
    let (mut dev_e, mut dev_g) = (0.0f64, 0.0f64);
    for r in reference_table() {
        let mkt = MarketContext::new(SPY_SPOT, r.strike, SPY_RATE, r.tau)?;
        let bsm = black_scholes(&mkt, SPY_BS_VOL)?.price;
        let extended = price_extended_with(&measure, &mkt, cfg)?.price;
        let generalized = price_generalized_with(&measure, &mkt, &grid, cfg)?.price;
        dev_e = dev_e.max((extended - r.vg_extended).abs());
        dev_g = dev_g.max((generalized - r.vg_generalized).abs());
        rows.push(ReplicationRow {
            strike: r.strike,
            moneyness: r.moneyness,
            tau: r.tau,
            bsm_printed: r.bsm,
            bsm,
            extended_printed: r.vg_extended,
            extended,
            generalized_printed: r.vg_generalized,
            generalized,
        });
    }
    Ok(ReplicationReport {
        h_star: measure.h_star,
        requested_override: h_override,
        override_status: status,
        rows,
        max_abs_dev_extended: dev_e,
        max_abs_dev_generalized: dev_g,
    })
}
