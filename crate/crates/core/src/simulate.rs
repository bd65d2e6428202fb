//! Simulation of the Gamma-OU variance process driven by a compound-Poisson
//! BDLP, its integrated variance, and the VG log-return path it subordinates.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VgError};
use crate::quadrature::std_normal_cdf;
use crate::vg::{asymptotic_normal_params, VgParams};

/// Parameters of `dσ²(t) = −λσ²(t)dt + dz(λt)` where `z` is compound Poisson
/// with rate `alpha` per unit of `λt` and exponential jumps of mean `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUConfig {
    pub alpha: f64,
    pub theta: f64,
    pub lambda: f64,
    pub sigma2_0: f64,
    pub horizon: f64,
    pub dt: f64,
}

impl OUConfig {
    /// `λ = 1`, `σ²(0) = 0`, shape and scale taken from `p`.
    pub fn from_params(p: &VgParams, horizon: f64, dt: f64) -> Self {
        OUConfig { alpha: p.alpha, theta: p.theta, lambda: 1.0, sigma2_0: 0.0, horizon, dt }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(VgError::InvalidParams(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad(format!("theta must be > 0, got {}", self.theta));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if !(self.sigma2_0 >= 0.0 && self.sigma2_0.is_finite()) {
            return bad(format!("sigma2_0 must be >= 0, got {}", self.sigma2_0));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return bad(format!("horizon must be >= dt, got {}", self.horizon));
        }
        Ok(())
    }

    /// Output times `0, dt, 2dt, …` up to the horizon.
    pub fn times(&self) -> Vec<f64> {
        let steps = (self.horizon / self.dt + 1e-9).floor() as usize;
        (0..=steps).map(|k| k as f64 * self.dt).collect()
    }
}

/// Jump epochs (calendar time) and sizes of the BDLP on `[0, horizon]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BdlpJumps {
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
}

/// Paths sampled on a common time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    pub times: Vec<f64>,
    pub z_path: Vec<f64>,
    pub sigma2_path: Vec<f64>,
    pub sigma2_star_path: Vec<f64>,
    pub y_path: Vec<f64>,
    pub jumps: BdlpJumps,
    pub lambda: f64,
    pub sigma2_0: f64,
}

/// Generator for job `index` under `seed`; each index is its own ChaCha stream.
pub fn rng_for(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn sample_jumps(cfg: &OUConfig, rng: &mut ChaCha20Rng) -> BdlpJumps {
    let gap = Exp::new(cfg.alpha * cfg.lambda).expect("validated rate");
    let size = Exp::new(1.0 / cfg.theta).expect("validated scale");
    let mut out = BdlpJumps::default();
    let mut t = gap.sample(rng);
    while t <= cfg.horizon {
        out.times.push(t);
        out.sizes.push(size.sample(rng));
        t += gap.sample(rng);
    }
    out
}

/// Jumps of `z(λt)` on `[0, horizon]`: Poisson arrivals at rate `αλ` in
/// calendar time, exponential sizes with mean `θ`.
pub fn simulate_bdlp(cfg: &OUConfig, seed: u64) -> Result<BdlpJumps> {
    cfg.validate()?;
    Ok(sample_jumps(cfg, &mut rng_for(seed, 0)))
}

/// `v·e^{−λ·dt}`.
fn decay(v: f64, lambda: f64, dt: f64) -> f64 {
    v * (-lambda * dt).exp()
}

fn ou_from_jumps(cfg: &OUConfig, jumps: BdlpJumps) -> PathBundle {
    let times = cfg.times();
    let mut z_path = Vec::with_capacity(times.len());
    let mut sigma2_path = Vec::with_capacity(times.len());
    let mut z = Neumaier::default();
    let mut value = cfg.sigma2_0;
    let mut last = 0.0;
    let mut next = 0;
    for &t in &times {
        while next < jumps.times.len() && jumps.times[next] <= t {
            let a = jumps.times[next];
            value = decay(value, cfg.lambda, a - last) + jumps.sizes[next];
            z.add(jumps.sizes[next]);
            last = a;
            next += 1;
        }
        z_path.push(z.value());
        sigma2_path.push(decay(value, cfg.lambda, t - last));
    }
    let mut bundle = PathBundle {
        times,
        z_path,
        sigma2_path,
        sigma2_star_path: Vec::new(),
        y_path: Vec::new(),
        jumps,
        lambda: cfg.lambda,
        sigma2_0: cfg.sigma2_0,
    };
    bundle.sigma2_star_path = integrate_variance(&bundle);
    bundle
}

/// Exact OU path `σ²(t) = σ²(0)e^{−λt} + Σ_{a_k ≤ t} e^{−λ(t−a_k)}ξ_k` on the
/// output grid, with `z` and the integrated variance filled in.
pub fn simulate_ou(cfg: &OUConfig, seed: u64) -> Result<PathBundle> {
    cfg.validate()?;
    let jumps = sample_jumps(cfg, &mut rng_for(seed, 0));
    Ok(ou_from_jumps(cfg, jumps))
}

/// `σ²*(t) = ∫₀ᵗ σ²(s) ds` on the bundle's grid, integrated segment by segment
/// between jumps: a segment starting at level `v` and lasting `Δ` contributes
/// `v(1 − e^{−λΔ})/λ`.
pub fn integrate_variance(bundle: &PathBundle) -> Vec<f64> {
    let lambda = bundle.lambda;
    let seg = |v: f64, d: f64| if d > 0.0 { -v * (-lambda * d).exp_m1() / lambda } else { 0.0 };
    let mut acc = Neumaier::default();
    let mut value = bundle.sigma2_0;
    let mut last = 0.0;
    let mut next = 0;
    let jumps = &bundle.jumps;
    let mut out = Vec::with_capacity(bundle.times.len());
    for &t in &bundle.times {
        while next < jumps.times.len() && jumps.times[next] <= t {
            let a = jumps.times[next];
            acc.add(seg(value, a - last));
            value = decay(value, lambda, a - last) + jumps.sizes[next];
            last = a;
            next += 1;
        }
        out.push(acc.value() + seg(value, t - last));
    }
    out
}

/// `λσ²*(t) − z(λt) + σ²(t) − σ²(0)` at every grid time.
pub fn cointegration_residuals(bundle: &PathBundle) -> Vec<f64> {
    bundle
        .times
        .iter()
        .enumerate()
        .map(|(k, _)| {
            bundle.lambda * bundle.sigma2_star_path[k] - bundle.z_path[k] + bundle.sigma2_path[k] - bundle.sigma2_0
        })
        .collect()
}

/// Log-return path driven by the OU clock: each step adds
/// `μΔ + δ·Δσ²* + σ·√(Δσ²*)·Z` with `Δσ²*` the integrated-variance increment.
pub fn simulate_vg_path(p: &VgParams, cfg: &OUConfig, seed: u64) -> Result<PathBundle> {
    p.validate()?;
    cfg.validate()?;
    let jumps = sample_jumps(cfg, &mut rng_for(seed, 0));
    let mut bundle = ou_from_jumps(cfg, jumps);
    let mut normals = rng_for(seed, 1);
    let mut y = Neumaier::default();
    bundle.y_path.push(0.0);
    for k in 1..bundle.times.len() {
        let dt = bundle.times[k] - bundle.times[k - 1];
        let dv = (bundle.sigma2_star_path[k] - bundle.sigma2_star_path[k - 1]).max(0.0);
        let zn: f64 = StandardNormal.sample(&mut normals);
        y.add(p.mu * dt + p.delta * dv + p.sigma * dv.sqrt() * zn);
        bundle.y_path.push(y.value());
    }
    Ok(bundle)
}

/// `n` independent draws of `Y_t` by Gamma subordination:
/// `tμ + δG + σ√G·Z`, `G ~ Gamma(tα, θ)`.
pub fn sample_vg_increments(p: &VgParams, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(VgError::Horizon(t));
    }
    let gamma = Gamma::new(t * p.alpha, p.theta).map_err(|e| VgError::InvalidParams(e.to_string()))?;
    let mut rng = rng_for(seed, 2);
    Ok((0..n)
        .map(|_| {
            let g: f64 = gamma.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            t * p.mu + p.delta * g + p.sigma * g.sqrt() * z
        })
        .collect())
}

/// Sample mean and variance with their standard errors; the variance error
/// uses the sample fourth central moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn sample_stats(xs: &[f64]) -> SampleStats {
    let n = xs.len();
    let nf = n as f64;
    let mut s = Neumaier::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / nf;
    let (mut m2, mut m3, mut m4) = (Neumaier::default(), Neumaier::default(), Neumaier::default());
    for &x in xs {
        let d = x - mean;
        m2.add(d * d);
        m3.add(d * d * d);
        m4.add(d * d * d * d);
    }
    let (c2, c3, c4) = (m2.value() / nf, m3.value() / nf, m4.value() / nf);
    let variance = m2.value() / (nf - 1.0);
    SampleStats {
        n,
        mean,
        mean_se: (variance / nf).sqrt(),
        variance,
        variance_se: ((c4 - c2 * c2).max(0.0) / nf).sqrt(),
        skewness: if c2 > 0.0 { c3 / c2.powf(1.5) } else { 0.0 },
        excess_kurtosis: if c2 > 0.0 { c4 / (c2 * c2) - 3.0 } else { 0.0 },
    }
}

/// `σ²(burn_in)` from `n` independent paths started at `σ²(0)`.
pub fn stationary_samples(cfg: &OUConfig, burn_in: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let run = OUConfig { horizon: burn_in, dt: burn_in, ..*cfg };
    run.validate()?;
    Ok((0..n as u64)
        .map(|i| {
            let jumps = sample_jumps(&run, &mut rng_for(seed, 16 + i));
            let mut v = Neumaier::default();
            v.add(decay(run.sigma2_0, run.lambda, burn_in));
            for (a, x) in jumps.times.iter().zip(&jumps.sizes) {
                v.add(decay(*x, run.lambda, burn_in - a));
            }
            v.value()
        })
        .collect())
}

/// `σ²(u)` from `σ²(0) = 0` in `n` independent replications.
pub fn transition_samples(cfg: &OUConfig, u: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    stationary_samples(&OUConfig { sigma2_0: 0.0, ..*cfg }, u, n, seed)
}

/// `E[e^{iξσ²(u)}]` from `σ²(0) = 0`: `((1 − iθξe^{−λu}) / (1 − iθξ))^α`.
pub fn transition_cf(cfg: &OUConfig, xi: f64, u: f64) -> Complex64 {
    let i = Complex64::i();
    let num = 1.0 - i * (cfg.theta * xi * (-cfg.lambda * u).exp());
    let den = 1.0 - i * (cfg.theta * xi);
    ((num / den).ln() * cfg.alpha).exp()
}

/// `(1/n) Σ e^{iξx_k}`.
pub fn empirical_cf(xs: &[f64], xi: f64) -> Complex64 {
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    for &x in xs {
        let (s, c) = (xi * x).sin_cos();
        re.add(c);
        im.add(s);
    }
    Complex64::new(re.value(), im.value()) / xs.len() as f64
}

/// `sup_x |F_n(x) − F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at the 1% level, `1.6276/√n`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_61 / (n as f64).sqrt()
}

/// KS distance between `(Y_t − ta)/(√t·b)` and `N(0, 1)` over `n` exact draws.
pub fn ks_normality(p: &VgParams, t: f64, n: usize, seed: u64) -> Result<f64> {
    let (a, b) = asymptotic_normal_params(p);
    let xs = sample_vg_increments(p, t, n, seed)?;
    let (loc, scale) = (t * a, t.sqrt() * b);
    let z: Vec<f64> = xs.iter().map(|y| (y - loc) / scale).collect();
    Ok(ks_statistic(&z, std_normal_cdf))
}

/// [`ks_normality`] restricted to long horizons `t ≥ 10`.
pub fn asymptotic_normality_test(p: &VgParams, t_large: f64, n_samples: usize, seed: u64) -> Result<f64> {
    if !(t_large >= 10.0) {
        return Err(VgError::Domain(format!("asymptotic test needs t >= 10, got {t_large}")));
    }
    ks_normality(p, t_large, n_samples, seed)
}

/// Default seed for reproducible reports.
pub const DEFAULT_SEED: u64 = 20_240_601;
