use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use vgpricer::pricing::{
    black_scholes, calibrate_q, default_q, er_objective, measure_for, payoff_recover, payoff_transform,
    price_extended, price_generalized, price_surface, pricing_grid, price_generalized_with, reference_table,
    reference_strikes, Engine, MarketContext, PayoffGrid, PricingConfig, SurfaceCell, ER_HALF_RANGE, ER_SAMPLES,
    SPY_BS_VOL, SPY_RATE, SPY_SPOT, REFERENCE_TAUS,
};
use vgpricer::density::DensityEngine;
use vgpricer::VgParams;

fn lattice(engine: Engine) -> &'static Vec<SurfaceCell> {
    static EXT: OnceLock<Vec<SurfaceCell>> = OnceLock::new();
    static GEN: OnceLock<Vec<SurfaceCell>> = OnceLock::new();
    let cell = if engine == Engine::Extended { &EXT } else { &GEN };
    cell.get_or_init(|| {
        price_surface(
            &VgParams::spy_daily(),
            SPY_RATE,
            SPY_SPOT,
            &reference_strikes(),
            &REFERENCE_TAUS,
            engine,
            SPY_BS_VOL,
            &PricingConfig::default(),
        )
        .unwrap()
    })
}

#[test]
fn bsm_column_reproduces_printed_table() {
    let rows = reference_table();
    assert_eq!(rows.len(), 186);
    for r in rows {
        let bs = black_scholes(&MarketContext::new(SPY_SPOT, r.strike, SPY_RATE, r.tau).unwrap(), SPY_BS_VOL)
            .unwrap()
            .price;
        assert!((bs - r.bsm).abs() <= 0.02, "K {} tau {}: {bs} vs {}", r.strike, r.tau, r.bsm);
    }
}

#[test]
fn bsm_printed_examples() {
    let p = |k: f64, tau: f64| {
        black_scholes(&MarketContext::new(SPY_SPOT, k, SPY_RATE, tau).unwrap(), SPY_BS_VOL).unwrap().price
    };
    assert!((p(438.98, 0.25) - 19.53).abs() < 0.01);
    assert!((p(219.49, 0.0625) - 220.31).abs() < 0.01);
}

#[test]
fn black_scholes_put_call_parity_and_limits() {
    let mkt = MarketContext::new(100.0, 95.0, 0.03, 0.7).unwrap();
    let c = black_scholes(&mkt, 0.25).unwrap().price;
    // C − P = S − Ke^{−rτ}; the put is the call with spot and discounted strike swapped
    let fwd_k = 95.0 * (-0.03f64 * 0.7).exp();
    let p = black_scholes(&MarketContext::new(fwd_k, 100.0, 0.0, 0.7).unwrap(), 0.25).unwrap().price;
    assert!((c - p - (100.0 - fwd_k)).abs() < 1e-10, "{c} {p}");
    let tiny = black_scholes(&mkt, 1e-8).unwrap().price;
    assert!((tiny - mkt.lower_bound()).abs() < 1e-9);
    let huge = black_scholes(&mkt, 50.0).unwrap().price;
    assert!((huge - 100.0).abs() < 1e-3);
}

#[test]
fn engines_agree_near_the_money() {
    let p = VgParams::spy_daily();
    let cfg = PricingConfig::default();
    for tau in [0.25, 0.5, 1.0] {
        for m in [0.9, 0.95, 1.0, 1.05, 1.1] {
            let k = SPY_SPOT / m;
            let mkt = MarketContext::new(SPY_SPOT, k, SPY_RATE, tau).unwrap();
            let e = price_extended(&p, &mkt, &cfg).unwrap().price;
            let g = price_generalized(&p, &mkt, &cfg).unwrap().price;
            assert!((e - g).abs() <= 0.01 * k, "m {m} tau {tau}: {e} vs {g}");
            assert!((e - g).abs() < 1e-6, "m {m} tau {tau}: {e} vs {g}");
        }
    }
}

#[test]
fn engines_agree_on_the_whole_lattice() {
    let (ext, gen) = (lattice(Engine::Extended), lattice(Engine::Generalized));
    for (a, b) in ext.iter().zip(gen) {
        assert!((a.quote.price - b.quote.price).abs() < 1e-5, "K {} tau {}", a.strike, a.tau);
    }
}

#[test]
fn no_arbitrage_bounds_on_lattice() {
    for engine in [Engine::Extended, Engine::Generalized] {
        for c in lattice(engine) {
            let mkt = MarketContext::new(SPY_SPOT, c.strike, SPY_RATE, c.tau).unwrap();
            assert!(c.quote.within_bounds(&mkt), "{engine:?} K {} tau {}: {}", c.strike, c.tau, c.quote.price);
        }
    }
}

#[test]
fn convex_and_decreasing_in_strike() {
    for engine in [Engine::Extended, Engine::Generalized] {
        let cells = lattice(engine);
        for &tau in &REFERENCE_TAUS {
            let mut col: Vec<(f64, f64)> =
                cells.iter().filter(|c| c.tau == tau).map(|c| (c.strike, c.quote.price)).collect();
            col.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in col.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-9, "{engine:?} tau {tau}: not decreasing at K {}", w[1].0);
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                assert!(slope >= -(-SPY_RATE * tau).exp() - 1e-9);
            }
            for w in col.windows(3) {
                let (k0, k1, k2) = (w[0].0, w[1].0, w[2].0);
                let lam = (k2 - k1) / (k2 - k0);
                let chord = lam * w[0].1 + (1.0 - lam) * w[2].1;
                assert!(w[1].1 <= chord + 1e-8, "{engine:?} tau {tau}: convexity fails at K {k1}");
            }
        }
    }
}

#[test]
fn increasing_in_maturity() {
    // with r > 0 and no dividends a call is worth more with more time
    for c in lattice(Engine::Extended) {
        let later = lattice(Engine::Extended).iter().find(|d| d.strike == c.strike && d.tau > c.tau);
        if let Some(d) = later {
            assert!(d.quote.price >= c.quote.price - 1e-9);
        }
    }
}

#[test]
fn damping_independence() {
    let p = VgParams::spy_daily();
    let q0 = default_q();
    for (k, tau) in [(400.0, 0.25), (438.98, 1.0), (500.0, 0.5), (300.0, 0.125)] {
        let mkt = MarketContext::new(SPY_SPOT, k, SPY_RATE, tau).unwrap();
        let a = price_generalized(&p, &mkt, &PricingConfig { q: Some(q0), ..Default::default() }).unwrap().price;
        let b = price_generalized(&p, &mkt, &PricingConfig { q: Some(q0 - 0.2), ..Default::default() }).unwrap().price;
        assert!((a - b).abs() < 1e-6, "K {k} tau {tau}: {a} vs {b}");
    }
}

#[test]
fn fourier_cdf_route_matches_mixture_route() {
    let p = VgParams::spy_daily();
    let four = PricingConfig { cdf_route: DensityEngine::Fourier, ..Default::default() };
    for (k, tau) in [(420.0, 0.25), (460.0, 0.75)] {
        let mkt = MarketContext::new(SPY_SPOT, k, SPY_RATE, tau).unwrap();
        let a = price_extended(&p, &mkt, &PricingConfig::default()).unwrap().price;
        let b = price_extended(&p, &mkt, &four).unwrap().price;
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn generalized_reports_small_imaginary_part() {
    let p = VgParams::spy_daily();
    let cfg = PricingConfig::default();
    let m = measure_for(&p, SPY_RATE, &cfg).unwrap();
    let grid = pricing_grid(&m.tilted, default_q(), cfg.n).unwrap();
    let mkt = MarketContext::new(SPY_SPOT, 438.98, SPY_RATE, 0.25).unwrap();
    let q = price_generalized_with(&m, &mkt, &grid, &cfg).unwrap();
    assert!(q.diagnostics.imag_residue.unwrap() < 1e-8);
    assert_eq!(q.diagnostics.grid_n, Some(4096));
}

#[test]
fn gaussian_limit_recovers_black_scholes() {
    // α = c, θ = 1/c, δ = 0: the subordinator tends to calendar time and the
    // risk-neutral law of the log price to N((r − ½σ²)τ, σ²τ)
    let c = 256.0;
    let sigma = 0.1848;
    let p = VgParams::new(0.0, 0.0, sigma, c, 1.0 / c).unwrap();
    for (k, tau) in [(400.0, 0.5), (438.98, 1.0), (480.0, 0.25)] {
        let mkt = MarketContext::new(SPY_SPOT, k, SPY_RATE, tau).unwrap();
        let vg = price_extended(&p, &mkt, &PricingConfig::default()).unwrap().price;
        let bs = black_scholes(&mkt, sigma).unwrap().price;
        assert!((vg - bs).abs() < 0.05, "K {k} tau {tau}: {vg} vs {bs}");
    }
}

#[test]
fn vanishing_strike_prices_the_share() {
    let p = VgParams::spy_daily();
    let mkt = MarketContext::new(SPY_SPOT, 1e-6, SPY_RATE, 0.5).unwrap();
    let price = price_extended(&p, &mkt, &PricingConfig::default()).unwrap().price;
    assert!((price - SPY_SPOT).abs() < 1e-6 * SPY_SPOT, "{price}");
}

#[test]
fn payoff_transform_examples() {
    // k = 1, y = −2i: e^{0}/((2)(1)) = 1/2
    let v = payoff_transform(1.0, Complex64::new(0.0, -2.0)).unwrap();
    assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    assert!(payoff_transform(1.0, Complex64::new(0.3, -0.5)).is_err());
    // direct quadrature of ∫ e^{−iyx}(e^x − k)⁺dx at y = 0.7 − 1.8i, k = 1.3
    let (k, y) = (1.3f64, Complex64::new(0.7, -1.8));
    let (lo, hi, n) = (k.ln(), 40.0, 400_000);
    let h = (hi - lo) / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let x = lo + (j as f64 + 0.5) * h;
        acc += (-Complex64::i() * y * x).exp() * (x.exp() - k) * h;
    }
    assert!((acc - payoff_transform(k, y).unwrap()).norm() < 1e-6);
}

#[test]
fn payoff_recovery_is_accurate() {
    let xs: Vec<f64> = (0..41).map(|j| -2.0 + 0.1 * j as f64).collect();
    let rec = payoff_recover(1.0, -1.5, &xs, &PayoffGrid::default()).unwrap();
    for (x, r) in xs.iter().zip(&rec) {
        let exact = (x.exp() - 1.0).max(0.0);
        // the kink at x = 0 converges slowest
        assert!((r - exact).abs() < 2e-2, "x {x}: {r} vs {exact}");
    }
}

#[test]
fn er_decreases_with_more_nodes() {
    let mut prev = f64::INFINITY;
    for n in [512, 1024, 2048, 4096] {
        let er = er_objective(1.0, -1.2, ER_HALF_RANGE, ER_SAMPLES, &PayoffGrid { n, gamma: 1.0 / 128.0 }).unwrap();
        assert!(er < prev, "n {n}: {er}");
        prev = er;
    }
}

#[test]
fn er_is_convex_on_the_scan() {
    let grid = PayoffGrid::default();
    let qs: Vec<f64> = (0..200).map(|j| -3.0 + 1.999 * j as f64 / 199.0).collect();
    let er: Vec<f64> = qs.iter().map(|&q| er_objective(1.0, q, ER_HALF_RANGE, ER_SAMPLES, &grid).unwrap()).collect();
    let interior_max = er.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
    assert_eq!(interior_max, 0);
}

#[test]
fn calibrated_q_matches_grid_search() {
    let grid = PayoffGrid::default();
    let q = calibrate_q(1.0, &grid).unwrap();
    assert!((q - (-1.0086)).abs() <= 0.02, "{q}");
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    let mut x = -3.0;
    while x <= -1.001 {
        let v = er_objective(1.0, x, ER_HALF_RANGE, ER_SAMPLES, &grid).unwrap();
        if v < best {
            best = v;
            arg = x;
        }
        x += 1e-3;
    }
    assert!((q - arg).abs() < 2e-3, "{q} vs {arg}");
}

#[test]
fn calibrated_q_is_stable_across_strikes() {
    let grid = PayoffGrid::default();
    let qs: Vec<f64> = [0.5, 0.8, 1.0, 1.25, 2.0].iter().map(|&k| calibrate_q(k, &grid).unwrap()).collect();
    let spread = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - qs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.05, "{qs:?}");
}

#[test]
fn invalid_market_inputs_rejected() {
    assert!(MarketContext::new(0.0, 100.0, 0.05, 1.0).is_err());
    assert!(MarketContext::new(100.0, -1.0, 0.05, 1.0).is_err());
    assert!(MarketContext::new(100.0, 100.0, 0.05, 0.0).is_err());
    let mkt = MarketContext::new(100.0, 100.0, 0.05, 1.0).unwrap();
    assert!(black_scholes(&mkt, 0.0).is_err());
    let bad_q = PricingConfig { q: Some(-0.5), ..Default::default() };
    assert!(price_generalized(&VgParams::spy_daily(), &mkt, &bad_q).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extended_price_within_bounds(k in 250.0f64..800.0, tau in 0.05f64..2.0) {
        let mkt = MarketContext::new(SPY_SPOT, k, SPY_RATE, tau).unwrap();
        let q = price_extended(&VgParams::spy_daily(), &mkt, &PricingConfig::default()).unwrap();
        prop_assert!(q.within_bounds(&mkt));
    }

    #[test]
    fn black_scholes_homogeneous(s in 10.0f64..500.0, k in 10.0f64..500.0, scale in 0.1f64..10.0) {
        let a = black_scholes(&MarketContext::new(s, k, 0.05, 0.5).unwrap(), 0.3).unwrap().price;
        let b = black_scholes(&MarketContext::new(s * scale, k * scale, 0.05, 0.5).unwrap(), 0.3).unwrap().price;
        prop_assert!((b - scale * a).abs() < 1e-9 * (1.0 + b.abs()));
    }
}
