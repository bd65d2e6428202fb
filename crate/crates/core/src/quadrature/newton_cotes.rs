//! Closed 13-node (Q = 12) Newton–Cotes rule and its composite form.

use std::sync::OnceLock;

use super::sum::{pairwise_sum, Sample};
use crate::error::{Result, VgError};

const Q: usize = 12;

/// Exact fraction with a positive denominator, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Rational { num: s * num / g, den: s * den / g }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::ops::Add for Rational {
    type Output = Rational;

    fn add(self, o: Rational) -> Rational {
        let g = gcd(self.den, o.den);
        let l = self.den / g * o.den;
        Rational::new(self.num * (l / self.den) + o.num * (l / o.den), l)
    }
}

/// Weights `W_0..W_12` in units of the node spacing, so that one panel of
/// width `12h` integrates as `h Σ W_j g(x_j)`. Each weight is the exact
/// integral over `[0, 12]` of the Lagrange basis polynomial on nodes `0..=12`.
pub fn newton_cotes_12_weights() -> [Rational; Q + 1] {
    static W: OnceLock<[Rational; Q + 1]> = OnceLock::new();
    *W.get_or_init(|| {
        let mut out = [Rational::new(0, 1); Q + 1];
        for (j, w) in out.iter_mut().enumerate() {
            // coefficients of Π_{m≠j} (x − m), lowest degree first
            let mut poly: Vec<i128> = vec![1];
            let mut denom: i128 = 1;
            for m in 0..=Q {
                if m == j {
                    continue;
                }
                let mut next = vec![0i128; poly.len() + 1];
                for (k, &c) in poly.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * m as i128;
                }
                poly = next;
                denom *= j as i128 - m as i128;
            }
            let mut integral = Rational::new(0, 1);
            let mut power: i128 = Q as i128;
            for (k, &c) in poly.iter().enumerate() {
                integral = integral + Rational::new(c * power, k as i128 + 1);
                power *= Q as i128;
            }
            *w = Rational::new(integral.num, integral.den * denom);
        }
        out
    })
}

/// Composite closed Newton–Cotes rule on `[a, b]` with `panels` panels of
/// twelve sub-intervals each.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonCotesRule {
    pub q: usize,
    pub weights: [f64; Q + 1],
    pub panels: usize,
    pub a: f64,
    pub b: f64,
}

impl NewtonCotesRule {
    pub fn new(a: f64, b: f64, panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(VgError::Grid("at least one panel is required".into()));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(VgError::Bracket { lo: a, hi: b });
        }
        let exact = newton_cotes_12_weights();
        let mut weights = [0.0; Q + 1];
        for (w, r) in weights.iter_mut().zip(exact.iter()) {
            *w = r.to_f64();
        }
        Ok(NewtonCotesRule { q: Q, weights, panels, a, b })
    }

    /// `a = 0`, `b = 20`, 5000 panels (60 000 sub-intervals).
    pub fn standard() -> Self {
        Self::new(0.0, 20.0, 5000).expect("static bounds are valid")
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.panels * self.q) as f64
    }
}

/// `h Σ_p Σ_j W_j f(x_{12p+j})`. Each node is evaluated once; panel sums are
/// combined by pairwise summation so the result does not depend on threading.
pub fn composite_integrate<T, F>(mut f: F, rule: &NewtonCotesRule) -> Result<T>
where
    T: Sample,
    F: FnMut(f64) -> T,
{
    let h = rule.step();
    let mut eval = |idx: usize| -> Result<T> {
        let x = rule.a + idx as f64 * h;
        let v = f(x);
        if v.is_finite_sample() {
            Ok(v)
        } else {
            Err(VgError::NonFiniteSample(x))
        }
    };
    let mut left = eval(0)?;
    let mut panel_sums = Vec::with_capacity(rule.panels);
    for p in 0..rule.panels {
        let base = p * rule.q;
        let mut s = left * rule.weights[0];
        for j in 1..=rule.q {
            let v = eval(base + j)?;
            s = s + v * rule.weights[j];
            if j == rule.q {
                left = v;
            }
        }
        panel_sums.push(s);
    }
    Ok(pairwise_sum(&panel_sums) * h)
}
