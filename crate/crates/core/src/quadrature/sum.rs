//! Deterministic summation helpers.

use std::ops::Add;

use num_complex::Complex64;

/// Values that can be accumulated by the quadrature routines.
pub trait Sample: Copy + Add<Output = Self> + std::ops::Mul<f64, Output = Self> {
    const ZERO: Self;
    fn is_finite_sample(&self) -> bool;
}

impl Sample for f64 {
    const ZERO: Self = 0.0;
    fn is_finite_sample(&self) -> bool {
        self.is_finite()
    }
}

impl Sample for Complex64 {
    const ZERO: Self = Complex64 { re: 0.0, im: 0.0 };
    fn is_finite_sample(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Pairwise (tree) summation: split at the midpoint, sum halves, add.
/// Blocks of eight or fewer are summed left to right.
pub fn pairwise_sum<T: Sample>(xs: &[T]) -> T {
    if xs.len() <= 8 {
        return xs.iter().fold(T::ZERO, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
