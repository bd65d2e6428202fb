use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::fft::transform;
use crate::error::{Result, VgError};

/// Fractional DFT `G_k = Σ_j x_j e^{−2πi·j·k·frac}`, `k = 0..n`.
///
/// Uses `jk = (j² + k² − (k−j)²)/2`: pre-multiply by `e^{−πij²frac}`,
/// circularly convolve with `e^{πim²frac}` on a zero-padded `2n` buffer,
/// post-multiply by `e^{−πik²frac}`.
pub fn frft(x: &[Complex64], frac: f64) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(VgError::Length(n));
    }
    if !(frac.abs() < 1.0) {
        return Err(VgError::FracRange(frac));
    }
    let chirp = |m: usize| {
        let m = m as f64;
        Complex64::from_polar(1.0, PI * m * m * frac)
    };
    let mut y = vec![Complex64::new(0.0, 0.0); 2 * n];
    let mut z = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in 0..n {
        y[j] = x[j] * chirp(j).conj();
        z[j] = chirp(j);
        if j > 0 {
            z[2 * n - j] = z[j];
        }
    }
    let mut planner = FftPlanner::new();
    transform(&mut planner, &mut y, false);
    transform(&mut planner, &mut z, false);
    for (a, b) in y.iter_mut().zip(&z) {
        *a *= b;
    }
    transform(&mut planner, &mut y, true);
    Ok((0..n).map(|k| y[k] * chirp(k).conj()).collect())
}
