use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, VgError};

/// Radix-2 DFT `X_k = Σ x_j e^{−2πijk/n}`; the inverse carries the `1/n` factor.
pub fn fft(x: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(VgError::Length(n));
    }
    let mut buf = x.to_vec();
    let mut planner = FftPlanner::new();
    transform(&mut planner, &mut buf, inverse);
    Ok(buf)
}

pub(crate) fn transform(planner: &mut FftPlanner<f64>, buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if inverse {
        planner.plan_fft_inverse(n).process(buf);
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    } else {
        planner.plan_fft_forward(n).process(buf);
    }
}
