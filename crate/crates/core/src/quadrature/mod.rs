//! Numerical kernels shared by the density, pricing and calibration code.

mod fft;
mod fourier;
mod frft;
mod newton_cotes;
mod normal;
mod optimize;
mod sum;

pub use fft::fft;
pub use fourier::{closed_fourier_integral, lattice_sum, FourierGrid};
pub use frft::frft;
pub use newton_cotes::{composite_integrate, newton_cotes_12_weights, NewtonCotesRule, Rational};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_sf};
pub use optimize::{golden_minimize, solve_monotone};
pub use sum::{pairwise_sum, Sample};
