//! Variance-Gamma option pricing: the five-parameter VG law, Esscher
//! risk-neutral measure, density and price engines, and OU-driven simulation.

// `!(x > 0.0)` guards are written so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod esscher;
pub mod pricing;
pub mod quadrature;
pub mod simulate;
pub mod vg;

pub use error::{Result, VgError};
pub use vg::VgParams;
