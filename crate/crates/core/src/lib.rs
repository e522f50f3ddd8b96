//! Bounds on the Gaussian rate-distortion-perception function with limited
//! common randomness, under KL-divergence and squared Wasserstein-2
//! perception constraints, together with transportation-inequality checks
//! and entropy-constrained scalar quantizer design.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod ecsq;
pub mod error;
mod optimize;
pub mod oracle;
pub mod scalar;
pub mod sweep;
pub mod talagrand;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{ExtReal, GaussianSource, Measure, RdpQuery};
