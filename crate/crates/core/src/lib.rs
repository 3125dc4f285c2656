//! Linear regression when the noise has an uncertain mean and an uncertain
//! variance.
//!
//! The estimator works on moving blocks of a (time-ordered) sample, picks
//! the block with the least residual variance to estimate the slope, and
//! then reads off the mean and variance envelopes
//! `[mu_lo, mu_hi] x [sigma2_lo, sigma2_hi]` from the remaining blocks.
//! A G-normal expectation engine and synthetic data generators accompany it.

pub mod bench;
pub mod data;
pub mod dgp;
pub mod envelope;
pub mod error;
pub mod gexp;
pub mod ols;
pub mod report;
pub mod rng;
pub mod robust_lse;

pub use data::{Dataset, Sample};
pub use envelope::UncertaintyEnvelope;
pub use error::{Error, Result};
pub use ols::{ols_fit, OlsFit};
pub use rng::SeededRng;
pub use robust_lse::{robust_lse_fit, MuRule, RobustLseConfig, RobustLseFit};
