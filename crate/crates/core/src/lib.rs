//! Angle-of-arrival physical-layer authentication under multi-antenna spoofing.
//!
//! The verifier is an `M`-element uniform linear array that estimates the
//! angle of arrival of a pilot under a single-source model and compares it to
//! the enrolled angle of the legitimate node. A spoofer with `L` antennas
//! transmits a precoded signal `s = Σ q_ℓ a(θ_ℓ)`, so under attack the
//! verifier's estimator is a quasi-ML estimator of a misspecified model.
//!
//! Modules:
//!
//! - [`signal_model`]: steering vectors, their derivatives, weighted geometric
//!   sums and the legitimate/spoofed mean signals.
//! - [`bounds`]: CRB, the misspecified CRB (MCRB) ingredients and the
//!   pseudo-true angle.
//! - [`estimator`]: the ML / quasi-ML angle estimator and the test statistic.
//! - [`authtest`]: threshold, false-alarm, misdetection and spoofing detection
//!   probabilities plus their asymptotic and variance-sensitivity results.
//! - [`montecarlo`]: the deterministic trial engine that validates all of the
//!   above empirically.
//!
//! The math is generic over the scalar type (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`, which is what the Monte Carlo engine uses.

pub mod authtest;
pub mod bounds;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod normal;
pub mod scalar;
pub mod search;
pub mod signal_model;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_complex::Complex;

/// Double-precision complex sample.
pub type C64 = Complex<f64>;
pub type Geometry = signal_model::UlaGeometry<f64>;
pub type Spoofer = signal_model::SpooferConfig<f64>;
pub type Legitimate = signal_model::LegitimateSource<f64>;
pub type Search = search::SearchSettings<f64>;
pub type Batch = estimator::SnapshotBatch<f64>;
pub type Estimate = estimator::AoaEstimate<f64>;
pub type Estimator = estimator::AoaEstimator<f64>;
pub type PseudoTrue = bounds::PseudoTrueResult<f64>;
pub type Bounds = bounds::BoundReport<f64>;
pub type Report = authtest::AnalyticReport<f64>;
pub type Probabilities = authtest::ErrorProbabilities<f64>;

/// Degrees to radians for any supported scalar.
pub fn deg<T: Scalar>(degrees: T) -> T {
    degrees.to_radians()
}
