//! Detection and false-alarm probabilities of a serial GNSS acquisition
//! search as a function of Doppler bin width, with an exact enumeration
//! oracle and Monte Carlo simulators to check them.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the simulator and harness use.

pub mod analytic;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod oracle;
pub mod prncode;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SignalParams = analytic::SignalParams<f64>;
pub type DopplerGrid = analytic::DopplerGrid<f64>;
pub type NonCentralityProfile = analytic::NonCentralityProfile<f64>;
pub type SearchPolicy = analytic::SearchPolicy<f64>;
pub type RocPoint = analytic::RocPoint<f64>;
pub type RocCurve = analytic::RocCurve<f64>;
pub type RocRequest = analytic::RocRequest<f64>;
pub type ToleranceConfig = numerics::ToleranceConfig<f64>;
pub use analytic::SearchOrder;
