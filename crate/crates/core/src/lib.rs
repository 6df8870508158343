//! Multisine transmit-waveform optimization for wireless power transfer
//! through a Rapp solid-state amplifier and a nonlinear rectenna.
//!
//! The numerical core ([`signal`], [`sspa`], [`rectenna`], [`optimizer`],
//! [`baselines`]) is generic over the [`Scalar`] type; the aliases below fix
//! it to `f64`, which is what [`experiments`] and the CLI use.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod rectenna;
pub mod scalar;
pub mod selfcheck;
pub mod signal;
pub mod sspa;

pub use error::{Result, WptError};
pub use scalar::Scalar;

pub type WeightMatrix64 = signal::WeightMatrix<f64>;
pub type TimeGrid64 = signal::TimeGrid<f64>;
pub type ChannelMatrix64 = rectenna::ChannelMatrix<f64>;
pub type SspaParams64 = sspa::SspaParams<f64>;
pub type RectennaParams64 = rectenna::RectennaParams<f64>;
pub type PowerBudgets64 = optimizer::PowerBudgets<f64>;
pub type SolverConfig64 = optimizer::SolverConfig<f64>;
pub type OptResult64 = optimizer::OptResult<f64>;

pub type WeightMatrix32 = signal::WeightMatrix<f32>;
pub type SspaParams32 = sspa::SspaParams<f32>;
