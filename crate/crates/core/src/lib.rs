//! Latent factor analysis of high-dimensional incomplete matrices.
//!
//! Three learners share one training loop: regularised SGD, SGD driven by a
//! per-entry PID-refined error, and a folded PID learner whose shrinkage and
//! gains are re-scheduled every epoch by a fuzzy controller fed with the
//! validation RMSE improvement.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which the CLI uses throughout.

pub mod bench;
pub mod cli;
pub mod config;
pub mod data_io;
pub mod error;
pub mod fuzzy;
pub mod optimizer;
pub mod scalar;
pub mod training;
pub mod types;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use training::OptimizerKind;

pub type SparseMatrix = types::SparseMatrix<f64>;
pub type Entry = types::Entry<f64>;
pub type DatasetSplit = types::DatasetSplit<f64>;
pub type FactorModel = types::FactorModel<f64>;
pub type Hyperparams = types::Hyperparams<f64>;
pub type PidGains = types::PidGains<f64>;
pub type FuzzyTable = fuzzy::FuzzyTable<f64>;
pub type MembershipResult = fuzzy::MembershipResult<f64>;
pub type AdaptedParams = fuzzy::AdaptedParams<f64>;
pub type ControllerState = optimizer::ControllerState<f64>;
pub type ControllerBank = optimizer::ControllerBank<f64>;
pub type TrainConfig = training::TrainConfig<f64>;
pub type EpochMetrics = training::EpochMetrics<f64>;
pub type TrainReport = training::TrainReport<f64>;
pub type Dataset = data_io::Dataset<f64>;
