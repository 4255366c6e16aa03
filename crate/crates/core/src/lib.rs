//! Coding-rate reduction, information-bottleneck objectives and binned
//! information-plane estimates for small fully connected networks.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the command line
//! tool uses.

pub mod data;
pub mod error;
pub mod ib;
pub mod linalg;
pub mod mi_est;
pub mod nn;
pub mod rates;
pub mod scalar;

pub use data::Dataset;
pub use error::{Error, Result};
pub use ib::{EntropyRegime, EntropyTriple, GaussianChannel, SpecialCaseReport, TradeoffBeta};
pub use linalg::Matrix;
pub use mi_est::{ActivationSnapshot, BinningConfig, InfoPlanePoint, RangeMode};
pub use nn::{Activation, Mlp, MlpConfig, Optimizer, TrainTrace};
pub use rates::{FeatureMatrix, Partition, Precision, RateSummary};
pub use scalar::Real;

pub type Matrix64 = Matrix<f64>;
pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type Precision64 = Precision<f64>;
pub type Dataset64 = Dataset<f64>;
pub type Mlp64 = Mlp<f64>;
pub type TrainTrace64 = TrainTrace<f64>;
pub type ActivationSnapshot64 = ActivationSnapshot<f64>;
pub type GaussianChannel64 = GaussianChannel<f64>;
pub type SpecialCaseReport64 = SpecialCaseReport<f64>;
