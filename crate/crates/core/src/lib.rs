//! Endogenous DeGroot opinion dynamics over sequences of topics with truth revelation.
//!
//! The numeric engines are generic over [`Real`] (`f32` or `f64`); scenario
//! configuration and persistence work in `f64`.

pub mod beliefs;
pub mod conformity;
pub mod degroot;
pub mod error;
pub mod harness;
pub mod homophily;
pub mod linalg;
pub mod metrics;
pub mod opposition;
pub mod rational;
pub mod scalar;
pub mod scenario;
pub mod stochastic;
pub mod trust;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type WeightMatrix = stochastic::RowStochasticMatrix<f64>;
pub type WeightMatrix32 = stochastic::RowStochasticMatrix<f32>;
pub type Beliefs = Vec<f64>;
pub type LimitResult = degroot::LimitResult<f64>;
pub type InfluenceVector = degroot::InfluenceVector<f64>;
