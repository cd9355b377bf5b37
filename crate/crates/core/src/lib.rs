//! Burst-sparsity variational Bayesian channel estimation for massive MIMO-OTFS.
//!
//! The estimators are generic over the real scalar type ([`Real`], implemented
//! for `f32` and `f64`); the `*64` aliases below fix it to `f64`.

pub mod baselines;
pub mod burst_vbi;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod otfs_model;
pub mod poly;
pub mod refinement;
pub mod rng;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

/// `f64` complex scalar.
pub type C64 = Cx<f64>;
/// `f32` complex scalar.
pub type C32 = Cx<f32>;
pub type SystemConfig64 = otfs_model::SystemConfig<f64>;
pub type ChannelRealization64 = otfs_model::ChannelRealization<f64>;
pub type DictionaryState64 = otfs_model::DictionaryState<f64>;
pub type EstimationResult64 = estimate::EstimationResult<f64>;
pub type HyperParams64 = burst_vbi::HyperParams<f64>;
pub type PosteriorState64 = burst_vbi::PosteriorState<f64>;
