//! Reference estimators: least squares, ℓ1 regularization, row-sparse off-grid
//! SBL, and the vectorized off-grid VB estimator. The i.i.d.-prior variant of
//! the proposed solver is [`burst_vbi`](crate::burst_vbi) with
//! [`PriorMode::Iid`](crate::burst_vbi::PriorMode).

mod l1;
mod ls;
mod ogvbi;
mod vector_ogvbi;
mod vectorized;

pub use l1::{l1_estimate, l1_estimate_observed, soft_threshold, universal_lambda, L1Params};
pub use ls::ls_estimate;
pub use ogvbi::{ogvbi_estimate, ogvbi_estimate_observed, search_tap_doppler, OgvbiParams};
pub use vector_ogvbi::{vector_ogvbi_estimate, vector_ogvbi_estimate_observed, vector_posterior, VectorOgvbiParams, VectorPosterior};
pub use vectorized::{build_vectorized_dictionary, check_memory, VectorizedModel, DEFAULT_MEMORY_BUDGET};
