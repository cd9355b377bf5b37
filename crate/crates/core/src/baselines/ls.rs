use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::estimate::{Diagnostics, EstimationResult, TraceKind};
use crate::linalg::{fro_sqr, pinv_full_rank};
use crate::otfs_model::DictionaryState;
use crate::scalar::{Cx, Real};

/// Minimum-norm least squares `ĝ = Φ⁺ vec(Y)` on the given dictionary, computed
/// as `Ĝ = A⁺ Y (S⁺)ᵀ` since `(S ⊗ A)⁺ = S⁺ ⊗ A⁺`.
pub fn ls_estimate<T: Real>(y: &ArrayView2<'_, Cx<T>>, dict: &DictionaryState<T>) -> Result<EstimationResult<T>> {
    if y.dim() != (dict.a.nrows(), dict.s.nrows()) {
        return Err(Error::Dimension(format!("observation {:?}", y.dim())));
    }
    let a_pinv = pinv_full_rank(&dict.a.view())?;
    let s_pinv = pinv_full_rank(&dict.s.view())?;
    let u = a_pinv.dot(y).dot(&s_pinv.t());
    let resid = dict.residual(y, &u.view());
    Ok(EstimationResult {
        h_hat: dict.reconstruct(&u.view()),
        trace: vec![fro_sqr(&resid.view())],
        trace_kind: TraceKind::SinglePass,
        theta: dict.effective_angles(),
        kappa: dict.kappa.clone(),
        u,
        iters: 1,
        alpha_hat: None,
        converged: true,
        diagnostics: Diagnostics::default(),
        scale: T::one(),
    })
}
