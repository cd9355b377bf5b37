use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{kron, unvec_cols, vec_cols};
use crate::otfs_model::DictionaryState;
use crate::scalar::{Cx, Real};

/// Default allocation budget for the dense vectorized machinery (1 GiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

/// Errors if `entries` complex values of `T` exceed `budget_bytes`.
pub fn check_memory<T: Real>(entries: usize, budget_bytes: usize) -> Result<()> {
    let needed = entries.saturating_mul(2 * std::mem::size_of::<T>());
    if needed > budget_bytes {
        return Err(Error::MemoryGuard { needed_bytes: needed as u64, budget_bytes: budget_bytes as u64 });
    }
    Ok(())
}

/// Dense vectorized model `vec(Y) = Φ vec(G) + vec(W)` with `Φ = S ⊗ A`.
#[derive(Debug, Clone)]
pub struct VectorizedModel<T> {
    /// `(L·N_BS) × (N_τ·M_θ)`; column `n·M_θ + m` is `s_n ⊗ a_m`.
    pub phi: Array2<Cx<T>>,
    /// `vec(Y)`, column-major.
    pub y: Array1<Cx<T>>,
    pub antennas: usize,
    pub angle_grid: usize,
}

impl<T: Real> VectorizedModel<T> {
    /// `Φ g`.
    pub fn apply(&self, g: &ArrayView1<'_, Cx<T>>) -> Array1<Cx<T>> {
        self.phi.dot(g)
    }

    /// `vec(Y) - Φ g`.
    pub fn residual(&self, g: &ArrayView1<'_, Cx<T>>) -> Array1<Cx<T>> {
        &self.y - &self.phi.dot(g)
    }

    /// Reshapes a coefficient vector into `M_θ × N_τ`.
    pub fn unvec_coefficients(&self, g: &ArrayView1<'_, Cx<T>>) -> Array2<Cx<T>> {
        unvec_cols(g, self.angle_grid, g.len() / self.angle_grid)
    }
}

/// Materializes `Φ = S(κ) ⊗ A(β)` and `vec(Y)` under a memory budget.
pub fn build_vectorized_dictionary<T: Real>(
    dict: &DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
    budget_bytes: usize,
) -> Result<VectorizedModel<T>> {
    let (nb, m) = dict.a.dim();
    let (l, taps) = dict.s.dim();
    if y.dim() != (nb, l) {
        return Err(Error::Dimension(format!("observation {:?}, expected {nb}x{l}", y.dim())));
    }
    check_memory::<T>((l * nb).saturating_mul(taps * m), budget_bytes)?;
    Ok(VectorizedModel {
        phi: kron(&dict.s.view(), &dict.a.view()),
        y: vec_cols(y),
        antennas: nb,
        angle_grid: m,
    })
}
