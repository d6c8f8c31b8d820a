use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GalerkinError, OperatorQuadruple};

/// Smallest δ with `|⟨x, C y⟩| ≤ δ (‖A1^{1/2} x‖² + ‖y‖² + ‖C* x‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta_min: f64,
    /// `delta_min < 1/2`.
    pub admissible: bool,
}

/// Certifies the coupling bound through the symmetric pencil `S z = μ R z`
/// with `S = [[0, C], [C*, 0]]` and `R = blockdiag(A1 + C C*, I)`.
///
/// `⟨x, C y⟩ = ½ zᵀ S z` and the pencil spectrum is symmetric about zero,
/// so `delta_min = ½ μ_max`.
pub fn estimate_delta(q: &OperatorQuadruple) -> Result<DeltaEstimate, GalerkinError> {
    let d = q.dims();
    let (n1, n2) = (d.n1, d.n2);
    let n = n1 + n2;
    let ct = q.c.transpose();

    let mut s = DMatrix::zeros(n, n);
    s.view_mut((0, n1), (n1, n2)).copy_from(&q.c);
    s.view_mut((n1, 0), (n2, n1)).copy_from(&ct);

    let mut r = DMatrix::zeros(n, n);
    r.view_mut((0, 0), (n1, n1)).copy_from(&(&q.a1 + &q.c * &ct));
    r.view_mut((n1, n1), (n2, n2)).fill_with_identity();
    let r = (&r + r.transpose()) * 0.5;

    let chol = r.cholesky().ok_or(GalerkinError::SingularPencil)?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(GalerkinError::SingularPencil)?;
    let reduced = &l_inv * s * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let mu_max = reduced
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let delta_min = 0.5 * mu_max;
    Ok(DeltaEstimate { delta_min, admissible: delta_min < 0.5 })
}
