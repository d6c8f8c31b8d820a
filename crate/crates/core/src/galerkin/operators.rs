use nalgebra::DMatrix;

use super::{GalerkinError, OperatorQuadruple};
use crate::linalg;

/// Stiffness of the transformed second-order system `Ẅ + A W + B0 B0* Ẇ = 0`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    /// `[[A1 + C C*, C A2^{1/2}], [A2^{1/2} C*, A2]]`.
    pub a: DMatrix<f64>,
    /// `[B; 0]`.
    pub b0: DMatrix<f64>,
    pub sqrt_a1: DMatrix<f64>,
    pub sqrt_a2: DMatrix<f64>,
    pub inv_sqrt_a2: DMatrix<f64>,
    pub sqrt_a: DMatrix<f64>,
    pub n1: usize,
    pub n2: usize,
}

pub fn build_block_system(q: &OperatorQuadruple) -> Result<BlockSystem, GalerkinError> {
    let d = q.dims();
    let (n1, n2) = (d.n1, d.n2);
    let r1 = q.roots_a1()?;
    let r2 = q.roots_a2()?;
    let ct = q.c.transpose();

    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(&(&q.a1 + &q.c * &ct));
    let upper = &q.c * &r2.sqrt;
    a.view_mut((0, n1), (n1, n2)).copy_from(&upper);
    a.view_mut((n1, 0), (n2, n1)).copy_from(&upper.transpose());
    a.view_mut((n1, n1), (n2, n2)).copy_from(&q.a2);
    let a = (&a + a.transpose()) * 0.5;

    let mut b0 = DMatrix::zeros(n1 + n2, d.m);
    b0.view_mut((0, 0), (n1, d.m)).copy_from(&q.b);

    // A is SPD whenever A1 is; a failure here means the inputs were not validated.
    let sqrt_a = linalg::spd_roots(&a).ok_or(GalerkinError::SqrtFailure(super::MatrixName::A1))?.sqrt;

    Ok(BlockSystem {
        a,
        b0,
        sqrt_a1: r1.sqrt,
        sqrt_a2: r2.sqrt,
        inv_sqrt_a2: r2.inv_sqrt,
        sqrt_a,
        n1,
        n2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GeneratorKind {
    /// Original coupled variables `(w1, w2, ẇ1, ẇ2)` with damping.
    Coupled,
    /// Transformed variables `(u, v, u̇, v̇)` with damping.
    Transformed,
    OpenLoopCoupled,
    OpenLoopTransformed,
}

#[derive(Debug, Clone)]
pub struct FirstOrderGenerator {
    pub matrix: DMatrix<f64>,
    pub kind: GeneratorKind,
}

/// Returns the coupled-form and transformed-form generators; with
/// `damping = false` the `−B B*` velocity block is omitted from both.
pub fn build_generators(
    q: &OperatorQuadruple,
    damping: bool,
) -> Result<(FirstOrderGenerator, FirstOrderGenerator), GalerkinError> {
    let d = q.dims();
    let (n1, n2) = (d.n1, d.n2);
    let sys = build_block_system(q)?;
    let n = n1 + n2;
    let ct = q.c.transpose();
    let bbt = &q.b * q.b.transpose();

    let mut coupled = DMatrix::zeros(2 * n, 2 * n);
    coupled.view_mut((0, n), (n, n)).fill_with_identity();
    coupled.view_mut((n, 0), (n1, n1)).copy_from(&-&q.a1);
    coupled.view_mut((n, n + n1), (n1, n2)).copy_from(&-&q.c);
    coupled.view_mut((n + n1, n1), (n2, n2)).copy_from(&-&q.a2);
    coupled.view_mut((n + n1, n), (n2, n1)).copy_from(&ct);

    let mut transformed = DMatrix::zeros(2 * n, 2 * n);
    transformed.view_mut((0, n), (n, n)).fill_with_identity();
    transformed.view_mut((n, 0), (n, n)).copy_from(&-&sys.a);

    if damping {
        coupled.view_mut((n, n), (n1, n1)).copy_from(&-&bbt);
        transformed.view_mut((n, n), (n1, n1)).copy_from(&-&bbt);
    }

    let (k1, k2) = if damping {
        (GeneratorKind::Coupled, GeneratorKind::Transformed)
    } else {
        (GeneratorKind::OpenLoopCoupled, GeneratorKind::OpenLoopTransformed)
    };
    Ok((
        FirstOrderGenerator { matrix: coupled, kind: k1 },
        FirstOrderGenerator { matrix: transformed, kind: k2 },
    ))
}

/// Change of variables `(u, v, u̇, v̇) = P (w1, w2, ẇ1, ẇ2)`.
#[derive(Debug, Clone)]
pub struct TransformPair {
    pub p: DMatrix<f64>,
    pub p_inv: DMatrix<f64>,
    /// ‖P‖₂ ‖P⁻¹‖₂.
    pub cond: f64,
}

pub fn build_transform(q: &OperatorQuadruple) -> Result<TransformPair, GalerkinError> {
    let d = q.dims();
    let (n1, n2) = (d.n1, d.n2);
    let r2 = q.roots_a2()?;
    let ct = q.c.transpose();
    let n = 2 * (n1 + n2);
    // Block offsets of (x1, x2, x3, x4) = (n1, n2, n1, n2).
    let o = [0, n1, n1 + n2, 2 * n1 + n2];

    let mut p = DMatrix::zeros(n, n);
    p.view_mut((o[0], o[0]), (n1, n1)).fill_with_identity();
    p.view_mut((o[1], o[0]), (n2, n1)).copy_from(&-(&r2.inv_sqrt * &ct));
    p.view_mut((o[1], o[3]), (n2, n2)).copy_from(&r2.inv_sqrt);
    p.view_mut((o[2], o[2]), (n1, n1)).fill_with_identity();
    p.view_mut((o[3], o[1]), (n2, n2)).copy_from(&-&r2.sqrt);

    let mut p_inv = DMatrix::zeros(n, n);
    p_inv.view_mut((o[0], o[0]), (n1, n1)).fill_with_identity();
    p_inv.view_mut((o[1], o[3]), (n2, n2)).copy_from(&-&r2.inv_sqrt);
    p_inv.view_mut((o[2], o[2]), (n1, n1)).fill_with_identity();
    p_inv.view_mut((o[3], o[0]), (n2, n1)).copy_from(&ct);
    p_inv.view_mut((o[3], o[1]), (n2, n2)).copy_from(&r2.sqrt);

    let cond = linalg::spectral_norm(&p) * linalg::spectral_norm(&p_inv);
    Ok(TransformPair { p, p_inv, cond })
}

/// ‖𝒜₁ − P⁻¹ 𝒜₂ P‖_F / ‖𝒜₁‖_F for the damped generators.
pub fn conjugation_residual(q: &OperatorQuadruple) -> Result<f64, GalerkinError> {
    let (coupled, transformed) = build_generators(q, true)?;
    let t = build_transform(q)?;
    let conj = &t.p_inv * &transformed.matrix * &t.p;
    let scale = coupled.matrix.norm();
    Ok(if scale == 0.0 { (conj - &coupled.matrix).norm() } else { (conj - &coupled.matrix).norm() / scale })
}
