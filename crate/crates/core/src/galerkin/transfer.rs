use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{build_block_system, build_generators, GalerkinError, OperatorQuadruple};
use crate::linalg::{complex_identity, max_abs, to_complex};

/// Entrywise relative agreement expected between the three transfer forms.
pub const RESOLVENT_AGREEMENT_TOL: f64 = 1e-8;

const SOLVE_RESIDUAL_LIMIT: f64 = 1e-6;

/// The open-loop transfer function evaluated three ways at one `λ`.
#[derive(Debug, Clone)]
pub struct TransferTriple {
    pub lambda: Complex64,
    /// `B0* (λ − 𝒜₁⁰)⁻¹ B0` on the coupled first-order generator.
    pub g1: DMatrix<Complex64>,
    /// `λ B0* (λ² + A)⁻¹ B0` on the block stiffness.
    pub g2: DMatrix<Complex64>,
    /// `λ B* Γ B` with `Γ = [λ² + A1 + λ² C (λ² + A2)⁻¹ C*]⁻¹`.
    pub gamma_form: DMatrix<Complex64>,
}

impl TransferTriple {
    /// Largest pairwise entrywise discrepancy, relative to the largest entry.
    pub fn max_relative_discrepancy(&self) -> f64 {
        let scale = max_abs(&self.g1).max(max_abs(&self.g2)).max(max_abs(&self.gamma_form));
        let d = max_abs(&(&self.g1 - &self.g2))
            .max(max_abs(&(&self.g1 - &self.gamma_form)))
            .max(max_abs(&(&self.g2 - &self.gamma_form)));
        if scale == 0.0 {
            d
        } else {
            d / scale
        }
    }
}

fn solve(
    lambda: Complex64,
    m: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>, GalerkinError> {
    let near_singular = |residual| GalerkinError::NearSingularResolvent { lambda, residual };
    let x = m.clone().lu().solve(rhs).ok_or(near_singular(f64::INFINITY))?;
    let rhs_norm = rhs.norm();
    if rhs_norm > 0.0 {
        let residual = (m * &x - rhs).norm() / rhs_norm;
        if !(residual <= SOLVE_RESIDUAL_LIMIT) {
            return Err(near_singular(residual));
        }
    }
    Ok(x)
}

fn check_frequency(lambda: Complex64) -> Result<(), GalerkinError> {
    if lambda.re > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(GalerkinError::InvalidFrequency(lambda))
    }
}

/// `Γ(λ)` formed explicitly.
pub fn gamma_operator(q: &OperatorQuadruple, lambda: Complex64) -> Result<DMatrix<Complex64>, GalerkinError> {
    check_frequency(lambda)?;
    let d = q.dims();
    let l2 = lambda * lambda;
    let c = to_complex(&q.c);
    let shifted_a2 = to_complex(&q.a2) + complex_identity(d.n2) * l2;
    let inner = solve(lambda, &shifted_a2, &c.transpose())?;
    let op = complex_identity(d.n1) * l2 + to_complex(&q.a1) + &c * inner * l2;
    solve(lambda, &op, &complex_identity(d.n1))
}

pub fn transfer_resolvent_pair(q: &OperatorQuadruple, lambda: Complex64) -> Result<TransferTriple, GalerkinError> {
    check_frequency(lambda)?;
    let d = q.dims();
    let (n1, n2, m) = (d.n1, d.n2, d.m);
    let n = n1 + n2;
    let b = to_complex(&q.b);

    // Input and output both act on the ẇ1 slot of (w1, w2, ẇ1, ẇ2).
    let (open_loop, _) = build_generators(q, false)?;
    let mut input = DMatrix::zeros(2 * n, m);
    input.view_mut((n, 0), (n1, m)).copy_from(&b);
    let shifted = complex_identity(2 * n) * lambda - to_complex(&open_loop.matrix);
    let g1 = input.adjoint() * solve(lambda, &shifted, &input)?;

    let sys = build_block_system(q)?;
    let b0 = to_complex(&sys.b0);
    let shifted_a = to_complex(&sys.a) + complex_identity(n) * (lambda * lambda);
    let g2 = b0.adjoint() * solve(lambda, &shifted_a, &b0)? * lambda;

    // Γ B by two nested solves rather than forming Γ.
    let l2 = lambda * lambda;
    let c = to_complex(&q.c);
    let shifted_a2 = to_complex(&q.a2) + complex_identity(n2) * l2;
    let inner = solve(lambda, &shifted_a2, &c.transpose())?;
    let op = complex_identity(n1) * l2 + to_complex(&q.a1) + &c * inner * l2;
    let gamma_form = b.adjoint() * solve(lambda, &op, &b)? * lambda;

    Ok(TransferTriple { lambda, g1, g2, gamma_form })
}
