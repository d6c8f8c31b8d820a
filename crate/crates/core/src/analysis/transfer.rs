//! Values follow the jump convention `[ψ']_ξ = +k`, so for real `λ > 0` they
//! are negative: the matrix transfer `λ B*(λ² + A)⁻¹ B` equals `−H`.

use std::io::{self, Write};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::{ModelConfig, ModelKind};

/// Matching systems above this condition number are rejected.
pub const MATCHING_COND_LIMIT: f64 = 1e12;

const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMethod {
    ClosedForm,
    NumericBvp,
}

impl TransferMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferMethod::ClosedForm => "closed_form",
            TransferMethod::NumericBvp => "numeric_bvp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferSample {
    pub lambda: Complex64,
    pub h1: Complex64,
    pub h2: Complex64,
    pub h: Complex64,
    pub method: TransferMethod,
}

fn check_lambda(lambda: Complex64) -> Result<(), AnalysisError> {
    if lambda.re > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::InvalidFrequency(lambda))
    }
}

/// Roots of `r² − βλr − λ² = 0` (Dirichlet) or `r² − βλr − λ² − 1 = 0` (mixed);
/// `r1` takes the `+` sign.
pub fn characteristic_roots(
    kind: ModelKind,
    beta: f64,
    lambda: Complex64,
) -> Result<(Complex64, Complex64), AnalysisError> {
    let (r1, r2) = match kind {
        ModelKind::Dirichlet => {
            if lambda == Complex64::new(0.0, 0.0) {
                return Err(AnalysisError::CoincidentRoots(lambda));
            }
            let s = (beta * beta + 4.0).sqrt();
            (lambda * 0.5 * (beta + s), lambda * 0.5 * (beta - s))
        }
        ModelKind::Mixed => {
            let half = lambda * beta * 0.5;
            let root = (half * half + lambda * lambda + 1.0).sqrt();
            (half + root, half - root)
        }
    };
    if (r1 - r2).norm() < COINCIDENCE_TOL * (1.0 + r1.norm()) {
        return Err(AnalysisError::CoincidentRoots(lambda));
    }
    Ok((r1, r2))
}

fn finite_or_overflow(lambda: Complex64, v: Complex64) -> Result<Complex64, AnalysisError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AnalysisError::OverflowGuard(lambda))
    }
}

/// `e^{−λβξ}/(2s) · (e^{r1(ξ−1)} − e^{r2(ξ−1)})/(e^{−r2} − e^{−r1}) · (e^{r1ξ} − e^{r2ξ})`
/// with every exponential factored against its dominant term.
fn dirichlet_half(beta: f64, xi: f64, lambda: Complex64) -> Result<Complex64, AnalysisError> {
    let s = (beta * beta + 4.0).sqrt();
    let (r1, r2) = characteristic_roots(ModelKind::Dirichlet, beta, lambda)?;
    let d = r1 - r2;
    let one = Complex64::new(1.0, 0.0);
    let scale = -lambda * beta * xi + r2 * (xi - 1.0) + r1 * xi + r2;
    let ratio = (one - (-d * (1.0 - xi)).exp()) * (one - (-d * xi).exp()) / (one - (-d).exp());
    finite_or_overflow(lambda, -ratio * scale.exp() / (2.0 * s))
}

/// `cosh(r(ξ − 1)) e^{rξ} / sinh r`, rewritten so no exponential grows.
fn mixed_kernel(r: Complex64, xi: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if r.re >= 0.0 {
        (one + (-r * 2.0 * (1.0 - xi)).exp()) / (one - (-r * 2.0).exp())
    } else {
        -(r * 2.0 * xi).exp() * (one + (r * 2.0 * (1.0 - xi)).exp()) / (one - (r * 2.0).exp())
    }
}

pub fn transfer_closed_form(cfg: &ModelConfig, lambda: Complex64) -> Result<TransferSample, AnalysisError> {
    cfg.validate()?;
    check_lambda(lambda)?;
    let (h1, h2) = match cfg.kind {
        ModelKind::Dirichlet => (dirichlet_half(cfg.beta, cfg.xi, lambda)?, dirichlet_half(-cfg.beta, cfg.xi, lambda)?),
        ModelKind::Mixed => {
            let (r1, r2) = characteristic_roots(ModelKind::Mixed, cfg.beta, lambda)?;
            let pre = lambda / ((r1 - r2) * 2.0);
            let f = |r| mixed_kernel(r, cfg.xi);
            let h1 = pre * (f(r2) - f(r1));
            let h2 = pre * (f(-r1) - f(-r2));
            (finite_or_overflow(lambda, h1)?, finite_or_overflow(lambda, h2)?)
        }
    };
    Ok(TransferSample { lambda, h1, h2, h: h1 + h2, method: TransferMethod::ClosedForm })
}

/// Solves for `Y = (φ1, φ2, φ1', φ2')` on `(0, ξ) ∪ (ξ, 1)` with
///
/// ```text
/// φ1'' = (λ² + κ) φ1 + λβ φ2',   φ2'' = (λ² + κ) φ2 + λβ φ1',
/// ```
///
/// `κ = 0` (Dirichlet) or `1` (mixed), the example's end conditions, continuity
/// of `φ1, φ2, φ2'` and `[φ1']_ξ = k`. Each side is propagated by the matrix
/// exponential from its end, leaving a 4×4 system in the four free end values.
pub fn transfer_numeric_bvp(cfg: &ModelConfig, lambda: Complex64, k: f64) -> Result<TransferSample, AnalysisError> {
    cfg.validate()?;
    check_lambda(lambda)?;
    if !(k != 0.0 && k.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!("jump k = {k} must be finite and nonzero")));
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let kappa = match cfg.kind {
        ModelKind::Dirichlet => 0.0,
        ModelKind::Mixed => 1.0,
    };
    let q = lambda * lambda + kappa;
    let lb = lambda * cfg.beta;
    #[rustfmt::skip]
    let m = Matrix4::new(
        zero, zero, one, zero,
        zero, zero, zero, one,
        q, zero, zero, lb,
        zero, q, lb, zero,
    );
    // Components left free by the end conditions at x = 0 and x = 1.
    let free: [usize; 2] = match cfg.kind {
        ModelKind::Dirichlet => [2, 3],
        ModelKind::Mixed => [0, 3],
    };
    let left = (m * Complex64::from(cfg.xi)).exp();
    let right = (m * Complex64::from(cfg.xi - 1.0)).exp();
    let mut system = Matrix4::zeros();
    for (j, &c) in free.iter().enumerate() {
        system.set_column(j, &(-left.column(c)));
        system.set_column(j + 2, &right.column(c));
    }
    let sv = system.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= MATCHING_COND_LIMIT) {
        return Err(AnalysisError::SingularMatching { lambda, cond });
    }
    let rhs = Vector4::new(zero, zero, Complex64::from(k), zero);
    let coeffs = system.lu().solve(&rhs).ok_or(AnalysisError::SingularMatching { lambda, cond: f64::INFINITY })?;
    let mut y0 = Vector4::zeros();
    for (j, &c) in free.iter().enumerate() {
        y0[c] = coeffs[j];
    }
    let y = left * y0;
    let (phi1, phi2) = (y[0] / k, y[1] / k);
    Ok(TransferSample {
        lambda,
        h1: lambda * 0.5 * (phi1 + phi2),
        h2: lambda * 0.5 * (phi1 - phi2),
        h: lambda * phi1,
        method: TransferMethod::NumericBvp,
    })
}

/// Both methods at every grid point, in grid order (closed form first).
pub fn transfer_scan(cfg: &ModelConfig, grid: &[Complex64]) -> Result<Vec<TransferSample>, AnalysisError> {
    let pairs: Vec<_> = grid
        .par_iter()
        .map(|&l| Ok([transfer_closed_form(cfg, l)?, transfer_numeric_bvp(cfg, l, 1.0)?]))
        .collect::<Result<_, AnalysisError>>()?;
    Ok(pairs.into_iter().flatten().collect())
}

pub fn write_transfer_csv<W: Write>(samples: &[TransferSample], mut out: W) -> io::Result<()> {
    writeln!(out, "re_lambda,im_lambda,abs_H,abs_H1,abs_H2,method")?;
    for s in samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            s.lambda.re,
            s.lambda.im,
            s.h.norm(),
            s.h1.norm(),
            s.h2.norm(),
            s.method.as_str()
        )?;
    }
    Ok(())
}

/// Analytic bound on `|H1|` along `Re λ = 2γ`.
pub fn paper_bound_h1(cfg: &ModelConfig, gamma: f64) -> f64 {
    let (beta, xi) = (cfg.beta, cfg.xi);
    let s = (beta * beta + 4.0).sqrt();
    match cfg.kind {
        ModelKind::Dirichlet => (gamma * s * (1.0 - xi)).cosh() / (gamma * s).sinh() * (gamma * s * xi).cosh() / s,
        ModelKind::Mixed => {
            let p = gamma * (beta + s);
            (p * (xi - 1.0)).cosh() * p.cosh() * (p * xi).exp() / (p.sinh() * (gamma * (s - beta)).sinh()) / s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalLineSup {
    pub gamma: f64,
    /// Real part of the sampled line, `2γ`.
    pub re_lambda: f64,
    pub sup_h1: f64,
    pub argmax_h1: Complex64,
    pub sup_h: f64,
    pub argmax_h: Complex64,
    pub paper_bound_h1: f64,
}

/// Closed-form `|H1|` and `|H|` on `n_samples` equispaced points of
/// `{Re λ = 2γ, |Im λ| ≤ ω_max}`.
pub fn vertical_line_sup(
    cfg: &ModelConfig,
    gamma: f64,
    omega_max: f64,
    n_samples: usize,
) -> Result<VerticalLineSup, AnalysisError> {
    if !(gamma > 0.0 && omega_max > 0.0 && n_samples >= 100) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need gamma > 0, omega_max > 0, n_samples >= 100; got {gamma}, {omega_max}, {n_samples}"
        )));
    }
    let re = 2.0 * gamma;
    let step = 2.0 * omega_max / (n_samples - 1) as f64;
    let samples: Vec<TransferSample> = (0..n_samples)
        .into_par_iter()
        .map(|j| transfer_closed_form(cfg, Complex64::new(re, -omega_max + step * j as f64)))
        .collect::<Result<_, _>>()?;
    let argmax = |f: fn(&TransferSample) -> f64| {
        samples.iter().fold((f64::NEG_INFINITY, Complex64::new(re, 0.0)), |best, s| {
            let v = f(s);
            if v > best.0 {
                (v, s.lambda)
            } else {
                best
            }
        })
    };
    let (sup_h1, argmax_h1) = argmax(|s| s.h1.norm());
    let (sup_h, argmax_h) = argmax(|s| s.h.norm());
    Ok(VerticalLineSup {
        gamma,
        re_lambda: re,
        sup_h1,
        argmax_h1,
        sup_h,
        argmax_h,
        paper_bound_h1: paper_bound_h1(cfg, gamma),
    })
}
