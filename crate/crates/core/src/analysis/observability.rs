use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::{trace_coefficient, ModalState, ModelConfig, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InghamResult {
    #[serde(rename = "T")]
    pub t: f64,
    /// `∫₀ᵀ |φ_t(t, ξ)|² dt`.
    pub integral: f64,
    /// `Σ |λₙ|² |aₙ|² cₙ²`.
    pub modal_sum: f64,
    pub ratio: f64,
}

/// Horizon beyond which the Ingham estimate holds for the example.
pub fn ingham_threshold(cfg: &ModelConfig) -> f64 {
    let s = (cfg.beta * cfg.beta + 4.0).sqrt();
    match cfg.kind {
        ModelKind::Dirichlet => s,
        ModelKind::Mixed => (cfg.beta * cfg.beta + 4.0) / (cfg.beta + s),
    }
}

/// `∫₀ᵀ e^{zt} dt`, with a series near `z = 0`.
fn exp_integral(z: Complex64, t: f64) -> Complex64 {
    let zt = z * t;
    if zt.norm() < 1e-4 {
        t * (1.0 + zt / 2.0 + zt * zt / 6.0 + zt * zt * zt / 24.0)
    } else {
        (zt.exp() - 1.0) / z
    }
}

/// Observed energy of the adjoint trace over `[0, T]`, summed exactly over mode pairs.
pub fn ingham_ratio(cfg: &ModelConfig, state: &ModalState, t: f64) -> Result<InghamResult, AnalysisError> {
    cfg.validate()?;
    state.check_frequencies(cfg)?;
    let threshold = ingham_threshold(cfg);
    if !(t > threshold) {
        return Err(AnalysisError::BelowInghamTime { t, threshold });
    }
    let weights: Vec<Complex64> =
        state.modes.iter().map(|m| m.lambda * m.a * trace_coefficient(cfg, m.n)).collect();
    let mut integral = Complex64::new(0.0, 0.0);
    for (i, mi) in state.modes.iter().enumerate() {
        for (j, mj) in state.modes.iter().enumerate() {
            integral += weights[i] * weights[j].conj() * exp_integral(mi.lambda + mj.lambda.conj(), t);
        }
    }
    let integral = integral.re.max(0.0);
    let modal_sum: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
    Ok(InghamResult { t, integral, modal_sum, ratio: integral / modal_sum })
}

/// `min_{1 ≤ n ≤ N_scan} |cₙ|` and the first index attaining it.
pub fn modal_infimum(cfg: &ModelConfig, n_scan: usize) -> (f64, usize) {
    (1..=n_scan.max(1))
        .map(|n| (trace_coefficient(cfg, n as i64).abs(), n))
        .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
}
