//! Galerkin truncations of the two one-dimensional coupled string examples and
//! the modal solutions of their conservative adjoint systems.
//!
//! Both fields live on `(0, 1)` with `A_i = −d²/dx² (+ I)`, the control is a
//! point actuator `B k = k δ_ξ` and the coupling is `C = β d/dx`.
//!
//! * [`ModelKind::Dirichlet`]: both fields clamped at both ends. The basis is
//!   `√2 sin(nπx)`, `n = 1..N`, for both fields. `C` does not preserve the sine
//!   space and is replaced by its L² projection.
//! * [`ModelKind::Mixed`]: `w1` has Neumann ends (basis `1, √2 cos(nπx)`,
//!   `n = 0..N`), `w2` is clamped (basis `√2 sin(nπx)`, `n = 1..N`) and both
//!   operators carry the `+I` shift. Here `C` maps sine mode `n` exactly onto
//!   cosine mode `n` with weight `βnπ`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::galerkin::OperatorQuadruple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dirichlet,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub beta: f64,
    pub xi: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("mode (n = {n}, branch = {branch:?}) carries lambda = {found}, expected {expected}")]
    FrequencyMismatch { n: i64, branch: Option<Branch>, expected: Complex64, found: Complex64 },
}

impl ModelConfig {
    pub fn new(kind: ModelKind, beta: f64, xi: f64, n: usize) -> Result<Self, ModelError> {
        let cfg = Self { kind, beta, xi, n };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `0 < ξ < 1`, `β ≥ 0` finite and `N ≥ 2`.
    ///
    /// `β = 0` is accepted so the decoupled limit can be examined; the coupling
    /// bound of the stability theory additionally needs `β < 1`, see
    /// [`ModelConfig::coupling_bound_holds`].
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(ModelError::InvalidConfig(format!("xi = {} must lie in (0, 1)", self.xi)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(ModelError::InvalidConfig(format!("beta = {} must be finite and >= 0", self.beta)));
        }
        if self.n < 2 {
            return Err(ModelError::InvalidConfig(format!("N = {} must be at least 2", self.n)));
        }
        Ok(())
    }

    /// `β < 1`, under which both examples satisfy the coupling bound with δ = β/2.
    pub fn coupling_bound_holds(&self) -> bool {
        self.beta < 1.0
    }

    fn root(&self) -> f64 {
        (self.beta * self.beta + 4.0).sqrt()
    }
}

/// Orthonormal one-dimensional families on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// `√2 sin(nπx)`, `n = 1..=N`.
    Sine { n: usize },
    /// `1, √2 cos(nπx)`, `n = 0..=N`.
    CosineWithConstant { n: usize },
}

impl Basis {
    pub fn len(&self) -> usize {
        match *self {
            Basis::Sine { n } => n,
            Basis::CosineWithConstant { n } => n + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mode label of coefficient slot `k`.
    pub fn mode(&self, k: usize) -> usize {
        match self {
            Basis::Sine { .. } => k + 1,
            Basis::CosineWithConstant { .. } => k,
        }
    }

    /// Coefficient slot of mode label `n`, if present.
    pub fn slot(&self, n: usize) -> Option<usize> {
        match *self {
            Basis::Sine { n: len } => (1..=len).contains(&n).then(|| n - 1),
            Basis::CosineWithConstant { n: len } => (n <= len).then_some(n),
        }
    }

    pub fn eval(&self, k: usize, x: f64) -> f64 {
        let n = self.mode(k) as f64;
        match self {
            Basis::Sine { .. } => SQRT_2 * (n * PI * x).sin(),
            Basis::CosineWithConstant { .. } if k == 0 => 1.0,
            Basis::CosineWithConstant { .. } => SQRT_2 * (n * PI * x).cos(),
        }
    }

    /// Eigenvalue of `−d²/dx²` on slot `k`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let n = self.mode(k) as f64;
        (n * PI).powi(2)
    }

    pub fn values_at(&self, x: f64) -> DVector<f64> {
        DVector::from_fn(self.len(), |k, _| self.eval(k, x))
    }
}

#[derive(Debug, Clone)]
pub struct ModalModel {
    pub config: ModelConfig,
    pub quad: OperatorQuadruple,
    /// Basis values at ξ: the row of `B*`.
    pub eval_b: DVector<f64>,
    pub basis1: Basis,
    pub basis2: Basis,
    /// True when `C` is represented exactly in the bases (mixed example).
    pub coupling_exact: bool,
}

/// `c_mn = ⟨√2 sin(mπ·), β d/dx √2 sin(nπ·)⟩ = 4βmn / (m² − n²)` for `m + n` odd, else 0.
fn projected_derivative(beta: f64, m: usize, n: usize) -> f64 {
    if (m + n).is_multiple_of(2) {
        return 0.0;
    }
    let (m, n) = (m as f64, n as f64);
    4.0 * beta * m * n / (m * m - n * n)
}

pub fn assemble_model(cfg: &ModelConfig) -> Result<ModalModel, ModelError> {
    cfg.validate()?;
    let n = cfg.n;
    let (basis1, basis2, shift) = match cfg.kind {
        ModelKind::Dirichlet => (Basis::Sine { n }, Basis::Sine { n }, 0.0),
        ModelKind::Mixed => (Basis::CosineWithConstant { n }, Basis::Sine { n }, 1.0),
    };
    let stiffness =
        |b: &Basis| DMatrix::from_diagonal(&DVector::from_fn(b.len(), |k, _| b.laplacian_eigenvalue(k) + shift));
    let a1 = stiffness(&basis1);
    let a2 = stiffness(&basis2);
    let eval_b = point_control_vector(cfg)?;

    let c = match cfg.kind {
        ModelKind::Dirichlet => {
            DMatrix::from_fn(n, n, |i, j| projected_derivative(cfg.beta, basis1.mode(i), basis2.mode(j)))
        }
        ModelKind::Mixed => {
            let mut c = DMatrix::zeros(basis1.len(), basis2.len());
            for j in 0..basis2.len() {
                let mode = basis2.mode(j);
                c[(basis1.slot(mode).expect("cosine family covers sine labels"), j)] = cfg.beta * mode as f64 * PI;
            }
            c
        }
    };

    let b = DMatrix::from_column_slice(eval_b.len(), 1, eval_b.as_slice());
    let quad = OperatorQuadruple::new(a1, a2, b, c).expect("model blocks are assembled with matching shapes");
    Ok(ModalModel {
        config: *cfg,
        quad,
        eval_b,
        basis1,
        basis2,
        coupling_exact: cfg.kind == ModelKind::Mixed,
    })
}

/// Values of the `w1` basis at the control point.
pub fn point_control_vector(cfg: &ModelConfig) -> Result<DVector<f64>, ModelError> {
    cfg.validate()?;
    let basis = match cfg.kind {
        ModelKind::Dirichlet => Basis::Sine { n: cfg.n },
        ModelKind::Mixed => Basis::CosineWithConstant { n: cfg.n },
    };
    Ok(basis.values_at(cfg.xi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// One frequency of the conservative adjoint family, indexed by `n ∈ ℤ*` and,
/// for the mixed example, a `±` branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalFrequency {
    pub n: i64,
    pub branch: Option<Branch>,
    pub lambda: Complex64,
}

/// Closed-form adjoint frequency, `None` if `(n, branch)` is not a valid index
/// for the example (`n = 0`, or a branch present/absent where it should not be).
pub fn adjoint_frequency(cfg: &ModelConfig, n: i64, branch: Option<Branch>) -> Option<Complex64> {
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let beta = cfg.beta;
    let s = beta * beta + 4.0;
    match (cfg.kind, branch) {
        (ModelKind::Dirichlet, None) => Some(Complex64::new(0.0, 2.0 * nf * PI / s.sqrt())),
        (ModelKind::Mixed, Some(br)) => {
            let centre = 2.0 * nf * PI * beta / s;
            let radius = (4.0 * nf * nf * PI * PI * beta * beta / (s * s) + (4.0 + 4.0 * nf * nf * PI * PI) / s).sqrt();
            Some(Complex64::new(0.0, centre + br.sign() * radius))
        }
        _ => None,
    }
}

/// All adjoint frequencies with `1 ≤ |n| ≤ N`.
pub fn adjoint_frequencies(cfg: &ModelConfig) -> Vec<ModalFrequency> {
    let n = cfg.n as i64;
    let labels = (-n..=n).filter(|&k| k != 0);
    let branches: &[Option<Branch>] = match cfg.kind {
        ModelKind::Dirichlet => &[None],
        ModelKind::Mixed => &[Some(Branch::Plus), Some(Branch::Minus)],
    };
    labels
        .flat_map(|k| {
            branches.iter().map(move |&br| ModalFrequency {
                n: k,
                branch: br,
                lambda: adjoint_frequency(cfg, k, br).expect("labels are valid by construction"),
            })
        })
        .collect()
}

/// Factor multiplying mode `n` in the velocity trace at ξ.
pub fn trace_coefficient(cfg: &ModelConfig, n: i64) -> f64 {
    let nf = n as f64;
    match cfg.kind {
        ModelKind::Dirichlet => (nf * cfg.beta * PI * cfg.xi / cfg.root()).cos() * (nf * PI * cfg.xi).sin(),
        ModelKind::Mixed => (nf * PI * cfg.xi).cos(),
    }
}

/// Exact eigenfrequencies of the assembled mixed model with `B = 0`.
///
/// The coupling pairs cosine mode `n` with sine mode `n`, so each pair solves
/// `(λ² + s)² + (βnπλ)² = 0` with `s = (nπ)² + 1`, i.e.
/// `λ = i(±βnπ/2 ± sqrt((βnπ/2)² + s))`; the constant mode contributes `±i`.
/// Returns `None` for the Dirichlet example, whose projected coupling is dense.
pub fn coupled_mode_frequencies(cfg: &ModelConfig) -> Option<Vec<Complex64>> {
    if cfg.kind != ModelKind::Mixed {
        return None;
    }
    let mut out = vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
    for n in 1..=cfg.n {
        let half = cfg.beta * n as f64 * PI / 2.0;
        let s = (n as f64 * PI).powi(2) + 1.0;
        let r = (half * half + s).sqrt();
        for sign in [1.0, -1.0] {
            out.push(Complex64::new(0.0, sign * half + r));
            out.push(Complex64::new(0.0, sign * half - r));
        }
    }
    out.sort_by(|a, b| a.im.total_cmp(&b.im));
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub n: i64,
    pub branch: Option<Branch>,
    pub lambda: Complex64,
    pub a: Complex64,
}

/// Finite superposition of adjoint modes `Σ aₙ e^{λₙ t} (mode shape)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    pub modes: Vec<Mode>,
}

impl ModalState {
    /// Builds a state from `(n, branch, a)` triples, filling in the frequencies.
    pub fn new(
        cfg: &ModelConfig,
        entries: impl IntoIterator<Item = (i64, Option<Branch>, Complex64)>,
    ) -> Result<Self, ModelError> {
        let modes = entries
            .into_iter()
            .map(|(n, branch, a)| {
                adjoint_frequency(cfg, n, branch)
                    .map(|lambda| Mode { n, branch, lambda, a })
                    .ok_or(ModelError::InvalidConfig(format!("no adjoint mode (n = {n}, branch = {branch:?})")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { modes })
    }

    /// Complex Gaussian coefficients on every mode with `1 ≤ |n| ≤ max_n`.
    pub fn random<R: Rng + ?Sized>(cfg: &ModelConfig, max_n: usize, rng: &mut R) -> Self {
        let mut cfg = *cfg;
        cfg.n = max_n;
        let modes = adjoint_frequencies(&cfg)
            .into_iter()
            .map(|f| Mode {
                n: f.n,
                branch: f.branch,
                lambda: f.lambda,
                a: Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            })
            .collect();
        Self { modes }
    }

    /// Checks every mode's frequency against the closed form for `cfg`.
    pub fn check_frequencies(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        for m in &self.modes {
            let expected = adjoint_frequency(cfg, m.n, m.branch).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            if !((m.lambda - expected).norm() <= 1e-12 * (1.0 + expected.norm())) {
                return Err(ModelError::FrequencyMismatch { n: m.n, branch: m.branch, expected, found: m.lambda });
            }
        }
        Ok(())
    }
}

/// Velocity trace `∂φ/∂t(t, ξ) = Σ λₙ aₙ e^{λₙ t} cₙ` of the conservative adjoint solution.
pub fn adjoint_trace(cfg: &ModelConfig, state: &ModalState, t: f64) -> Result<Complex64, ModelError> {
    state.check_frequencies(cfg)?;
    Ok(state
        .modes
        .iter()
        .map(|m| m.lambda * m.a * (m.lambda * t).exp() * trace_coefficient(cfg, m.n))
        .sum())
}
