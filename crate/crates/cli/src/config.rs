//! One JSON document per run. Unknown fields are rejected.

use cwl_core::analysis::{DEFAULT_DENOM_CAP, DEFAULT_TOL};
use cwl_core::galerkin::QuadrupleDocument;
use cwl_core::model::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    W1,
    W2,
}

/// Initial amplitude of one basis mode, given by its label (`n = 0` only for the cosine family).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub field: Field,
    pub mode: usize,
    #[serde(default)]
    pub position: f64,
    #[serde(default)]
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySettings {
    pub alpha1: f64,
    pub alpha2: f64,
    pub tau: f64,
    /// Defaults to the centre of the admissible interval.
    #[serde(default)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub delay: DelaySettings,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub initial: Vec<ModeAmplitude>,
    /// Constant value of the output history on `[−τ, 0)`.
    #[serde(default)]
    pub history: f64,
    /// Keep every k-th sample in the exported trace.
    #[serde(default = "one")]
    pub sample_every: usize,
    /// Fit window for `decay`; defaults to the second half of the horizon.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomQuadrupleSpec {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub quadruple: Option<QuadrupleDocument>,
    #[serde(default)]
    pub random: Option<RandomQuadrupleSpec>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub re: (f64, f64),
    pub n_re: usize,
    pub im: (f64, f64),
    pub n_im: usize,
}

impl LambdaGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let axis = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            if n == 1 {
                vec![a]
            } else {
                (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
            }
        };
        let res = axis(self.re, self.n_re);
        let ims = axis(self.im, self.n_im);
        res.iter().flat_map(|&r| ims.iter().map(move |&i| (r, i))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupSettings {
    pub gamma: f64,
    pub omega_max: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: Option<LambdaGrid>,
    /// Explicit `[re, im]` points, appended after the grid.
    #[serde(default)]
    pub points: Vec<(f64, f64)>,
    #[serde(default)]
    pub sup: Option<SupSettings>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilityConfig {
    pub model: ModelConfig,
    /// Horizon; defaults to 1.5 times the Ingham time.
    #[serde(default, rename = "T")]
    pub t: Option<f64>,
    pub max_mode: usize,
    pub draws: usize,
    #[serde(default = "two")]
    pub batches: usize,
    #[serde(default = "default_scan")]
    pub n_scan: usize,
    #[serde(default)]
    pub seed: u64,
}

fn two() -> usize {
    2
}

fn default_scan() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionConfig {
    pub xi: f64,
    #[serde(default = "default_cap")]
    pub denom_cap: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_cap() -> u64 {
    DEFAULT_DENOM_CAP
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugacyConfig {
    #[serde(default)]
    pub seed: u64,
    /// Number of random quadruples.
    #[serde(default)]
    pub quadruples: usize,
    #[serde(default)]
    pub random: Option<RandomQuadrupleSpec>,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    /// `[re, im]` points at which the three transfer forms are compared.
    #[serde(default)]
    pub lambdas: Vec<(f64, f64)>,
}

pub fn parse<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.display().to_string(), source })
}
