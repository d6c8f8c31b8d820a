//! Transfer functions of the two string examples, observability functionals
//! of their conservative adjoints, and the rational-point criterion.

mod criterion;
mod observability;
mod transfer;

use num_complex::Complex64;

use crate::model::ModelError;

pub use criterion::{stability_criterion, CriterionVerdict, DEFAULT_DENOM_CAP, DEFAULT_TOL};
pub use observability::{ingham_ratio, ingham_threshold, modal_infimum, InghamResult};
pub use transfer::{
    characteristic_roots, paper_bound_h1, transfer_closed_form, transfer_numeric_bvp, transfer_scan,
    vertical_line_sup, write_transfer_csv, TransferMethod, TransferSample, VerticalLineSup, MATCHING_COND_LIMIT,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("characteristic roots coincide at lambda = {0}")]
    CoincidentRoots(Complex64),
    #[error("closed form overflows at lambda = {0}")]
    OverflowGuard(Complex64),
    #[error("matching system at lambda = {lambda} has condition number {cond:.3e}")]
    SingularMatching { lambda: Complex64, cond: f64 },
    #[error("transfer functions require Re lambda > 0, got {0}")]
    InvalidFrequency(Complex64),
    #[error("horizon T = {t} must exceed the Ingham time {threshold}")]
    BelowInghamTime { t: f64, threshold: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
