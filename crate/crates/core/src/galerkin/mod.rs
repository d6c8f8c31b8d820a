//! Finite-dimensional realization of the abstract coupled system
//!
//! ```text
//! ẅ1 + A1 w1 + B B* ẇ1 + C ẇ2 = 0
//! ẅ2 + A2 w2 − C* ẇ1       = 0
//! ```
//!
//! together with its transformed form `Ẅ + A W + B0 B0* Ẇ = 0`, the change of
//! variables `P` linking the two, the coupling bound δ, and the transfer
//! function computed three independent ways.

mod delta;
mod operators;
mod quadruple;
mod transfer;

use std::fmt;

pub use delta::{estimate_delta, DeltaEstimate};
pub use operators::{
    build_block_system, build_generators, build_transform, conjugation_residual, BlockSystem,
    FirstOrderGenerator, GeneratorKind, TransformPair,
};
pub use quadruple::{
    validate_quadruple, Check, Dims, OperatorQuadruple, QuadrupleDocument, ValidationReport,
    STRUCTURE_TOL,
};
pub use transfer::{gamma_operator, transfer_resolvent_pair, TransferTriple, RESOLVENT_AGREEMENT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixName {
    A1,
    A2,
    B,
    C,
}

impl fmt::Display for MatrixName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixName::A1 => "A1",
            MatrixName::A2 => "A2",
            MatrixName::B => "B",
            MatrixName::C => "C",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GalerkinError {
    #[error("dimension mismatch in {name}: expected {expected:?}, found {found:?}")]
    DimensionMismatch { name: MatrixName, expected: (usize, usize), found: (usize, usize) },
    #[error("{name} is not symmetric (relative residual {residual:.3e})")]
    NotSymmetric { name: MatrixName, residual: f64 },
    #[error("{name} is not positive definite (smallest eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveDefinite { name: MatrixName, min_eigenvalue: f64 },
    #[error("{0} contains a non-finite entry")]
    NonFinite(MatrixName),
    #[error("eigendecomposition of {0} did not converge")]
    SqrtFailure(MatrixName),
    #[error("coupling pencil is singular: right-hand quadratic form is not positive definite")]
    SingularPencil,
    #[error("resolvent solve at lambda = {lambda} left relative residual {residual:.3e}")]
    NearSingularResolvent { lambda: num_complex::Complex64, residual: f64 },
    #[error("transfer functions require Re lambda > 0, got {0}")]
    InvalidFrequency(num_complex::Complex64),
    #[error("malformed quadruple document: {0}")]
    Json(#[from] serde_json::Error),
}
