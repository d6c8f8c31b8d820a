#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical laboratory for coupled second-order systems under delayed pointwise damping.

pub mod analysis;
pub mod delay;
pub mod galerkin;
pub mod linalg;
pub mod model;

pub use analysis::AnalysisError;
pub use delay::{DelayError, DelayParams, EnergyTrace};
pub use galerkin::{GalerkinError, OperatorQuadruple};
pub use model::{ModalModel, ModelConfig, ModelError, ModelKind};
