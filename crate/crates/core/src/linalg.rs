//! Small dense helpers shared by the operator builders and the simulators.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Principal square root and inverse square root of a symmetric
/// positive-definite matrix, obtained from one eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpdRoots {
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Eigenvalues of a symmetric matrix, `None` if the QR iteration stalls.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Option<nalgebra::SymmetricEigen<f64, nalgebra::Dyn>> {
    m.clone().try_symmetric_eigen(f64::EPSILON, 10_000)
}

pub(crate) fn min_max_eigenvalues(m: &DMatrix<f64>) -> Option<(f64, f64)> {
    let eig = symmetric_eigen(m)?;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((min, max))
}

/// Returns `None` when the decomposition fails or the matrix is not positive definite.
pub fn spd_roots(m: &DMatrix<f64>) -> Option<SpdRoots> {
    let eig = symmetric_eigen(m)?;
    let vals = &eig.eigenvalues;
    if vals.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let vecs = &eig.eigenvectors;
    let scaled = |f: &dyn Fn(f64) -> f64| {
        let mut s = vecs.clone();
        for (j, mut col) in s.column_iter_mut().enumerate() {
            col *= f(vals[j]);
        }
        let out = &s * vecs.transpose();
        // Symmetrize away the rounding asymmetry of V·D·Vᵀ.
        (&out + out.transpose()) * 0.5
    };
    Some(SpdRoots {
        sqrt: scaled(&|v| v.sqrt()),
        inv_sqrt: scaled(&|v| 1.0 / v.sqrt()),
        min_eigenvalue: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max_eigenvalue: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// ‖M − Mᵀ‖_F / ‖M‖_F (zero for the zero matrix).
pub fn symmetry_residual(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub(crate) fn complex_identity(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

/// Largest entrywise modulus.
pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
