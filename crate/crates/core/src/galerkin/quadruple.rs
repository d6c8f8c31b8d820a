use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GalerkinError, MatrixName};
use crate::linalg::{self, SpdRoots};

/// Relative tolerance for the symmetry and positivity checks on `A1`, `A2`.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Finite-dimensional stand-ins for the operators `(A1, A2, B, C)`.
///
/// `a1` is `n1×n1`, `a2` is `n2×n2`, `b` is `n1×m` (control to state) and
/// `c` is `n1×n2` (velocity coupling of the second field into the first).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorQuadruple {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
}

impl Dims {
    /// Dimension of the second-order state `(w1, w2)`.
    pub fn state(&self) -> usize {
        self.n1 + self.n2
    }

    /// Dimension of the first-order phase space `(w1, w2, ẇ1, ẇ2)`.
    pub fn phase(&self) -> usize {
        2 * (self.n1 + self.n2)
    }
}

impl OperatorQuadruple {
    /// Checks only that the shapes agree; see [`validate_quadruple`] for the rest.
    pub fn new(
        a1: DMatrix<f64>,
        a2: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
    ) -> Result<Self, GalerkinError> {
        let q = Self { a1, a2, b, c };
        q.check_dims()?;
        Ok(q)
    }

    pub fn dims(&self) -> Dims {
        Dims { n1: self.a1.nrows(), n2: self.a2.nrows(), m: self.b.ncols() }
    }

    fn check_dims(&self) -> Result<(), GalerkinError> {
        let n1 = self.a1.nrows();
        let n2 = self.a2.nrows();
        let expect = |name, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(GalerkinError::DimensionMismatch { name, expected: want, found: got })
            }
        };
        expect(MatrixName::A1, self.a1.shape(), (n1, n1))?;
        expect(MatrixName::A2, self.a2.shape(), (n2, n2))?;
        expect(MatrixName::B, self.b.shape(), (n1, self.b.ncols()))?;
        expect(MatrixName::C, self.c.shape(), (n1, n2))?;
        if n1 == 0 || n2 == 0 {
            return Err(GalerkinError::DimensionMismatch {
                name: if n1 == 0 { MatrixName::A1 } else { MatrixName::A2 },
                expected: (1, 1),
                found: (n1.min(n2), n1.min(n2)),
            });
        }
        Ok(())
    }

    /// `A1^{1/2}` and `A1^{-1/2}`.
    pub fn roots_a1(&self) -> Result<SpdRoots, GalerkinError> {
        linalg::spd_roots(&self.a1).ok_or(GalerkinError::SqrtFailure(MatrixName::A1))
    }

    /// `A2^{1/2}` and `A2^{-1/2}`.
    pub fn roots_a2(&self) -> Result<SpdRoots, GalerkinError> {
        linalg::spd_roots(&self.a2).ok_or(GalerkinError::SqrtFailure(MatrixName::A2))
    }

    /// A seeded random instance: `A_i = G Gᵀ / n + I/2`, Gaussian `B` and `C`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n1: usize, n2: usize, m: usize) -> Self {
        let mut gaussian = |r: usize, c: usize, scale: f64| {
            DMatrix::from_fn(r, c, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
        };
        let spd = |g: DMatrix<f64>| {
            let n = g.nrows();
            &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5
        };
        let a1 = spd(gaussian(n1, n1, 1.0));
        let a2 = spd(gaussian(n2, n2, 1.0));
        let b = gaussian(n1, m, 1.0);
        let c = gaussian(n1, n2, 0.5);
        Self { a1, a2, b, c }
    }

    pub fn from_json_str(s: &str) -> Result<Self, GalerkinError> {
        let doc: QuadrupleDocument = serde_json::from_str(s)?;
        doc.try_into()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&QuadrupleDocument::from(self))
            .expect("finite matrices always serialize")
    }
}

/// On-disk form: `{n1, n2, m, A1: [[…]], A2, B, C}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleDocument {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    #[serde(rename = "A1")]
    pub a1: Vec<Vec<f64>>,
    #[serde(rename = "A2")]
    pub a2: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
}

fn rows_to_matrix(
    name: MatrixName,
    rows: &[Vec<f64>],
    shape: (usize, usize),
) -> Result<DMatrix<f64>, GalerkinError> {
    let (r, c) = shape;
    let found = (rows.len(), rows.first().map_or(0, Vec::len));
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(GalerkinError::DimensionMismatch { name, expected: shape, found });
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(GalerkinError::NonFinite(name));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|row| row.iter().copied().collect()).collect()
}

impl TryFrom<QuadrupleDocument> for OperatorQuadruple {
    type Error = GalerkinError;

    fn try_from(doc: QuadrupleDocument) -> Result<Self, Self::Error> {
        let a1 = rows_to_matrix(MatrixName::A1, &doc.a1, (doc.n1, doc.n1))?;
        let a2 = rows_to_matrix(MatrixName::A2, &doc.a2, (doc.n2, doc.n2))?;
        let b = rows_to_matrix(MatrixName::B, &doc.b, (doc.n1, doc.m))?;
        let c = rows_to_matrix(MatrixName::C, &doc.c, (doc.n1, doc.n2))?;
        OperatorQuadruple::new(a1, a2, b, c)
    }
}

impl From<&OperatorQuadruple> for QuadrupleDocument {
    fn from(q: &OperatorQuadruple) -> Self {
        let d = q.dims();
        Self {
            n1: d.n1,
            n2: d.n2,
            m: d.m,
            a1: matrix_to_rows(&q.a1),
            a2: matrix_to_rows(&q.a2),
            b: matrix_to_rows(&q.b),
            c: matrix_to_rows(&q.c),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub dims: Dims,
    pub checks: Vec<Check>,
    pub min_eigenvalue_a1: f64,
    pub min_eigenvalue_a2: f64,
    /// ‖C·A2^{-1/2}‖₂, finite by the bounded-extension remark.
    pub norm_c_a2_inv_sqrt: f64,
    /// ‖C*·A1^{-1/2}‖₂.
    pub norm_cstar_a1_inv_sqrt: f64,
    /// ‖B*·A1^{-1/2}‖₂, the admissibility constant of the control operator.
    pub norm_bstar_a1_inv_sqrt: f64,
    pub delta_min: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Structural checks of a quadruple. Hard violations are returned as errors;
/// the coupling-bound check on δ is reported but does not fail validation.
pub fn validate_quadruple(q: &OperatorQuadruple) -> Result<ValidationReport, GalerkinError> {
    q.check_dims()?;
    let mut checks = Vec::new();

    let mut min_eigs = [0.0; 2];
    for (k, (name, m)) in [(MatrixName::A1, &q.a1), (MatrixName::A2, &q.a2)].into_iter().enumerate() {
        let residual = linalg::symmetry_residual(m);
        checks.push(Check {
            name: format!("{name} symmetric"),
            passed: residual <= STRUCTURE_TOL,
            value: residual,
            threshold: STRUCTURE_TOL,
        });
        if residual > STRUCTURE_TOL {
            return Err(GalerkinError::NotSymmetric { name, residual });
        }
        let (min, max) = linalg::min_max_eigenvalues(m).ok_or(GalerkinError::SqrtFailure(name))?;
        let floor = STRUCTURE_TOL * max.abs().max(min.abs());
        checks.push(Check {
            name: format!("{name} positive definite"),
            passed: min > floor,
            value: min,
            threshold: floor,
        });
        if !(min > floor) {
            return Err(GalerkinError::NotPositiveDefinite { name, min_eigenvalue: min });
        }
        min_eigs[k] = min;
    }

    let r1 = q.roots_a1()?;
    let r2 = q.roots_a2()?;
    let norm_c_a2_inv_sqrt = linalg::spectral_norm(&(&q.c * &r2.inv_sqrt));
    let norm_cstar_a1_inv_sqrt = linalg::spectral_norm(&(q.c.transpose() * &r1.inv_sqrt));
    let norm_bstar_a1_inv_sqrt = linalg::spectral_norm(&(q.b.transpose() * &r1.inv_sqrt));
    for (name, value) in [
        ("C·A2^{-1/2} bounded", norm_c_a2_inv_sqrt),
        ("C*·A1^{-1/2} bounded", norm_cstar_a1_inv_sqrt),
        ("B*·A1^{-1/2} bounded", norm_bstar_a1_inv_sqrt),
    ] {
        checks.push(Check { name: name.into(), passed: value.is_finite(), value, threshold: f64::INFINITY });
    }

    let delta = super::estimate_delta(q)?;
    checks.push(Check {
        name: "coupling bound delta < 1/2".into(),
        passed: delta.admissible,
        value: delta.delta_min,
        threshold: 0.5,
    });

    Ok(ValidationReport {
        dims: q.dims(),
        checks,
        min_eigenvalue_a1: min_eigs[0],
        min_eigenvalue_a2: min_eigs[1],
        norm_c_a2_inv_sqrt,
        norm_cstar_a1_inv_sqrt,
        norm_bstar_a1_inv_sqrt,
        delta_min: delta.delta_min,
    })
}
