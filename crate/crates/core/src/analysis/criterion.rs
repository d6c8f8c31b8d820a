use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_DENOM_CAP: u64 = 10_000;

/// Rational detection of the control point and the odd-numerator rule for the
/// mixed example, reported next to the modal infimum `min |cos(nπξ)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub xi: f64,
    pub rational: bool,
    pub p: u64,
    pub q: u64,
    pub paper_rule: bool,
    pub modal_infimum: f64,
    pub argmin_n: u64,
}

/// First continued-fraction convergent `p/q` with `q ≤ denom_cap` and `|ξ − p/q| ≤ tol`.
fn detect_rational(xi: f64, denom_cap: u64, tol: f64) -> Option<(u64, u64)> {
    let (mut p_prev, mut p) = (1u64, xi.floor() as u64);
    let (mut q_prev, mut q) = (0u64, 1u64);
    let mut rem = xi - xi.floor();
    loop {
        if (xi - p as f64 / q as f64).abs() <= tol {
            return Some((p, q));
        }
        if rem == 0.0 {
            return None;
        }
        let x = 1.0 / rem;
        let a = x.floor();
        rem = x - a;
        if a > u64::MAX as f64 {
            return None;
        }
        let a = a as u64;
        let q_next = a.checked_mul(q)?.checked_add(q_prev)?;
        if q_next > denom_cap {
            return None;
        }
        let p_next = a.checked_mul(p)?.checked_add(p_prev)?;
        (p_prev, p, q_prev, q) = (p, p_next, q, q_next);
    }
}

pub fn stability_criterion(xi: f64, denom_cap: u64, tol: f64) -> Result<CriterionVerdict, AnalysisError> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(AnalysisError::InvalidArgument(format!("xi = {xi} must lie in (0, 1)")));
    }
    if denom_cap < 2 || !(tol > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need denom_cap >= 2 and tol > 0, got {denom_cap} and {tol}"
        )));
    }
    let found = detect_rational(xi, denom_cap, tol);
    let (p, q) = found.unwrap_or((0, 0));
    let rational = found.is_some();
    let n_scan = 10 * if rational { q } else { denom_cap };
    let (modal_infimum, argmin_n) = (1..=n_scan)
        .map(|n| ((n as f64 * std::f64::consts::PI * xi).cos().abs(), n))
        .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best });
    Ok(CriterionVerdict { xi, rational, p, q, paper_rule: rational && p % 2 == 1, modal_infimum, argmin_n })
}
