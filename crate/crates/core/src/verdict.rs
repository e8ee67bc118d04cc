//! Membership in the classes C, C₀ and D of ball metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curvature::{boundary_ii_eig, warped_curvature, CurvatureField};
use crate::error::{GeomError, Result};
use crate::metric::WarpedBallMetric;

/// Positive Ricci with strictly convex boundary (`C`), positive Ricci with
/// convex boundary (`C0`), non-negative Ricci with strictly convex boundary (`D`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricClass {
    C,
    C0,
    D,
}

impl fmt::Display for MetricClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricClass::C => "C",
            MetricClass::C0 => "C0",
            MetricClass::D => "D",
        })
    }
}

impl FromStr for MetricClass {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" => Ok(MetricClass::C),
            "C0" | "c0" => Ok(MetricClass::C0),
            "D" | "d" => Ok(MetricClass::D),
            o => Err(GeomError::Parameter(format!("unknown class `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub class_queried: MetricClass,
    pub min_ricci_eig: f64,
    /// Boundary second fundamental form eigenvalue relative to the slice metric.
    pub max_ii_eig: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Largest absolute sectional curvature over the field.
pub fn curvature_scale(c: &CurvatureField) -> f64 {
    c.k_mixed
        .iter()
        .flatten()
        .chain(c.k_tan.iter())
        .fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Default verdict tolerance `1e-7·max(1, curvature scale)`.
pub fn default_tolerance(c: &CurvatureField) -> f64 {
    1e-7 * curvature_scale(c).max(1.0)
}

pub fn decide(class: MetricClass, min_ricci: f64, max_ii: f64, tol: f64) -> bool {
    match class {
        MetricClass::C => min_ricci > tol && max_ii < -tol,
        MetricClass::C0 => min_ricci > tol && max_ii <= tol,
        MetricClass::D => min_ricci >= -tol && max_ii < -tol,
    }
}

/// Verdict from precomputed curvature. NaN inputs never pass.
pub fn verdict_from(class: MetricClass, min_ricci: f64, max_ii: f64, tol: f64) -> MembershipVerdict {
    MembershipVerdict { class_queried: class, min_ricci_eig: min_ricci, max_ii_eig: max_ii, tol,
                        pass: decide(class, min_ricci, max_ii, tol) }
}

/// Check `m` against `class`; `tol = None` uses [`default_tolerance`].
///
/// Failures of the curvature engine produce a failing verdict with NaN
/// entries rather than an error.
pub fn check_membership(m: &WarpedBallMetric, class: MetricClass, tol: Option<f64>) -> MembershipVerdict {
    let field = warped_curvature(m);
    let ii = boundary_ii_eig(m);
    match (field, ii) {
        (Ok(f), Ok(ii)) => {
            let tol = tol.unwrap_or_else(|| default_tolerance(&f));
            verdict_from(class, f.min_ricci_eig, ii, tol)
        }
        _ => verdict_from(class, f64::NAN, f64::NAN, tol.unwrap_or(f64::NAN)),
    }
}
