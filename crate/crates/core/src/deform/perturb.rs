use serde::{Deserialize, Serialize};

use crate::curvature::boundary_ii_eig;
use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::metric::WarpedBallMetric;
use crate::verdict::{check_membership, MetricClass};

/// `β(r) = (r/r0)·exp(1/((r/r0)² − 1))` on `(−r0, r0)`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub r0: f64,
}

impl BumpFunction {
    pub fn new(r0: f64) -> Result<Self> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(GeomError::Parameter(format!("bump half-width {r0} must be positive")));
        }
        Ok(BumpFunction { r0 })
    }

    pub fn jet(&self, r: f64) -> Jet {
        let x = r / self.r0;
        if x.abs() >= 1.0 {
            return Jet::constant(0.0);
        }
        let xj = Jet::variable(r) * (1.0 / self.r0);
        let e = (Jet::constant(1.0) / (xj * xj - 1.0)).exp();
        xj * e
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value()
    }

    /// `β'(0) = e⁻¹/r0`.
    pub fn slope_at_zero(&self) -> f64 {
        (-1.0f64).exp() / self.r0
    }

    /// `max(sup|β|, sup|β'|, sup|β''|)` on a fine sample.
    pub fn c2_norm(&self) -> f64 {
        let n = 4001;
        (0..n)
            .map(|k| -self.r0 + 2.0 * self.r0 * k as f64 / (n - 1) as f64)
            .map(|r| {
                let j = self.jet(r);
                j.value().abs().max(j.d(1).abs()).max(j.d(2).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Tolerance on the boundary form eigenvalue for "totally geodesic".
const GEODESIC_TOL: f64 = 1e-6;

fn perturbed(m: &WarpedBallMetric, coeff: f64, r0: f64) -> Result<WarpedBallMetric> {
    if m.doubled || m.grid.r_max.abs() > 1e-12 {
        return Err(GeomError::Precondition("perturbation acts on a ball with boundary at r = 0".into()));
    }
    if !(r0 > 0.0) || r0 >= -m.grid.r_min {
        return Err(GeomError::Parameter(format!("r0 = {r0} outside (0, {})", -m.grid.r_min)));
    }
    let ii = boundary_ii_eig(m)?;
    if ii.abs() > GEODESIC_TOL {
        return Err(GeomError::Precondition(format!("boundary not totally geodesic (II eigenvalue {ii})")));
    }
    if coeff == 0.0 {
        return Ok(m.clone());
    }
    let bump = BumpFunction::new(r0)?;
    let mut w = m.w.clone();
    for (i, wi) in w.iter_mut().enumerate() {
        let f = 1.0 + coeff * bump.value(m.grid.r(i));
        if !(f > 0.0) {
            return Err(GeomError::Parameter(format!("eta = {coeff} makes the slice metric degenerate")));
        }
        *wi *= f.sqrt();
    }
    WarpedBallMetric::new(m.grid, w, m.breaks.clone(), false)
}

/// Slice metric `(1 + η·β(r))·gʳ`; the new boundary form is `−½ηβ'(0)·g⁰`.
pub fn boundary_perturb(m: &WarpedBallMetric, eta: f64, r0: f64) -> Result<WarpedBallMetric> {
    if !(eta >= 0.0) {
        return Err(GeomError::Parameter(format!("eta = {eta} must be non-negative")));
    }
    perturbed(m, eta, r0)
}

/// Halve `eta` until the perturbed metric passes class C. Returns the metric
/// and the `eta` used.
pub fn boundary_perturb_auto(m: &WarpedBallMetric, eta: f64, r0: f64, tol: Option<f64>)
                             -> Result<(WarpedBallMetric, f64)> {
    if !(eta > 0.0) {
        return Err(GeomError::Parameter(format!("eta = {eta} must be positive")));
    }
    let mut e = eta;
    for _ in 0..30 {
        let p = boundary_perturb(m, e, r0)?;
        if check_membership(&p, MetricClass::C, tol).pass {
            return Ok((p, e));
        }
        e *= 0.5;
    }
    Err(GeomError::Verdict { stage: "perturb".into(), param: e,
                             detail: "no eta keeps positive Ricci and convex boundary".into() })
}

/// `(1 + (1 − s)·η·β(r))·gʳ` for `s ∈ [0, 1]`.
pub fn scaled_perturb_path(base: &WarpedBallMetric, eta: f64, r0: f64, s: f64) -> Result<WarpedBallMetric> {
    if !(0.0..=1.0).contains(&s) {
        return Err(GeomError::Parameter(format!("path parameter {s} outside [0, 1]")));
    }
    boundary_perturb(base, (1.0 - s) * eta, r0)
}

/// Shift amount along the reconnecting path: zero, then a linear ramp
/// over `[1 − 2δ₁, 1 − δ₁)`, then `δ₀`.
pub fn delta_schedule(s: f64, delta0: f64, delta1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(GeomError::Parameter(format!("s = {s} outside [0, 1]")));
    }
    if !(delta1 > 0.0 && delta1 < 0.5) {
        return Err(GeomError::Parameter(format!("delta1 = {delta1} outside (0, 1/2)")));
    }
    if !(delta0 > 0.0) {
        return Err(GeomError::Parameter(format!("delta0 = {delta0} must be positive")));
    }
    let a = 1.0 - 2.0 * delta1;
    Ok(if s < a {
        0.0
    } else if s < 1.0 - delta1 {
        (s - a) / delta1 * delta0
    } else {
        delta0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_warped, Profile};

    #[test]
    fn bump_shape() {
        let b = BumpFunction::new(0.2).unwrap();
        assert!((b.slope_at_zero() - 1.8393972058572117).abs() < 1e-12);
        assert!((b.jet(0.0).d(1) - b.slope_at_zero()).abs() < 1e-12);
        assert_eq!(b.value(0.2), 0.0);
        assert_eq!(b.value(-0.25), 0.0);
        assert!(b.value(-0.1) < 0.0 && b.value(0.1) > 0.0);
        assert!(b.c2_norm().is_finite());
    }

    #[test]
    fn hemisphere_perturbation_bends_boundary() {
        let h = build_warped(&Profile::Hemisphere, 1025).unwrap();
        let p = boundary_perturb(&h, 0.01, 0.2).unwrap();
        let ii = boundary_ii_eig(&p).unwrap();
        assert!((ii + 0.5 * 0.01 * 1.8393972058572117).abs() < 1e-8, "{ii}");
        assert!(check_membership(&p, MetricClass::C, None).pass);
        assert_eq!(boundary_perturb(&h, 0.0, 0.2).unwrap(), h);
        assert!(boundary_perturb(&h, -0.1, 0.2).is_err());

        let half = scaled_perturb_path(&h, 0.01, 0.2, 0.5).unwrap();
        assert!((boundary_ii_eig(&half).unwrap() + 0.25 * 0.01 * 1.8393972058572117).abs() < 1e-8);
        assert_eq!(scaled_perturb_path(&h, 0.01, 0.2, 1.0).unwrap(), h);
        assert_eq!(scaled_perturb_path(&h, 0.01, 0.2, 0.0).unwrap(), p);
        assert!(scaled_perturb_path(&h, 0.01, 0.2, 1.5).is_err());
    }

    #[test]
    fn convex_boundary_rejected() {
        let f = build_warped(&Profile::FlatBall(1.0), 257).unwrap();
        assert!(boundary_perturb(&f, 0.01, 0.2).is_err());
    }

    #[test]
    fn schedule_branches() {
        assert_eq!(delta_schedule(0.5, 0.03, 0.1).unwrap(), 0.0);
        assert!((delta_schedule(0.85, 0.03, 0.1).unwrap() - 0.015).abs() < 1e-15);
        assert_eq!(delta_schedule(1.0, 0.03, 0.1).unwrap(), 0.03);
        assert!(delta_schedule(1.0, 0.03, 0.6).is_err());
        assert!(delta_schedule(1.1, 0.03, 0.1).is_err());
    }
}
