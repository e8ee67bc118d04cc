use serde::{Deserialize, Serialize};

use crate::curvature::{boundary_ii_eig, warped_curvature};
use crate::error::{GeomError, Result};
use crate::grid::RadialGrid;
use crate::line::Side;
use crate::metric::WarpedBallMetric;
use crate::stencil::integrate;

/// `f(r) = exp(−1/(r + ε)²)` on `(−ε, 0]`, zero for `r <= −ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollarFunction {
    pub epsilon: f64,
}

impl CollarFunction {
    /// `f'' > 0` on the whole collar needs `ε² < 2/3`.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || epsilon * epsilon >= 2.0 / 3.0 {
            return Err(GeomError::Parameter(format!("collar width {epsilon} outside (0, sqrt(2/3))")));
        }
        Ok(CollarFunction { epsilon })
    }

    fn u(&self, r: f64) -> Option<f64> {
        let u = r + self.epsilon;
        (u > 0.0).then_some(u)
    }

    pub fn f(&self, r: f64) -> f64 {
        self.u(r).map_or(0.0, |u| (-1.0 / (u * u)).exp())
    }

    pub fn f1(&self, r: f64) -> f64 {
        self.u(r).map_or(0.0, |u| 2.0 * self.f(r) / (u * u * u))
    }

    pub fn f2(&self, r: f64) -> f64 {
        self.u(r).map_or(0.0, |u| self.f(r) * (4.0 - 6.0 * u * u) / u.powi(6))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianCheck {
    /// Smallest eigenvalue of `Hess f` over all nodes.
    pub min_hessian: f64,
    /// Smallest `Δf = f'' + 2f'·w'/w` over collar nodes where `f` is a normal float.
    pub min_laplacian_collar: f64,
    /// Smallest `Δf/f` on the collar `(−ε, 0]`. Unlike `Δf` it does not
    /// underflow near `−ε`, so its sign certifies `Δf > 0` everywhere.
    pub min_laplacian_factor: f64,
}

/// Eigenvalues of `Hess f` are `f''` (radial) and `f'·w'/w` (tangential).
pub fn hessian_laplacian_check(m: &WarpedBallMetric, eps: f64) -> Result<HessianCheck> {
    let f = CollarFunction::new(eps)?;
    let line = m.line();
    let mut min_h = f64::INFINITY;
    let mut min_l = f64::INFINITY;
    let mut min_q = f64::INFINITY;
    for i in 0..m.n() {
        let r = m.grid.r(i);
        if r <= -eps {
            min_h = min_h.min(0.0);
            continue;
        }
        let w = m.w[i];
        if !(w > 0.0) {
            return Err(GeomError::Precondition(format!("collar reaches the center at r = {r}")));
        }
        let ratio = line.deriv(i, 1) / w;
        if !(ratio > 0.0) {
            return Err(GeomError::NotConvex { r, eig: -ratio });
        }
        let (f1, f2) = (f.f1(r), f.f2(r));
        min_h = min_h.min(f2).min(f1 * ratio);
        if f.f(r).is_normal() {
            min_l = min_l.min(f2 + 2.0 * f1 * ratio);
        }
        let u = r + eps;
        min_q = min_q.min((4.0 - 6.0 * u * u) / u.powi(6) + 4.0 * ratio / (u * u * u));
    }
    Ok(HessianCheck { min_hessian: min_h, min_laplacian_collar: min_l, min_laplacian_factor: min_q })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalResult {
    /// `e^{−2sf}·g` in warped form over the new arclength coordinate.
    pub metric: WarpedBallMetric,
    pub s: f64,
    pub epsilon: f64,
    /// New radial coordinate of the collar edge `r = −ε`.
    pub collar_start: f64,
    pub min_ricci_collar: f64,
    /// Over the outer half of the collar, original `r ∈ [−ε/2, 0]`, where
    /// `f` is large enough for the gain to exceed rounding.
    pub min_ricci_near_boundary: f64,
    pub min_ricci_global: f64,
    pub boundary_ii_eig: f64,
    /// Parameter at which the boundary stops being strictly convex.
    pub critical_s: f64,
}

const PANELS: usize = 16;
const ORDER: usize = 10;

/// Conformal collar deformation `g^s = e^{−2sf}·g`, re-expressed as
/// `dr̃² + w̃²` with `dr̃ = e^{−sf}dr` and `w̃ = e^{−sf}·w`.
pub fn conformal_collar(m: &WarpedBallMetric, eps: f64, s: f64) -> Result<ConformalResult> {
    let f = CollarFunction::new(eps)?;
    if !(s >= 0.0) {
        return Err(GeomError::Parameter(format!("conformal parameter {s} must be non-negative")));
    }
    if m.doubled || m.grid.r_max.abs() > 1e-12 {
        return Err(GeomError::Precondition("conformal collar acts on a ball with boundary at r = 0".into()));
    }
    if eps >= -m.grid.r_min {
        return Err(GeomError::Parameter(format!("collar width {eps} reaches the center")));
    }
    let d0 = m.eval(0.0, 1, Side::Left)?;
    let critical_s = (d0[1] / d0[0]) / f.f1(0.0);

    let factor = |r: f64| (-s * f.f(r)).exp();
    // Arclength from r to the boundary, negated. Only the deficit
    // `factor − 1` is integrated, on fixed panels, so the quadrature error is
    // small and varies smoothly with r.
    let deficit = |r: f64| (-s * f.f(r)).exp_m1();
    let panels = PANELS * m.n();
    let step = eps / panels as f64;
    let mut cum = vec![0.0; panels + 1];
    for j in 0..panels {
        let a = -eps + j as f64 * step;
        cum[j + 1] = cum[j] + integrate(deficit, a, a + step, 1, ORDER);
    }
    let collar_len = eps + cum[panels];
    let tilde = |r: f64| {
        if r <= -eps {
            r + eps - collar_len
        } else {
            let j = (((r + eps) / step) as usize).min(panels - 1);
            let a = -eps + j as f64 * step;
            r - (cum[panels] - cum[j] - integrate(deficit, a, r, 1, ORDER))
        }
    };
    let new_min = tilde(m.grid.r_min);
    let grid = RadialGrid::new(new_min, 0.0, m.n())?;
    let line = m.line();
    let mut w = Vec::with_capacity(m.n());
    for i in 0..m.n() {
        let target = grid.r(i);
        let mut r = if i == 0 {
            m.grid.r_min
        } else if i + 1 == m.n() {
            0.0
        } else if target <= -collar_len {
            target - eps + collar_len
        } else {
            let mut r = (target).clamp(-eps, 0.0);
            for _ in 0..60 {
                let step = (tilde(r) - target) / factor(r);
                r = (r - step).clamp(-eps, 0.0);
                if step.abs() < 1e-15 {
                    break;
                }
            }
            r
        };
        r = r.clamp(m.grid.r_min, 0.0);
        let wv = if i == 0 && m.pole_lo() {
            0.0
        } else if target <= -collar_len {
            // Pure translation: index from the center, not from r.
            line.interp_pos(i as f64 * grid.spacing / m.grid.spacing, 0, Side::Left)[0]
        } else {
            line.interp(r, 0, Side::Left)[0]
        };
        w.push(factor(r) * wv);
    }
    let out = WarpedBallMetric::new(grid, w, Vec::new(), false)?;
    let field = warped_curvature(&out)?;
    let collar_start = -collar_len;
    let min_ricci_collar = field.min_ricci_where(|r| r > collar_start);
    let near = tilde(-0.5 * eps);
    let min_ricci_near_boundary = field.min_ricci_where(|r| r >= near);
    let ii = boundary_ii_eig(&out)?;
    if !(ii < 0.0) {
        return Err(GeomError::Verdict {
            stage: "conformal".into(),
            param: s,
            detail: format!("boundary no longer strictly convex; critical s = {critical_s}"),
        });
    }
    Ok(ConformalResult {
        s,
        epsilon: eps,
        collar_start,
        min_ricci_collar,
        min_ricci_near_boundary,
        min_ricci_global: field.min_ricci_eig,
        boundary_ii_eig: ii,
        critical_s,
        metric: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::second_fundamental_form;
    use crate::metric::{build_warped, Profile};

    #[test]
    fn collar_values() {
        let f = CollarFunction::new(0.5).unwrap();
        let e4 = (-4.0f64).exp();
        assert!((f.f(0.0) - e4).abs() < 1e-16);
        assert!((f.f1(0.0) - 16.0 * e4).abs() < 1e-15);
        assert_eq!((f.f(-0.5), f.f1(-0.6), f.f2(-0.7)), (0.0, 0.0, 0.0));
        assert!(CollarFunction::new(0.9).is_err());
    }

    #[test]
    fn flat_ball_hessian_and_laplacian() {
        let m = build_warped(&Profile::FlatBall(1.0), 1025).unwrap();
        let c = hessian_laplacian_check(&m, 0.5).unwrap();
        assert!(c.min_hessian >= -1e-10);
        assert!(c.min_laplacian_collar > 0.0);
        assert!(c.min_laplacian_factor > 0.0);
    }

    #[test]
    fn conformal_identity_and_boundary_form() {
        let m = build_warped(&Profile::FlatBall(1.0), 1025).unwrap();
        let z = conformal_collar(&m, 0.5, 0.0).unwrap();
        for (a, b) in z.metric.w.iter().zip(&m.w) {
            assert!((a - b).abs() < 1e-14, "{a} {b}");
        }
        let s = 0.05;
        let c = conformal_collar(&m, 0.5, s).unwrap();
        let f = CollarFunction::new(0.5).unwrap();
        let (ii, _) = second_fundamental_form(&c.metric, 0.0).unwrap();
        let gamma = (s * f.f(0.0)).exp() * ii.round_coefficient().unwrap();
        assert!((gamma - (-1.0 + s * f.f1(0.0))).abs() < 1e-8, "{gamma}");
        assert!((c.critical_s - 1.0 / (16.0 * (-4.0f64).exp())).abs() < 1e-9);
        let tol = crate::verdict::default_tolerance(&warped_curvature(&c.metric).unwrap());
        assert!(c.min_ricci_near_boundary > tol, "{c:?}");
        assert!(c.min_ricci_collar >= -tol);
        assert!(conformal_collar(&m, 0.5, 5.0).is_err());
    }
}
