use serde::{Deserialize, Serialize};

use crate::curvature::{warped_curvature, SymmetricForm};
use crate::error::{GeomError, Result};
use crate::line::Side;
use crate::metric::{Break, Regularity, WarpedBallMetric};

/// Coefficients and certified bounds of the quadratic band `b·r² + c`.
///
/// Forms are multiples of the round metric; `lambda` and the margins are in
/// the same units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueDiagnostics {
    pub rho: f64,
    pub b: SymmetricForm,
    pub c: SymmetricForm,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub eqper_margin: f64,
    /// Smallest Ricci eigenvalue on the open band `(-ρ, ρ)`.
    pub ricci_min_interior: f64,
    pub c_const: f64,
    #[serde(rename = "C_const")]
    pub big_c_const: f64,
    /// Largest mismatch of value or slope of the slice metric at `±ρ`.
    pub c1_mismatch: f64,
}

/// Most violated slack of `(ḡ)'' < -(Λ/ρ)·ḡ` on `[-ρ, ρ]` for `ḡ = b·r² + c`.
pub fn eqper_margin(b: f64, c: f64, rho: f64, lambda: f64) -> f64 {
    let slack = |r2: f64| -(lambda / rho) * (b * r2 + c) - 2.0 * b;
    slack(0.0).min(slack(rho * rho))
}

fn check_symmetric(m: &WarpedBallMetric) -> Result<()> {
    if !m.doubled {
        return Err(GeomError::Precondition("gluing needs a doubled metric".into()));
    }
    if (m.grid.r_min + m.grid.r_max).abs() > 1e-12 {
        return Err(GeomError::Precondition("doubled grid is not symmetric".into()));
    }
    let n = m.n();
    let scale = m.w.iter().fold(1.0f64, |a, &b| a.max(b));
    for i in 0..n / 2 {
        if (m.w[i] - m.w[n - 1 - i]).abs() > 1e-12 * scale {
            return Err(GeomError::Precondition(format!("not reflection symmetric at r = {}", m.grid.r(i))));
        }
    }
    Ok(())
}

/// Replace the slice metric on `[-ρ, ρ]` by `b·r² + c`, matching value and
/// slope at `±ρ`.
pub fn glue_interpolate(m: &WarpedBallMetric, rho: f64) -> Result<(WarpedBallMetric, GlueDiagnostics)> {
    check_symmetric(m)?;
    if !(rho > 0.0) || rho >= m.grid.r_max {
        return Err(GeomError::Parameter(format!("rho = {rho} outside (0, {})", m.grid.r_max)));
    }
    if let Some(b) = m.breaks.iter().find(|b| (b.r.abs() - rho).abs() < 4.0 * m.grid.spacing) {
        return Err(GeomError::Precondition(format!("existing break at {} too close to ±rho", b.r)));
    }
    let d = m.eval(-rho, 1, Side::Left)?;
    let g = d[0] * d[0];
    let g1 = 2.0 * d[0] * d[1];
    let b = -g1 / (2.0 * rho);
    let c = g + rho * g1 / 2.0;
    if !(b < 0.0) {
        return Err(GeomError::NotConvex { r: -rho, eig: d[1] / d[0] });
    }
    let lambda = 0.5 * g1 / g;
    let margin = eqper_margin(b, c, rho, lambda);
    if !(margin > 0.0) {
        return Err(GeomError::EqperViolated(margin));
    }
    let c1_mismatch = ((b * rho * rho + c) - g).abs().max((-2.0 * b * rho - g1).abs());

    let n = m.n();
    let mut w = m.w.clone();
    for i in 0..n / 2 + 1 {
        let r = m.grid.r(i);
        if r > -rho + 1e-12 * rho {
            w[i] = (b * r * r + c).sqrt();
        }
    }
    for i in 0..n / 2 {
        w[n - 1 - i] = w[i];
    }
    let mut breaks: Vec<Break> = m.breaks.iter().filter(|b| b.r.abs() > rho).cloned().collect();
    breaks.push(Break { r: -rho, regularity: Regularity::C1 });
    breaks.push(Break { r: rho, regularity: Regularity::C1 });
    breaks.sort_by(|a, b| a.r.total_cmp(&b.r));
    let out = WarpedBallMetric::new(m.grid, w, breaks, true)?;

    let field = warped_curvature(&out)?;
    let inside = |r: f64| r.abs() < rho - 1e-9 * rho;
    let ricci_min_interior = field.min_ricci_where(inside);
    let mut c_const = f64::INFINITY;
    for (i, &r) in field.r.iter().enumerate() {
        if inside(r) {
            c_const = c_const.min(field.k_mixed[i][0] * rho / lambda);
        }
    }
    let mut big_c: f64 = 0.0;
    for (i, &r) in field.r.iter().enumerate() {
        if inside(r) {
            let t = field.ricci_tangential[i][0].min(field.ricci_tangential[i][1]);
            big_c = big_c.max((c_const * lambda / rho - t) / (rho * rho));
        }
    }
    let diag = GlueDiagnostics {
        rho,
        b: SymmetricForm::Round(b),
        c: SymmetricForm::Round(c),
        lambda,
        eqper_margin: margin,
        ricci_min_interior,
        c_const,
        big_c_const: big_c,
        c1_mismatch,
    };
    Ok((out, diag))
}
