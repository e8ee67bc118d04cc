use serde::{Deserialize, Serialize};

use crate::curvature::warped_curvature;
use crate::error::{GeomError, Result};
use crate::line::Side;
use crate::metric::{Regularity, WarpedBallMetric};
use crate::stencil::integrate;
use crate::verdict::default_tolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothResult {
    pub metric: WarpedBallMetric,
    pub delta_m: f64,
    /// Smallest Ricci eigenvalue between the outermost interfaces.
    pub min_ricci_band: f64,
    pub min_ricci_global: f64,
    pub tol: f64,
    /// `sup |w_smoothed - w|`.
    pub sup_change: f64,
}

/// Degree-15 smoothstep `I_x(8, 8)`: 0 for `x <= 0`, 1 for `x >= 1`, seven
/// vanishing derivatives at both ends.
///
/// A polynomial onset keeps the fourth-order stencil undershoot small where
/// curvature switches on from exactly zero; exponential steps are steeper
/// inside and undershoot more.
fn step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    const K: i32 = 8;
    let mut binom = 1.0f64;
    let mut sum = 0.0;
    for j in 0..2 * K {
        if j >= K {
            sum += binom * x.powi(j) * (1.0 - x).powi(2 * K - 1 - j);
        }
        binom = binom * (2 * K - 1 - j) as f64 / (j + 1) as f64;
    }
    sum
}

fn bump_raw(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Correction that cancels the jumps of `w''` and `w'''` at one interface.
///
/// In the local variable `u` (band side `u > 0`) the jump is absorbed by a
/// smooth ramp on `[-2δ, 0]`; one bump on `[0, 4δ]` returns the slope to
/// that of the band. Past `4δ` the correction is the constant `offset()`.
///
/// The ramp is as wide as the compensating bump allows, because curvature
/// switching on from exactly zero is where fourth-order stencils undershoot.
struct InterfaceCorrection {
    delta: f64,
    j0: f64,
    j1: f64,
    mu: f64,
    bump_norm: f64,
}

const PANELS: usize = 24;
const ORDER: usize = 10;
/// Ramp width and bump half-width in units of `δ`.
const RAMP: f64 = 2.0;

impl InterfaceCorrection {
    fn new(delta: f64, j0: f64, j1: f64) -> Self {
        let bump_norm = integrate(bump_raw, -1.0, 1.0, 64, ORDER) * RAMP * delta;
        let mut s = InterfaceCorrection { delta, j0, j1, mu: 0.0, bump_norm };
        s.mu = -integrate(|t| s.ramp(t), -RAMP * delta, 0.0, PANELS, ORDER);
        s
    }

    fn ramp(&self, t: f64) -> f64 {
        let width = RAMP * self.delta;
        if t < -width || t >= 0.0 {
            0.0
        } else {
            step((t + width) / width) * (self.j0 + self.j1 * t)
        }
    }

    /// Second derivative of the correction.
    fn density(&self, t: f64) -> f64 {
        let hw = RAMP * self.delta;
        self.ramp(t) + self.mu * bump_raw((t - hw) / hw) / self.bump_norm
    }

    fn value(&self, u: f64) -> f64 {
        let d = self.delta;
        let u = u.min(4.0 * d);
        if u <= -RAMP * d {
            return 0.0;
        }
        let kernel = |t: f64| (u - t) * self.density(t);
        // Split where the density jumps so every panel sees a smooth integrand.
        let mut knots = vec![-RAMP * d];
        if u > 0.0 {
            knots.push(0.0);
        }
        knots.push(u);
        knots.windows(2).map(|p| integrate(kernel, p[0], p[1], PANELS, ORDER)).sum()
    }

    fn offset(&self) -> f64 {
        self.value(4.0 * self.delta)
    }
}

/// The `ρ` of a doubled metric with C¹ interfaces exactly at `±ρ`.
fn glued_rho(m: &WarpedBallMetric) -> Result<f64> {
    let c1: Vec<f64> = m.breaks.iter().filter(|b| b.regularity == Regularity::C1).map(|b| b.r).collect();
    let ok = m.doubled && c1.len() == 2 && (c1[0] + c1[1]).abs() <= 1e-12 && c1[0] < 0.0;
    if !ok {
        return Err(GeomError::Precondition("expected a glued doubled metric with interfaces at ±rho".into()));
    }
    Ok(c1[1])
}

/// Remove the C¹ interfaces `±ρ` of a glued doubled metric with fixed width
/// `delta_m`; no positivity search.
///
/// The result is C³, reflection symmetric, equal to the input for
/// `|r| >= ρ + 2δ`, and equal to the input plus a constant of size `O(δ²)`
/// for `|r| <= ρ - 4δ`.
pub fn smooth_c1_fixed(m: &WarpedBallMetric, delta_m: f64) -> Result<WarpedBallMetric> {
    if !(delta_m > 0.0) {
        return Err(GeomError::Parameter(format!("smoothing width {delta_m} must be positive")));
    }
    let rho = glued_rho(m)?;
    if 4.0 * delta_m > rho * (1.0 + 1e-12) {
        return Err(GeomError::Smoothing(format!("width {delta_m} exceeds rho/4 = {}", rho / 4.0)));
    }
    if -rho - RAMP * delta_m <= m.grid.r_min {
        return Err(GeomError::Smoothing(format!("width {delta_m} reaches the pole")));
    }
    let dout = m.eval(-rho, 3, Side::Left)?;
    let din = m.eval(-rho, 3, Side::Right)?;
    let corr = InterfaceCorrection::new(delta_m, din[2] - dout[2], din[3] - dout[3]);
    let offset = corr.offset();
    let n = m.n();
    let mut w = m.w.clone();
    for (i, wi) in w.iter_mut().enumerate().take(n / 2 + 1) {
        let u = m.grid.r(i) + rho;
        if u > -RAMP * delta_m {
            *wi += if u >= 4.0 * delta_m { offset } else { corr.value(u) };
        }
    }
    for i in 0..n / 2 {
        w[n - 1 - i] = w[i];
    }
    let breaks = m.breaks.iter().filter(|b| b.regularity != Regularity::C1).cloned().collect();
    WarpedBallMetric::new(m.grid, w, breaks, true)
}

/// Smooth the C¹ interfaces, halving `delta_m` until the band has positive
/// Ricci curvature and the global minimum is at least `-tol`.
///
/// `delta_m` is clamped to at most `ρ/4`; the search stops below
/// `8·spacing`.
pub fn smooth_c1(m: &WarpedBallMetric, delta_m: f64) -> Result<SmoothResult> {
    if !(delta_m > 0.0) {
        return Err(GeomError::Parameter(format!("smoothing width {delta_m} must be positive")));
    }
    let rho = glued_rho(m)?;
    let floor = 8.0 * m.grid.spacing;
    let mut delta = delta_m.min(rho / 4.0);
    let mut last = String::from("search range empty");
    while delta >= floor * (1.0 - 1e-12) {
        let out = smooth_c1_fixed(m, delta)?;
        let field = warped_curvature(&out)?;
        let tol = default_tolerance(&field);
        let band = field.min_ricci_where(|r| r.abs() <= rho);
        let global = field.min_ricci_eig;
        if band > tol && global >= -tol {
            let sup_change = out.w.iter().zip(&m.w).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            return Ok(SmoothResult { metric: out, delta_m: delta, min_ricci_band: band, min_ricci_global: global,
                                     tol, sup_change });
        }
        last = format!("delta_m = {delta}: band min Ricci {band}, global {global}");
        delta *= 0.5;
    }
    Err(GeomError::Smoothing(format!("no width in [{floor}, {}] keeps Ricci positive ({last})", rho / 4.0)))
}
