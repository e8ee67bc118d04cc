use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::grid::RadialGrid;
use crate::line::Side;
use crate::metric::{Break, Regularity, WarpedBallMetric};

fn require_ball(m: &WarpedBallMetric) -> Result<()> {
    if m.doubled {
        return Err(GeomError::Precondition("expected a ball, got a doubled metric".into()));
    }
    if m.grid.r_max.abs() > 1e-12 {
        return Err(GeomError::Precondition(format!("boundary must sit at r = 0, got {}", m.grid.r_max)));
    }
    Ok(())
}

/// Restrict to `[r_min, -eps]` and translate the new boundary to `r = 0`.
///
/// The sample count is kept, so the spacing shrinks slightly.
pub fn shift(m: &WarpedBallMetric, eps: f64) -> Result<WarpedBallMetric> {
    require_ball(m)?;
    if !(eps >= 0.0) || eps >= -m.grid.r_min {
        return Err(GeomError::Parameter(format!("shift {eps} outside [0, {})", -m.grid.r_min)));
    }
    if eps == 0.0 {
        return Ok(m.clone());
    }
    let grid = RadialGrid::new(m.grid.r_min + eps, 0.0, m.n())?;
    // Positions as node indices from the center keep the pole free of
    // coordinate rounding.
    let line = m.line();
    let top = (m.grid.length() - eps) / m.grid.spacing;
    let mut w: Vec<f64> = (0..m.n())
        .map(|i| {
            let p = if i + 1 == m.n() { top } else { (i as f64 * grid.spacing / m.grid.spacing).min(top) };
            line.interp_pos(p, 0, Side::Left)[0]
        })
        .collect();
    if m.pole_lo() {
        w[0] = 0.0;
    }
    let breaks = m
        .breaks
        .iter()
        .map(|b| Break { r: b.r + eps, ..*b })
        .filter(|b| b.r > grid.r_min && b.r < 0.0)
        .collect();
    WarpedBallMetric::new(grid, w, breaks, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    /// All odd derivatives vanish at the equator.
    Smooth,
    /// A kink at the equator.
    C0,
}

/// Glue two copies of the ball along the boundary: `w(r) := w(-r)` for `r > 0`.
///
/// The half `r <= 0` is the original ball.
pub fn double(m: &WarpedBallMetric) -> Result<(WarpedBallMetric, Smoothness)> {
    require_ball(m)?;
    if !m.pole_lo() {
        return Err(GeomError::Precondition("ball must close up at its center".into()));
    }
    let n = m.n();
    let scale = m.w.iter().fold(1.0f64, |a, &b| a.max(b));
    let d = m.eval(0.0, 3, Side::Left)?;
    let smooth = d[1].abs() <= 1e-6 * scale && d[3].abs() <= 1e-4 * scale;
    let grid = RadialGrid::new(m.grid.r_min, -m.grid.r_min, 2 * n - 1)?;
    let mut w = Vec::with_capacity(2 * n - 1);
    w.extend_from_slice(&m.w);
    w.extend(m.w[..n - 1].iter().rev());
    let mut breaks: Vec<Break> = m.breaks.clone();
    breaks.extend(m.breaks.iter().rev().map(|b| Break { r: -b.r, ..*b }));
    let smoothness = if smooth {
        Smoothness::Smooth
    } else {
        breaks.push(Break { r: 0.0, regularity: Regularity::C0 });
        Smoothness::C0
    };
    breaks.sort_by(|a, b| a.r.total_cmp(&b.r));
    Ok((WarpedBallMetric::new(grid, w, breaks, true)?, smoothness))
}
