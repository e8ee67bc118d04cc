//! Rotationally symmetric metrics `dr² + w(r)²·(round 2-sphere)`.

use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::grid::RadialGrid;
use crate::jet::Jet;
use crate::line::{Ghost, Line, Side};

/// Regularity of the metric across a break point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    C0,
    C1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Break {
    pub r: f64,
    pub regularity: Regularity,
}

/// Sampled warped metric on a radial interval.
///
/// Single balls live on `[r_min, 0]` with the center (a pole, `w = 0`) at
/// `r_min` and the boundary at `r = 0`. Doubled spheres live on
/// `[r_min, -r_min]` and have poles at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedBallMetric {
    pub grid: RadialGrid,
    pub w: Vec<f64>,
    /// Interior points where the samples are only C⁰ or C¹.
    pub breaks: Vec<Break>,
    pub doubled: bool,
    /// The profile continues evenly past `r_max` (half of a reflection
    /// symmetric double), so the boundary is totally geodesic exactly.
    #[serde(default)]
    pub mirror: bool,
}

const POLE_TOL: f64 = 1e-13;

impl WarpedBallMetric {
    pub fn new(grid: RadialGrid, w: Vec<f64>, breaks: Vec<Break>, doubled: bool) -> Result<Self> {
        if w.len() != grid.n_points {
            return Err(GeomError::Grid(format!(
                "{} samples for {} grid points",
                w.len(),
                grid.n_points
            )));
        }
        let m = WarpedBallMetric { grid, w, breaks, doubled, mirror: false };
        m.validate()?;
        Ok(m)
    }

    /// Mark the boundary as a plane of reflection symmetry.
    pub fn mirrored(mut self) -> Result<Self> {
        if self.doubled || self.grid.r_max.abs() > 1e-12 || self.pole_hi() {
            return Err(GeomError::Precondition("only a ball with boundary at r = 0 can be mirrored".into()));
        }
        self.mirror = true;
        Ok(self)
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let w = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, w, Vec::new(), false)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.w.len();
        for (i, &v) in self.w.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeomError::NonFinite(format!("w at r = {}", self.grid.r(i))));
            }
            let end = i == 0 || i + 1 == n;
            if (end && v < 0.0) || (!end && v <= 0.0) {
                return Err(GeomError::NonPositiveWarp { r: self.grid.r(i), value: v });
            }
        }
        if self.doubled && !(self.pole_lo() && self.pole_hi()) {
            return Err(GeomError::Profile("doubled metric must close up at both ends".into()));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.w.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    pub fn pole_lo(&self) -> bool {
        self.w[0].abs() <= POLE_TOL * self.scale()
    }

    pub fn pole_hi(&self) -> bool {
        self.w[self.w.len() - 1].abs() <= POLE_TOL * self.scale()
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn break_positions(&self) -> Vec<f64> {
        self.breaks.iter().map(|b| b.r).collect()
    }

    pub fn line(&self) -> Line<'_> {
        let lo = if self.pole_lo() { Ghost::Odd } else { Ghost::None };
        let hi = if self.pole_hi() {
            Ghost::Odd
        } else if self.mirror {
            Ghost::Even
        } else {
            Ghost::None
        };
        Line::new(&self.w, self.grid.r_min, self.grid.spacing, &self.break_positions(), lo, hi)
    }

    /// `w` and its derivatives up to order `d` at an arbitrary `r`.
    pub fn eval(&self, r: f64, d: usize, side: Side) -> Result<Vec<f64>> {
        if !self.grid.contains(r) {
            return Err(GeomError::SliceOutside(r));
        }
        Ok(self.line().interp(r, d, side))
    }

    /// Resample onto a new grid through `r_new -> r_old`.
    pub fn resample(&self, grid: RadialGrid, map: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let line = self.line();
        grid.nodes()
            .into_iter()
            .map(|r| {
                let ro = map(r);
                if !self.grid.contains(ro) {
                    return Err(GeomError::SliceOutside(ro));
                }
                Ok(line.interp(ro.clamp(self.grid.r_min, self.grid.r_max), 0, Side::Left)[0])
            })
            .collect()
    }

    /// Return a copy with every sectional curvature divided by `lambda²`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let grid = RadialGrid::new(lambda * self.grid.r_min, lambda * self.grid.r_max, self.n())?;
        let w = self.w.iter().map(|v| lambda * v).collect();
        let breaks = self.breaks.iter().map(|b| Break { r: lambda * b.r, ..*b }).collect();
        let mut m = WarpedBallMetric::new(grid, w, breaks, self.doubled)?;
        m.mirror = self.mirror;
        Ok(m)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,w")?;
        for (i, v) in self.w.iter().enumerate() {
            writeln!(out, "{:e},{:e}", self.grid.r(i), v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rs = Vec::new();
        let mut ws = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with('r')) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| GeomError::Parse(format!("line {}: missing column", k + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| GeomError::Parse(format!("line {}: {e}", k + 1)))
            };
            rs.push(parse(parts.next())?);
            ws.push(parse(parts.next())?);
        }
        if rs.len() < 2 {
            return Err(GeomError::Parse("too few rows".into()));
        }
        let grid = RadialGrid::new(rs[0], rs[rs.len() - 1], rs.len())?;
        for (i, &r) in rs.iter().enumerate() {
            if (r - grid.r(i)).abs() > 1e-9 * grid.length().max(1.0) {
                return Err(GeomError::Grid(format!("non-uniform spacing at row {}", i + 1)));
            }
        }
        let doubled = ws[0] == 0.0 && ws[ws.len() - 1] == 0.0 && grid.r_max > 0.0;
        WarpedBallMetric::new(grid, ws, Vec::new(), doubled)
    }
}

/// Named metric profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// Euclidean ball of the given radius.
    FlatBall(f64),
    /// Geodesic ball of radius `a` in the unit three-sphere.
    RoundCap(f64),
    Hemisphere,
    Samples { r: Vec<f64>, w: Vec<f64> },
}

impl Profile {
    pub fn interval(&self) -> Result<(f64, f64)> {
        match self {
            Profile::FlatBall(radius) => {
                if !(*radius > 0.0) {
                    return Err(GeomError::Profile(format!("radius must be positive, got {radius}")));
                }
                Ok((-radius, 0.0))
            }
            Profile::RoundCap(a) => {
                if !(*a > 0.0) || *a > FRAC_PI_2 + 1e-15 {
                    return Err(GeomError::Profile(format!("round cap needs 0 < a <= pi/2, got {a}")));
                }
                Ok((-a, 0.0))
            }
            Profile::Hemisphere => Ok((-FRAC_PI_2, 0.0)),
            Profile::Samples { r, .. } => {
                if r.len() < 2 {
                    return Err(GeomError::Profile("need samples".into()));
                }
                Ok((r[0], r[r.len() - 1]))
            }
        }
    }

    /// Exact warp with derivatives, when the profile is analytic.
    pub fn jet(&self, r: f64) -> Option<Jet> {
        let (lo, _) = self.interval().ok()?;
        self.jet_from_center(r - lo)
    }

    /// The warp as a function of the distance `u` from the center. Sampling
    /// in `u` keeps the values next to the pole free of the absolute rounding
    /// of `r`, which fourth and third differences there would amplify.
    pub fn jet_from_center(&self, u: f64) -> Option<Jet> {
        let x = Jet::variable(u);
        match self {
            Profile::FlatBall(_) => Some(x),
            Profile::RoundCap(_) | Profile::Hemisphere => Some(x.sin()),
            Profile::Samples { .. } => None,
        }
    }

    /// Distance of node `i` from the center.
    pub fn center_offset(grid: &RadialGrid, i: usize) -> f64 {
        if i + 1 == grid.n_points {
            grid.length()
        } else {
            i as f64 * grid.spacing
        }
    }

    pub fn name(&self) -> String {
        match self {
            Profile::FlatBall(r) => format!("flat_ball:{r}"),
            Profile::RoundCap(a) => format!("round_cap:{a}"),
            Profile::Hemisphere => "hemisphere".into(),
            Profile::Samples { r, .. } => format!("samples[{}]", r.len()),
        }
    }
}

impl FromStr for Profile {
    type Err = GeomError;

    /// `flat_ball[:R]`, `hemisphere`, `round_cap:a` (radians), `csv:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>, default: Option<f64>| -> Result<f64> {
            match a {
                Some(a) => parse_angle(a),
                None => default.ok_or_else(|| GeomError::Profile(format!("`{name}` needs a parameter"))),
            }
        };
        match name {
            "flat_ball" => Ok(Profile::FlatBall(num(arg, Some(1.0))?)),
            "hemisphere" => Ok(Profile::Hemisphere),
            "round_cap" => Ok(Profile::RoundCap(num(arg, None)?)),
            "csv" => {
                let path = arg.ok_or_else(|| GeomError::Profile("csv needs a path".into()))?;
                let f = std::fs::File::open(path)?;
                let m = WarpedBallMetric::read_csv(std::io::BufReader::new(f))?;
                Ok(Profile::Samples { r: m.grid.nodes(), w: m.w })
            }
            other => Err(GeomError::Profile(format!("unknown profile `{other}`"))),
        }
    }
}

/// Accepts plain numbers and `pi/k` style fractions.
fn parse_angle(s: &str) -> Result<f64> {
    let bad = || GeomError::Profile(format!("cannot parse `{s}`"));
    if let Some(rest) = s.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(std::f64::consts::PI);
        }
        let d: f64 = rest.strip_prefix('/').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        return Ok(std::f64::consts::PI / d);
    }
    s.parse().map_err(|_| bad())
}

/// Sample a named profile on `n_points` nodes.
pub fn build_warped(profile: &Profile, n_points: usize) -> Result<WarpedBallMetric> {
    let (lo, hi) = profile.interval()?;
    match profile {
        Profile::Samples { r, w } => {
            let grid = RadialGrid::new(lo, hi, r.len())?;
            let m = WarpedBallMetric::new(grid, w.clone(), Vec::new(), false)?;
            if n_points == r.len() {
                return Ok(m);
            }
            let g2 = RadialGrid::new(lo, hi, n_points)?;
            let w2 = m.resample(g2, |x| x)?;
            WarpedBallMetric::new(g2, w2, Vec::new(), false)
        }
        _ => {
            let grid = RadialGrid::new(lo, hi, n_points)?;
            let mut w: Vec<f64> = (0..n_points)
                .map(|i| profile.jet_from_center(Profile::center_offset(&grid, i)).unwrap().value())
                .collect();
            // Exact zero at the center.
            w[0] = 0.0;
            WarpedBallMetric::new(grid, w, Vec::new(), false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn flat_ball_samples() {
        let m = build_warped(&Profile::FlatBall(1.0), 257).unwrap();
        for (i, &v) in m.w.iter().enumerate() {
            assert!((v - (1.0 + m.grid.r(i))).abs() < 1e-15);
        }
        assert!(m.pole_lo() && !m.pole_hi());
    }

    #[test]
    fn hemisphere_boundary_slope_vanishes() {
        let m = build_warped(&Profile::Hemisphere, 257).unwrap();
        let d = m.eval(0.0, 1, Side::Left).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14);
        assert!(d[1].abs() < 1e-9);
    }

    #[test]
    fn round_cap_samples_and_errors() {
        let m = build_warped(&Profile::RoundCap(FRAC_PI_4), 129).unwrap();
        assert!((m.grid.r_min + FRAC_PI_4).abs() < 1e-15);
        assert!((m.w[128] - FRAC_PI_4.sin()).abs() < 1e-15);
        assert!(build_warped(&Profile::RoundCap(1.6), 129).is_err());
        let bad = RadialGrid::new(-1.0, 0.0, 11).unwrap();
        assert!(WarpedBallMetric::from_fn(bad, |r| r).is_err());
    }

    #[test]
    fn profile_parsing() {
        assert_eq!("flat_ball".parse::<Profile>().unwrap(), Profile::FlatBall(1.0));
        assert_eq!("round_cap:pi/4".parse::<Profile>().unwrap(), Profile::RoundCap(FRAC_PI_4));
        assert!("torus".parse::<Profile>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = build_warped(&Profile::RoundCap(1.0), 33).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = WarpedBallMetric::read_csv(&buf[..]).unwrap();
        assert_eq!(back.w, m.w);
        assert_eq!(back.grid.n_points, 33);
    }
}
