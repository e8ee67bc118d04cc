//! Rotationally symmetric Ricci flow on the doubled three-sphere.
//!
//! The metric is `h(x)²dx² + w(x)²·(round 2-sphere)` on a fixed coordinate
//! interval `x ∈ [−1, 1]` with poles at both ends. With `s` the arclength,
//! `∂ₜg = −2Ric` reads
//!
//! ```text
//! ∂ₜw = w_ss − (1 − w_s²)/w,        ∂ₜh = 2(w_ss/w)·h.
//! ```
//!
//! Volume-normalized flow adds `(r̄/3)·w` and `(r̄/3)·h`, where `r̄` is the
//! volume-averaged scalar curvature.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::grid::RadialGrid;
use crate::line::{Ghost, Line, Side};
use crate::metric::WarpedBallMetric;
use crate::stencil::{central_even, central_odd, fornberg};

/// Sixth-order centered weights. Near a pole `K_tan = (1 − w_s²)/w²` divides
/// the error of `w_s` by `w²`, so fourth order leaves only `O(dx²)` there.
const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
const D3: [f64; 9] = [
    -7.0 / 240.0, 0.3, -169.0 / 120.0, 61.0 / 30.0, 0.0, -61.0 / 30.0, 169.0 / 120.0, -0.3, 7.0 / 240.0,
];

/// Explicit RK2 stays stable for `dt <= CFL·(min h·dx)²`.
pub const CFL: f64 = 0.2;
/// Tolerance on `|w_s| = 1` at the poles.
pub const POLE_SLOPE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowMode {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "volume-normalized")]
    Normalized,
}

impl fmt::Display for FlowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowMode::Raw => "raw",
            FlowMode::Normalized => "volume-normalized",
        })
    }
}

impl FromStr for FlowMode {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FlowMode::Raw),
            "normalized" | "volume-normalized" => Ok(FlowMode::Normalized),
            _ => Err(GeomError::Parse(format!("unknown flow mode `{s}`"))),
        }
    }
}

/// Coordinate gauge of the evolution.
///
/// `Fixed` is `∂ₜg = −2Ric` in the coordinate `x` itself. It is only weakly
/// parabolic and a conical perturbation of the pole slope grows at a rate of
/// order `1/ds²`, so long runs use `DeTurck`: `∂ₜg = −2Ric + L_W g` with `W`
/// built from the round metric of the same chart. The two differ by a
/// diffeomorphism, so every curvature quantity agrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    Fixed,
    DeTurck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

/// Sectional curvatures of a state, per node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCurvature {
    pub k_mixed: Vec<f64>,
    pub k_tan: Vec<f64>,
}

impl StateCurvature {
    pub fn min_ricci(&self) -> f64 {
        self.k_mixed
            .iter()
            .zip(&self.k_tan)
            .fold(f64::INFINITY, |a, (&m, &t)| a.min(2.0 * m).min(m + t))
    }

    pub fn k_max(&self) -> f64 {
        self.k_mixed.iter().chain(&self.k_tan).fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    pub fn k_min(&self) -> f64 {
        self.k_mixed.iter().chain(&self.k_tan).fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

fn coordinate_grid(n: usize) -> Vec<f64> {
    let dx = 2.0 / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { 1.0 } else { -1.0 + i as f64 * dx }).collect()
}

/// Composite Simpson weights on `n` (odd) nodes of unit spacing.
fn simpson(vals: impl Iterator<Item = f64>, n: usize) -> f64 {
    vals.enumerate()
        .map(|(i, v)| {
            let c = if i == 0 || i + 1 == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            c * v
        })
        .sum::<f64>()
        / 3.0
}

impl FlowState {
    pub fn new(h: Vec<f64>, w: Vec<f64>, t: f64) -> Result<Self> {
        let n = w.len();
        if h.len() != n {
            return Err(GeomError::Grid(format!("{} h samples for {n} w samples", h.len())));
        }
        if n < 9 || n.is_multiple_of(2) {
            return Err(GeomError::Grid(format!("flow grid needs an odd count >= 9, got {n}")));
        }
        let s = FlowState { x: coordinate_grid(n), h, w, t };
        s.validate()?;
        Ok(s)
    }

    /// Round three-sphere of the given radius.
    pub fn round_sphere(n: usize, radius: f64) -> Result<Self> {
        let x = coordinate_grid(n);
        let q = std::f64::consts::FRAC_PI_2;
        let mut w: Vec<f64> = x.iter().map(|&x| radius * (q * (x + 1.0)).sin()).collect();
        w[0] = 0.0;
        w[n - 1] = 0.0;
        // Exact mirror so that the state is even to the last bit.
        for i in 0..n / 2 {
            w[n - 1 - i] = w[i];
        }
        FlowState::new(vec![q * radius; n], w, 0.0)
    }

    /// State of a doubled metric on `[−L, L]`; `x = r/L`, `h = L`.
    pub fn from_doubled(m: &WarpedBallMetric, n: Option<usize>) -> Result<Self> {
        if !m.doubled || !m.breaks.is_empty() {
            return Err(GeomError::Precondition("flow needs a smooth doubled metric".into()));
        }
        let half = -m.grid.r_min;
        let n_out = n.unwrap_or(m.n());
        let w = if n_out == m.n() {
            m.w.clone()
        } else if (m.n() - 1).is_multiple_of(n_out - 1) {
            let k = (m.n() - 1) / (n_out - 1);
            m.w.iter().step_by(k).copied().collect()
        } else {
            let g = RadialGrid::new(m.grid.r_min, m.grid.r_max, n_out)?;
            let mut w = m.resample(g, |r| r)?;
            w[0] = 0.0;
            w[n_out - 1] = 0.0;
            for i in 0..n_out / 2 {
                w[n_out - 1 - i] = w[i];
            }
            w
        };
        FlowState::new(vec![half; n_out], w, 0.0)
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.n() - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let scale = self.w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if self.w[0].abs() > 1e-13 * scale || self.w[n - 1].abs() > 1e-13 * scale {
            return Err(GeomError::Precondition(format!(
                "state does not close up at the poles: w(-1) = {}, w(1) = {}",
                self.w[0],
                self.w[n - 1]
            )));
        }
        for i in 0..n {
            if !self.w[i].is_finite() || !self.h[i].is_finite() {
                return Err(GeomError::NonFinite(format!("flow state at x = {}", self.x[i])));
            }
            if !(self.h[i] > 0.0) {
                return Err(GeomError::Flow(format!("h = {} at x = {}", self.h[i], self.x[i])));
            }
            if i > 0 && i + 1 < n && !(self.w[i] > 0.0) {
                return Err(GeomError::Flow(format!("singularity: w = {} at x = {}", self.w[i], self.x[i])));
            }
        }
        for (i, sign) in [(0usize, 1.0), (n - 1, -1.0)] {
            let slope = sign * self.dx_w(i) / self.h[i];
            if (slope - 1.0).abs() > POLE_SLOPE_TOL {
                return Err(GeomError::Precondition(format!(
                    "pole at x = {} is not smooth: |w_s| = {slope}",
                    self.x[i]
                )));
            }
        }
        Ok(())
    }

    /// `w` extended oddly and `h` evenly past both poles.
    #[inline]
    fn wa(&self, i: i64) -> f64 {
        let n = self.n() as i64;
        if i < 0 {
            -self.w[(-i) as usize]
        } else if i >= n {
            -self.w[(2 * (n - 1) - i) as usize]
        } else {
            self.w[i as usize]
        }
    }

    #[inline]
    fn ha(&self, i: i64) -> f64 {
        let n = self.n() as i64;
        if i < 0 {
            self.h[(-i) as usize]
        } else if i >= n {
            self.h[(2 * (n - 1) - i) as usize]
        } else {
            self.h[i as usize]
        }
    }

    fn dx_w(&self, i: usize) -> f64 {
        let i = i as i64;
        central_odd(|k| self.wa(i + k), &D1) / self.spacing()
    }

    /// Move `h` at the poles by exactly the change of `|w_x|` since `prev`.
    /// Left free, the pole values of `h` and `w_x` drift apart into a cone
    /// that the flow amplifies at a rate of order `1/ds²`.
    fn close_poles(&mut self, prev: &FlowState) {
        let n = self.n();
        self.h[0] = prev.h[0] + (self.dx_w(0) - prev.dx_w(0));
        self.h[n - 1] = prev.h[n - 1] - (self.dx_w(n - 1) - prev.dx_w(n - 1));
    }

    /// Sectional curvatures, using the pole limit `K = −w_sss/w_s` at `x = ±1`.
    pub fn curvature(&self) -> StateCurvature {
        let n = self.n();
        let dx = self.spacing();
        let mut k_mixed = Vec::with_capacity(n);
        let mut k_tan = Vec::with_capacity(n);
        for i in 0..n {
            let ii = i as i64;
            let h = self.h[i];
            let wx = central_odd(|k| self.wa(ii + k), &D1) / dx;
            if i == 0 || i + 1 == n {
                let wxxx = central_odd(|k| self.wa(ii + k), &D3) / (dx * dx * dx);
                let hxx = central_even(|k| self.ha(ii + k), &D2) / (dx * dx);
                let k = -wxxx / (h * h * wx) + hxx / (h * h * h);
                k_mixed.push(k);
                k_tan.push(k);
                continue;
            }
            let w = self.w[i];
            let wxx = central_even(|k| self.wa(ii + k), &D2) / (dx * dx);
            let hx = central_odd(|k| self.ha(ii + k), &D1) / dx;
            let ws = wx / h;
            let wss = (wxx - wx * hx / h) / (h * h);
            k_mixed.push(-wss / w);
            k_tan.push((1.0 - ws * ws) / (w * w));
        }
        StateCurvature { k_mixed, k_tan }
    }

    /// `∫ w²h dx`; the volume divided by `4π`.
    pub fn volume(&self) -> f64 {
        let n = self.n();
        simpson(self.w.iter().zip(&self.h).map(|(w, h)| w * w * h), n) * self.spacing()
    }

    /// Volume-averaged scalar curvature.
    pub fn mean_scalar(&self, c: &StateCurvature) -> f64 {
        let n = self.n();
        let num = simpson(
            (0..n).map(|i| 2.0 * (2.0 * c.k_mixed[i] + c.k_tan[i]) * self.w[i] * self.w[i] * self.h[i]),
            n,
        );
        let den = simpson(self.w.iter().zip(&self.h).map(|(w, h)| w * w * h), n);
        num / den
    }

    /// `max |w(x) − w(−x)|` together with the same for `h`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        (0..n / 2).fold(0.0f64, |a, i| {
            let j = n - 1 - i;
            a.max((self.w[i] - self.w[j]).abs()).max((self.h[i] - self.h[j]).abs())
        })
    }

    /// Arclength from `x = −1` to every node, fourth order.
    pub fn arclength(&self) -> Vec<f64> {
        let n = self.n();
        let dx = self.spacing();
        let mut s = Vec::with_capacity(n);
        s.push(0.0);
        for i in 0..n - 1 {
            let ii = i as i64;
            let seg = (-self.ha(ii - 1) + 13.0 * self.ha(ii) + 13.0 * self.ha(ii + 1) - self.ha(ii + 2)) / 24.0;
            s.push(s[i] + seg * dx);
        }
        s
    }

    /// `w` as a function of arclength on a uniform grid over `[s_lo, s_hi]`,
    /// with `s` measured from the pole `x = −1`.
    fn resample_arclength(&self, s_nodes: &[f64], s_lo: f64, s_hi: f64, n_out: usize) -> Vec<f64> {
        let n = self.n() as i64;
        let total = s_nodes[n as usize - 1];
        // Parity extension in s: odd through both poles.
        let node = |k: i64| -> (f64, f64) {
            if k < 0 {
                (-s_nodes[(-k) as usize], -self.w[(-k) as usize])
            } else if k >= n {
                let m = (2 * (n - 1) - k) as usize;
                (2.0 * total - s_nodes[m], -self.w[m])
            } else {
                (s_nodes[k as usize], self.w[k as usize])
            }
        };
        let ds = (s_hi - s_lo) / (n_out - 1) as f64;
        (0..n_out)
            .map(|j| {
                let s = if j + 1 == n_out { s_hi } else { s_lo + j as f64 * ds };
                let k = s_nodes.partition_point(|&v| v <= s) as i64 - 1;
                let (xs, ys): (Vec<f64>, Vec<f64>) = (k - 2..=k + 3).map(node).unzip();
                let c = fornberg(s, &xs, 0).swap_remove(0);
                c.iter().zip(&ys).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// The whole sphere as a warped metric over arclength, `[−S/2, S/2]`.
    pub fn to_metric(&self, n_out: usize) -> Result<WarpedBallMetric> {
        let s = self.arclength();
        let total = s[self.n() - 1];
        let mut w = self.resample_arclength(&s, 0.0, total, n_out);
        w[0] = 0.0;
        w[n_out - 1] = 0.0;
        let grid = RadialGrid::new(-0.5 * total, 0.5 * total, n_out)?;
        WarpedBallMetric::new(grid, w, Vec::new(), false)
    }
}

/// DeTurck field `W = g^{ij}(Γˣ_ij − Γ̃ˣ_ij)` against the unit round metric
/// `(π/2)²dx² + sin²(π(x+1)/2)`. Odd about both poles, zero on them.
fn deturck_field(state: &FlowState) -> Vec<f64> {
    let n = state.n();
    let dx = state.spacing();
    let pi = std::f64::consts::PI;
    let mut field = vec![0.0; n];
    for i in 1..n - 1 {
        // w̃·w̃_x/h̃² = sin(π(x+1))/π, evaluated from the nearer pole.
        let k = i.min(n - 1 - i);
        let sign = if i <= n / 2 { 1.0 } else { -1.0 };
        let bg = if 2 * i == n - 1 { 0.0 } else { sign * (pi * k as f64 * dx).sin() / pi };
        let ii = i as i64;
        let (h, w) = (state.h[i], state.w[i]);
        let wx = central_odd(|k| state.wa(ii + k), &D1) / dx;
        let hx = central_odd(|k| state.ha(ii + k), &D1) / dx;
        field[i] = hx / (h * h * h) - 2.0 * wx / (w * h * h) + 2.0 * bg / (w * w);
    }
    field
}

/// Right-hand side of the flow, plus the curvature it was computed from.
fn rates(state: &FlowState, mode: FlowMode, gauge: Gauge) -> (Vec<f64>, Vec<f64>, StateCurvature) {
    let n = state.n();
    let c = state.curvature();
    let lift = match mode {
        FlowMode::Raw => 0.0,
        FlowMode::Normalized => state.mean_scalar(&c) / 3.0,
    };
    let mut dw = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    for i in 0..n {
        let (km, kt) = (c.k_mixed[i], c.k_tan[i]);
        let pole = i == 0 || i + 1 == n;
        // ∂ₜ(w²) = −2Ric_tan·w² and ∂ₜ(h²) = −2Ric_rr·h².
        dw.push(if pole { 0.0 } else { (lift - km - kt) * state.w[i] });
        dh.push((lift - 2.0 * km) * state.h[i]);
    }
    if gauge == Gauge::DeTurck {
        // (L_W g) adds W·w_x to ∂ₜw and (W·h)_x to ∂ₜh.
        let field = deturck_field(state);
        let q: Vec<f64> = field.iter().zip(&state.h).map(|(a, b)| a * b).collect();
        let n1 = n as i64 - 1;
        let qa = |i: i64| -> f64 {
            if i < 0 {
                -q[(-i) as usize]
            } else if i > n1 {
                -q[(2 * n1 - i) as usize]
            } else {
                q[i as usize]
            }
        };
        let dx = state.spacing();
        for i in 0..n {
            let ii = i as i64;
            if i > 0 && i + 1 < n {
                dw[i] += field[i] * central_odd(|k| state.wa(ii + k), &D1) / dx;
            }
            dh[i] += central_odd(|k| qa(ii + k), &D1) / dx;
        }
    }
    (dw, dh, c)
}

/// Largest step allowed by the CFL bound for this state.
pub fn max_step(state: &FlowState) -> f64 {
    let hmin = state.h.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    CFL * (hmin * state.spacing()).powi(2)
}

/// One explicit Heun (RK2) step of `∂ₜg = −2Ric` in the fixed gauge.
pub fn flow_step(state: &FlowState, dt: f64, mode: FlowMode) -> Result<FlowState> {
    flow_step_gauged(state, dt, mode, Gauge::Fixed)
}

pub fn flow_step_gauged(state: &FlowState, dt: f64, mode: FlowMode, gauge: Gauge) -> Result<FlowState> {
    let limit = max_step(state);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(GeomError::Flow(format!("time step {dt} violates the CFL bound {limit}")));
    }
    let (dw1, dh1, _) = rates(state, mode, gauge);
    let n = state.n();
    let mid = FlowState {
        x: state.x.clone(),
        w: (0..n).map(|i| state.w[i] + dt * dw1[i]).collect(),
        h: (0..n).map(|i| state.h[i] + dt * dh1[i]).collect(),
        t: state.t + dt,
    };
    let mut mid = mid;
    mid.close_poles(state);
    let (dw2, dh2, _) = rates(&mid, mode, gauge);
    let mut next = FlowState {
        x: state.x.clone(),
        w: (0..n).map(|i| state.w[i] + 0.5 * dt * (dw1[i] + dw2[i])).collect(),
        h: (0..n).map(|i| state.h[i] + 0.5 * dt * (dh1[i] + dh2[i])).collect(),
        t: state.t + dt,
    };
    next.close_poles(state);
    for i in 1..n - 1 {
        if !(next.w[i] > 0.0) || !next.w[i].is_finite() {
            return Err(GeomError::Flow(format!("singularity reached at t = {}, x = {}", next.t, next.x[i])));
        }
    }
    if next.h.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(GeomError::Flow(format!("radial gauge degenerated at t = {}", next.t)));
    }
    Ok(next)
}

/// `(K_max − K_min)/K_avg` over both sectional families, with `K_avg` the
/// volume average `r̄/6`.
pub fn pinching(state: &FlowState) -> f64 {
    let c = state.curvature();
    pinching_of(state, &c)
}

fn pinching_of(state: &FlowState, c: &StateCurvature) -> f64 {
    let avg = state.mean_scalar(c) / 6.0;
    if !(avg > 0.0) {
        return f64::INFINITY;
    }
    (c.k_max() - c.k_min()) / avg
}

/// Half-profile `x ∈ [−1, 0]` as a ball over arclength, boundary at `r = 0`.
pub fn restrict_half(state: &FlowState) -> Result<WarpedBallMetric> {
    let scale = state.w.iter().chain(&state.h).fold(0.0f64, |a, &b| a.max(b.abs()));
    let asym = state.asymmetry();
    if asym > 1e-10 * scale {
        return Err(GeomError::Precondition(format!("state is not reflection symmetric (asymmetry {asym})")));
    }
    let n = state.n();
    let m = n / 2;
    let s = state.arclength();
    // Mirror the arclength so that the center lands exactly on the half length.
    let total = s[n - 1];
    let mut sym = s.clone();
    for i in 0..n {
        sym[i] = 0.5 * (s[i] + total - s[n - 1 - i]);
    }
    let half = sym[m];
    let mut w = state.resample_arclength(&sym, 0.0, half, m + 1);
    w[0] = 0.0;
    w[m] = state.w[m];
    let grid = RadialGrid::new(-half, 0.0, m + 1)?;
    WarpedBallMetric::new(grid, w, Vec::new(), false)?.mirrored()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub mode: FlowMode,
    pub gauge: Gauge,
    /// Flow grid size; `None` keeps the metric's grid.
    pub n_points: Option<usize>,
    /// Normalized runs stop once the pinching falls below this.
    pub pinching_target: f64,
    /// Raw runs stop once `K_max` has grown by this factor.
    pub blowup_factor: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// Time between stored states.
    pub store_interval: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            mode: FlowMode::Normalized,
            gauge: Gauge::DeTurck,
            n_points: None,
            pinching_target: 0.01,
            blowup_factor: 10.0,
            t_max: 50.0,
            max_steps: 20_000_000,
            store_interval: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub t: f64,
    pub pinching: f64,
    pub asymmetry: f64,
    pub min_ricci_eig: f64,
    pub k_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    PinchingReached,
    CurvatureBlowup,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub states: Vec<FlowState>,
    pub diagnostics: Vec<FlowDiagnostics>,
    /// Singular time extrapolated from `1/K_max`, raw mode only.
    pub t_est: Option<f64>,
    pub mode: FlowMode,
    pub termination: Termination,
    pub steps: usize,
    /// Extremes over every step, not only the stored states.
    pub min_ricci_all_steps: f64,
    pub max_asymmetry_all_steps: f64,
}

fn diagnose(state: &FlowState, c: &StateCurvature) -> FlowDiagnostics {
    FlowDiagnostics {
        t: state.t,
        pinching: pinching_of(state, c),
        asymmetry: state.asymmetry(),
        min_ricci_eig: c.min_ricci(),
        k_max: c.k_max(),
    }
}

/// Flow a smooth doubled metric.
pub fn run_flow(m: &WarpedBallMetric, opts: &FlowOptions) -> Result<FlowTrajectory> {
    run_flow_from(FlowState::from_doubled(m, opts.n_points)?, opts)
}

pub fn run_flow_from(initial: FlowState, opts: &FlowOptions) -> Result<FlowTrajectory> {
    initial.validate()?;
    let mut state = initial;
    let c0 = state.curvature();
    let first = diagnose(&state, &c0);
    let k0 = first.k_max;
    let mut min_ric = first.min_ricci_eig;
    let mut max_asym = first.asymmetry;
    let mut states = vec![state.clone()];
    let mut diags = vec![first];
    let mut next_store = state.t + opts.store_interval;
    let mut steps = 0usize;
    let termination = loop {
        if steps >= opts.max_steps {
            return Err(GeomError::Flow(format!("step budget {} exhausted at t = {}", opts.max_steps, state.t)));
        }
        let dt = max_step(&state).min(opts.t_max - state.t);
        state = flow_step_gauged(&state, dt, opts.mode, opts.gauge)?;
        steps += 1;
        let c = state.curvature();
        let d = diagnose(&state, &c);
        min_ric = min_ric.min(d.min_ricci_eig);
        max_asym = max_asym.max(d.asymmetry);
        let done = match opts.mode {
            FlowMode::Normalized if d.pinching < opts.pinching_target => Some(Termination::PinchingReached),
            FlowMode::Raw if d.k_max >= opts.blowup_factor * k0 => Some(Termination::CurvatureBlowup),
            _ if state.t >= opts.t_max => Some(Termination::TimeLimit),
            _ => None,
        };
        if done.is_some() || state.t >= next_store {
            states.push(state.clone());
            diags.push(d);
            while next_store <= state.t {
                next_store += opts.store_interval;
            }
        }
        if let Some(r) = done {
            break r;
        }
    };
    let t_est = match opts.mode {
        FlowMode::Raw => estimate_singular_time(&diags),
        FlowMode::Normalized => None,
    };
    Ok(FlowTrajectory {
        states,
        diagnostics: diags,
        t_est,
        mode: opts.mode,
        termination,
        steps,
        min_ricci_all_steps: min_ric,
        max_asymmetry_all_steps: max_asym,
    })
}

/// Least-squares line through `(t, 1/K_max)` over the later half of the
/// run, extrapolated to zero.
pub fn estimate_singular_time(diags: &[FlowDiagnostics]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = diags[diags.len() / 2..].iter().map(|d| (d.t, 1.0 / d.k_max)).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mt) * (p.1 - my), a.1 + (p.0 - mt).powi(2)));
    let slope = sxy / sxx;
    (slope < 0.0).then(|| mt - my / slope)
}

/// `max |Δg/Δt + 2Ric| / |g|` over both metric components after one
/// fixed-gauge raw step. `Ric` comes from the warped curvature engine run on
/// `reference`, the same metric over arclength (`state.to_metric` if no
/// exact samples are at hand), whose `r_min` sits at the pole `x = −1`.
pub fn consistency_residual(state: &FlowState, dt: f64, reference: &WarpedBallMetric) -> Result<f64> {
    let next = flow_step(state, dt, FlowMode::Raw)?;
    let metric = reference;
    let field = crate::curvature::warped_curvature(metric)?;
    let tan: Vec<f64> = field.ricci_tangential.iter().map(|t| t[0]).collect();
    let g = metric.grid;
    let radial = Line::new(&field.ricci_radial, g.r_min, g.spacing, &[], Ghost::None, Ghost::None);
    let tangential = Line::new(&tan, g.r_min, g.spacing, &[], Ghost::None, Ghost::None);
    let s = state.arclength();
    let n = state.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        let r = (s[i] + g.r_min).clamp(g.r_min, g.r_max);
        let (h0, h1) = (state.h[i], next.h[i]);
        let rr = radial.interp(r, 0, Side::Left)[0];
        worst = worst.max(((h1 * h1 - h0 * h0) / dt + 2.0 * rr * h0 * h0).abs() / (h0 * h0));
        if i > 0 && i + 1 < n {
            let (w0, w1) = (state.w[i], next.w[i]);
            let rt = tangential.interp(r, 0, Side::Left)[0];
            worst = worst.max(((w1 * w1 - w0 * w0) / dt + 2.0 * rt * w0 * w0).abs() / (w0 * w0));
        }
    }
    Ok(worst)
}

/// Manifest of a run, for JSON export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowManifest {
    pub options: FlowOptions,
    pub n_points: usize,
    #[serde(rename = "T_est")]
    pub t_est: Option<f64>,
    pub termination: Termination,
    pub steps: usize,
    pub final_time: f64,
    pub final_pinching: f64,
    pub min_ricci_all_steps: f64,
    pub max_asymmetry_all_steps: f64,
}

impl FlowTrajectory {
    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn manifest(&self, opts: &FlowOptions) -> FlowManifest {
        let last = self.diagnostics.last().expect("trajectory holds the initial state");
        FlowManifest {
            options: *opts,
            n_points: self.final_state().n(),
            t_est: self.t_est,
            termination: self.termination,
            steps: self.steps,
            final_time: last.t,
            final_pinching: last.pinching,
            min_ricci_all_steps: self.min_ricci_all_steps,
            max_asymmetry_all_steps: self.max_asymmetry_all_steps,
        }
    }

    /// One row per stored state: diagnostics followed by `samples` values
    /// of `w` taken at evenly spaced nodes.
    pub fn write_csv<W: Write>(&self, mut out: W, samples: usize) -> Result<()> {
        let n = self.final_state().n();
        let samples = samples.clamp(2, n);
        let idx: Vec<usize> = (0..samples).map(|k| k * (n - 1) / (samples - 1)).collect();
        write!(out, "t,pinching,asymmetry,min_ricci")?;
        for &i in &idx {
            write!(out, ",w_{i}")?;
        }
        writeln!(out)?;
        for (s, d) in self.states.iter().zip(&self.diagnostics) {
            write!(out, "{:e},{:e},{:e},{:e}", d.t, d.pinching, d.asymmetry, d.min_ricci_eig)?;
            for &i in &idx {
                write!(out, ",{:e}", s.w[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sphere_step_matches_shrinking_solution() {
        let s = FlowState::round_sphere(257, 1.0).unwrap();
        let dt = 1e-5;
        let next = flow_step(&s, dt, FlowMode::Raw).unwrap();
        let f = (1.0 - 4.0 * dt).sqrt();
        for i in 0..s.n() {
            assert!((next.w[i] - f * s.w[i]).abs() < 1e-9, "{i}");
            assert!((next.h[i] - f * s.h[i]).abs() < 1e-9);
        }
        assert!(next.asymmetry() < 1e-13);
        assert!(pinching(&s) < 1e-8);
    }

    #[test]
    fn rejects_open_ends_and_large_steps() {
        let n = 33;
        let w = vec![1.0; n];
        assert!(FlowState::new(vec![1.0; n], w, 0.0).is_err());
        let s = FlowState::round_sphere(n, 1.0).unwrap();
        assert!(flow_step(&s, 2.0 * max_step(&s), FlowMode::Raw).is_err());
    }

    #[test]
    fn normalized_flow_fixes_round_sphere() {
        let s = FlowState::round_sphere(129, 1.0).unwrap();
        let v0 = s.volume();
        let mut st = s.clone();
        for _ in 0..50 {
            st = flow_step_gauged(&st, max_step(&st), FlowMode::Normalized, Gauge::DeTurck).unwrap();
        }
        for i in 0..s.n() {
            assert!((st.w[i] - s.w[i]).abs() < 1e-8);
        }
        assert!((st.volume() - v0).abs() < 1e-10);
    }

    #[test]
    fn restrict_round_sphere_is_hemisphere() {
        let s = FlowState::round_sphere(257, 1.0).unwrap();
        let m = restrict_half(&s).unwrap();
        assert!((m.grid.r_min + std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        for (i, &w) in m.w.iter().enumerate() {
            assert!((w - (m.grid.r(i) + std::f64::consts::FRAC_PI_2).sin()).abs() < 1e-9);
        }
        let d = m.eval(0.0, 1, crate::line::Side::Left).unwrap();
        assert!(d[1].abs() < 1e-8);
    }

    #[test]
    fn raw_round_flow_estimates_quarter() {
        let s = FlowState::round_sphere(129, 1.0).unwrap();
        let opts = FlowOptions { mode: FlowMode::Raw, store_interval: 0.005, ..FlowOptions::default() };
        let tr = run_flow_from(s, &opts).unwrap();
        let t = tr.t_est.unwrap();
        assert!((t - 0.25).abs() < 0.0025, "{t}");
        assert!(tr.max_asymmetry_all_steps < 1e-12);
    }
}
