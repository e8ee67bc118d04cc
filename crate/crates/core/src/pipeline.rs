//! End-to-end deformation paths with a class verdict on every sample.
//!
//! Strictly convex route (target class C):
//!
//! ```text
//! g --α--> g₁ --β--> δ₀-shift of g₂ --σ reversed--> g̃₂ --γ̃--> g̃_h --τ--> δ₀-shift of g_h
//! ```
//!
//! `g₁` is the ε-shift of `g`. `g₂` is the reflection-symmetric half of the
//! glued and smoothed double. `γ̃` perturbs the restricted flow path of the
//! double, and `g_h` is its (near round) endpoint. The non-negative route
//! (target class D) first runs the conformal collar deformation and then
//! follows the same stages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deform::{
    boundary_perturb, conformal_collar, delta_schedule, double, glue_interpolate, scaled_perturb_path, shift,
    smooth_c1,
};
use crate::error::{GeomError, Result};
use crate::flow::{restrict_half, run_flow, FlowOptions};
use crate::grid::RadialGrid;
use crate::metric::WarpedBallMetric;
use crate::verdict::{check_membership, MembershipVerdict, MetricClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Conformal,
    Alpha,
    Beta,
    SigmaReversed,
    GammaTilde,
    Tau,
}

impl Stage {
    pub fn label(&self) -> &'static str {
        match self {
            Stage::Conformal => "conformal",
            Stage::Alpha => "alpha",
            Stage::Beta => "beta",
            Stage::SigmaReversed => "sigma_reversed",
            Stage::GammaTilde => "gamma_tilde",
            Stage::Tau => "tau",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which class the path must stay in: `One` targets D (non-negative Ricci),
/// `Two` targets C (positive Ricci).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Theorem {
    pub fn target(&self) -> MetricClass {
        match self {
            Theorem::One => MetricClass::D,
            Theorem::Two => MetricClass::C,
        }
    }
}

impl FromStr for Theorem {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Theorem::One),
            "2" => Ok(Theorem::Two),
            _ => Err(GeomError::Parse(format!("theorem must be 1 or 2, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathSample {
    pub stage: Stage,
    pub param: f64,
    pub metric: WarpedBallMetric,
    pub verdict: MembershipVerdict,
}

/// Path parameters; `None` selects the documented default or search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub theorem: Theorem,
    /// Shift length `ε`; default `0.2·|r_min|`.
    pub eps: Option<f64>,
    /// Gluing half-width `ρ`; default `ε/2`.
    pub rho: Option<f64>,
    /// Starting perturbation size, halved until every perturbed metric passes.
    pub eta: f64,
    pub r0: f64,
    /// Final shift; default searched downward from `ε/4`.
    pub delta0: Option<f64>,
    pub delta1: f64,
    /// Conformal collar end parameter.
    pub s0: f64,
    /// Collar width; default `min(0.5, 0.5·|r_min|)`.
    pub collar_eps: Option<f64>,
    pub samples_per_stage: usize,
    /// Grid of the Ricci flow on the double.
    pub flow_grid: usize,
    pub pinching_target: f64,
    /// Verdict tolerance; default per sample, `1e-7·max(1, curvature scale)`.
    pub tol: Option<f64>,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            theorem: Theorem::Two,
            eps: None,
            rho: None,
            eta: 0.01,
            r0: 0.2,
            delta0: None,
            delta1: 0.1,
            s0: 0.05,
            collar_eps: None,
            samples_per_stage: 20,
            flow_grid: 1025,
            pinching_target: 0.01,
            tol: None,
        }
    }
}

/// Every constant the run settled on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConstants {
    pub target: MetricClass,
    pub eps: f64,
    pub rho: f64,
    pub delta_m: f64,
    pub eta: f64,
    pub r0: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub s0: Option<f64>,
    pub collar_eps: Option<f64>,
    pub grid: usize,
    pub flow_grid: usize,
    pub flow_final_time: f64,
    pub flow_final_pinching: f64,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PathRun {
    pub samples: Vec<PathSample>,
    pub constants: PathConstants,
}

impl PathRun {
    pub fn all_pass(&self) -> bool {
        self.samples.iter().all(|s| s.verdict.pass)
    }

    pub fn first_failure(&self) -> Option<&PathSample> {
        self.samples.iter().find(|s| !s.verdict.pass)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![b];
    }
    (0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect()
}

struct Sampler {
    class: MetricClass,
    tol: Option<f64>,
}

impl Sampler {
    fn sample(&self, stage: Stage, param: f64, metric: WarpedBallMetric) -> PathSample {
        let verdict = check_membership(&metric, self.class, self.tol);
        PathSample { stage, param, metric, verdict }
    }
}

/// The half `r <= 0` of a smooth doubled metric.
fn lower_half(m: &WarpedBallMetric) -> Result<WarpedBallMetric> {
    let n = m.n() / 2 + 1;
    let grid = RadialGrid::new(m.grid.r_min, 0.0, n)?;
    WarpedBallMetric::new(grid, m.w[..n].to_vec(), Vec::new(), false)?.mirrored()
}

/// Shift of the scaled perturbation path `base + (1 − s)ηβ·baseʳ`.
fn shifted_perturb(base: &WarpedBallMetric, eta: f64, r0: f64, s: f64, d0: f64, d1: f64) -> Result<WarpedBallMetric> {
    let theta = scaled_perturb_path(base, eta, r0, s)?;
    shift(&theta, delta_schedule(s, d0, d1)?)
}

pub fn build_path(g: &WarpedBallMetric, params: &PathParams) -> Result<PathRun> {
    let n = params.samples_per_stage;
    if n < 2 {
        return Err(GeomError::Parameter(format!("need at least 2 samples per stage, got {n}")));
    }
    let class = params.theorem.target();
    let sampler = Sampler { class, tol: params.tol };
    let start = check_membership(g, class, params.tol);
    if !start.pass {
        return Err(GeomError::Precondition(format!(
            "input is not in class {class}: min Ricci {}, boundary form {}",
            start.min_ricci_eig, start.max_ii_eig
        )));
    }
    let mut samples = Vec::new();

    let (base, collar_eps, s0) = match params.theorem {
        Theorem::Two => (g.clone(), None, None),
        Theorem::One => {
            let ce = params.collar_eps.unwrap_or((0.5f64).min(-0.5 * g.grid.r_min));
            let mut last = g.clone();
            for (k, s) in linspace(0.0, params.s0, n).into_iter().enumerate() {
                last = if k == 0 { g.clone() } else { conformal_collar(g, ce, s)?.metric };
                samples.push(sampler.sample(Stage::Conformal, s, last.clone()));
            }
            (last, Some(ce), Some(params.s0))
        }
    };

    let eps = params.eps.unwrap_or(-0.2 * base.grid.r_min);
    let rho = params.rho.unwrap_or(0.5 * eps);
    if !(rho > 0.0 && rho < eps) {
        return Err(GeomError::Parameter(format!("need 0 < rho < eps, got rho = {rho}, eps = {eps}")));
    }
    let (doubled, _) = double(&base)?;
    let (glued, _) = glue_interpolate(&doubled, rho)?;
    let smooth = smooth_c1(&glued, rho / 4.0)?;
    if rho + 2.0 * smooth.delta_m >= eps {
        return Err(GeomError::Parameter(format!(
            "smoothing reaches the eps-shift: rho + 2 delta_m = {} >= eps = {eps}",
            rho + 2.0 * smooth.delta_m
        )));
    }
    let g2 = lower_half(&smooth.metric)?;

    for (k, xi) in linspace(0.0, eps, n).into_iter().enumerate() {
        let m = if k == 0 { base.clone() } else { shift(&base, xi)? };
        samples.push(sampler.sample(Stage::Alpha, xi, m));
    }

    let opts = FlowOptions {
        n_points: Some(params.flow_grid),
        pinching_target: params.pinching_target,
        store_interval: 0.005,
        ..FlowOptions::default()
    };
    let traj = run_flow(&smooth.metric, &opts)?;
    let count = traj.states.len();
    let picks: Vec<usize> = (0..n).map(|k| (k * (count - 1) + (n - 1) / 2) / (n - 1)).collect();
    let halves: Vec<(f64, WarpedBallMetric)> = picks
        .iter()
        .map(|&i| restrict_half(&traj.states[i]).map(|m| (traj.states[i].t, m)))
        .collect::<Result<_>>()?;
    let g_h = halves.last().expect("at least two samples").1.clone();

    // One η for the whole path: halve until every perturbed endpoint passes.
    let mut eta = params.eta;
    let mut tries = 0;
    loop {
        let mut ok = check_membership(&boundary_perturb(&g2, eta, params.r0)?, class, params.tol).pass;
        for (_, h) in &halves {
            ok = ok && check_membership(&boundary_perturb(h, eta, params.r0)?, class, params.tol).pass;
        }
        if ok {
            break;
        }
        tries += 1;
        if tries > 30 {
            return Err(GeomError::Verdict {
                stage: Stage::GammaTilde.label().into(),
                param: eta,
                detail: "no perturbation size keeps the class".into(),
            });
        }
        eta *= 0.5;
    }

    // δ₀: the largest of ε/4, ε/8, … for which the shift stages all pass.
    let d1 = params.delta1;
    let build_shifts = |d0: f64| -> Result<Vec<PathSample>> {
        let mut out = Vec::with_capacity(3 * n);
        for xi in linspace(eps, d0, n) {
            out.push(sampler.sample(Stage::Beta, xi, shift(&g2, xi)?));
        }
        for s in linspace(1.0, 0.0, n) {
            out.push(sampler.sample(Stage::SigmaReversed, s, shifted_perturb(&g2, eta, params.r0, s, d0, d1)?));
        }
        Ok(out)
    };
    let build_tau = |d0: f64| -> Result<Vec<PathSample>> {
        linspace(0.0, 1.0, n)
            .into_iter()
            .map(|s| Ok(sampler.sample(Stage::Tau, s, shifted_perturb(&g_h, eta, params.r0, s, d0, d1)?)))
            .collect()
    };
    let (delta0, front, tau) = match params.delta0 {
        Some(d0) => (d0, build_shifts(d0)?, build_tau(d0)?),
        None => {
            let mut d0 = 0.25 * eps;
            let floor = 4.0 * g2.grid.spacing;
            loop {
                let front = build_shifts(d0)?;
                let tau = build_tau(d0)?;
                let ok = front.iter().chain(&tau).all(|s| s.verdict.pass);
                if ok || 0.5 * d0 < floor {
                    break (d0, front, tau);
                }
                d0 *= 0.5;
            }
        }
    };
    samples.extend(front);
    for (t, h) in &halves {
        samples.push(sampler.sample(Stage::GammaTilde, *t, boundary_perturb(h, eta, params.r0)?));
    }
    samples.extend(tau);

    let last = traj.diagnostics.last().expect("trajectory holds the initial state");
    Ok(PathRun {
        samples,
        constants: PathConstants {
            target: class,
            eps,
            rho,
            delta_m: smooth.delta_m,
            eta,
            r0: params.r0,
            delta0,
            delta1: d1,
            s0,
            collar_eps,
            grid: g.n(),
            flow_grid: traj.final_state().n(),
            flow_final_time: last.t,
            flow_final_pinching: last.pinching,
            tol: params.tol,
        },
    })
}
