#![allow(dead_code)]

use std::f64::consts::PI;

use capdeform::curvature::CurvatureField;
use capdeform::deform::{double, glue_interpolate};
use capdeform::flow::FlowState;
use capdeform::grid::RadialGrid;
use capdeform::jet::Jet;
use capdeform::metric::{build_warped, Profile, WarpedBallMetric};
use rand::Rng;

/// A smooth, generally asymmetric sphere given in closed form.
///
/// Arclength is `s = L·σ(u)` with `u = (x+1)/2`, and `w(s) = (L/π)·sin(πv)·M(v)`
/// with `v = s/L`. `σ'` is even about both ends and `M(0) = M(1) = 1`, so
/// both poles are smooth.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormSphere {
    pub length: f64,
    pub c: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
}

impl ClosedFormSphere {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        ClosedFormSphere {
            length: rng.gen_range(2.0..4.0),
            c: rng.gen_range(-0.3..0.3),
            d: rng.gen_range(-0.3..0.3),
            a: rng.gen_range(-0.1..0.1),
            b: rng.gen_range(-0.1..0.1),
        }
    }

    fn sigma(&self, u: f64) -> f64 {
        let (c, d) = (self.c, self.d);
        let raw = u + c * (u - (2.0 * PI * u).sin() / (2.0 * PI)) + d * (u - (PI * u).sin() / PI);
        raw / (1.0 + c + d)
    }

    fn sigma1(&self, u: f64) -> f64 {
        let (c, d) = (self.c, self.d);
        (1.0 + c * (1.0 - (2.0 * PI * u).cos()) + d * (1.0 - (PI * u).cos())) / (1.0 + c + d)
    }

    pub fn warp(&self, s: f64) -> f64 {
        let v = s / self.length;
        let m = 1.0 + self.a * ((2.0 * PI * v).cos() - 1.0) + self.b * ((3.0 * PI * v).cos() - (PI * v).cos());
        self.length / PI * (PI * v).sin() * m
    }

    pub fn state(&self, n: usize) -> FlowState {
        let dx = 2.0 / (n - 1) as f64;
        let u = |i: usize| if i + 1 == n { 1.0 } else { 0.5 * i as f64 * dx };
        let mut w: Vec<f64> = (0..n).map(|i| self.warp(self.length * self.sigma(u(i)))).collect();
        w[0] = 0.0;
        w[n - 1] = 0.0;
        let h = (0..n).map(|i| 0.5 * self.length * self.sigma1(u(i))).collect();
        FlowState::new(h, w, 0.0).unwrap()
    }

    /// The same metric sampled exactly on a uniform arclength grid.
    pub fn metric(&self, n: usize) -> WarpedBallMetric {
        let grid = RadialGrid::new(-0.5 * self.length, 0.5 * self.length, n).unwrap();
        let mut w: Vec<f64> = grid.nodes().iter().map(|r| self.warp(r + 0.5 * self.length)).collect();
        w[0] = 0.0;
        w[n - 1] = 0.0;
        WarpedBallMetric::new(grid, w, Vec::new(), false).unwrap()
    }
}

/// Smooth ball `w(u) = S(u)·(1 + a·u²·cos(b·u))` with `u = r − r_min` and
/// `S(u) = sin(k·u)/k` (or `u` for `k = 0`). The bracket is even in `u`, so the
/// center is a smooth pole.
#[derive(Debug, Clone, Copy)]
pub struct SmoothBall {
    pub radius: f64,
    pub k: f64,
    pub a: f64,
    pub b: f64,
}

impl SmoothBall {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let radius = rng.gen_range(0.8..1.5);
        SmoothBall {
            radius,
            k: rng.gen_range(0.0..0.9 * PI / (2.0 * radius)),
            a: rng.gen_range(-0.1..0.1),
            b: rng.gen_range(1.0..4.0),
        }
    }

    pub fn jet(&self, r: f64) -> Jet {
        self.jet_from_center(r + self.radius)
    }

    pub fn jet_from_center(&self, u: f64) -> Jet {
        let u = Jet::variable(u);
        let s = if self.k == 0.0 { u } else { (u * self.k).sin() * (1.0 / self.k) };
        s * (1.0 + self.a * u * u * (u * self.b).cos())
    }

    pub fn metric(&self, n: usize) -> WarpedBallMetric {
        let grid = RadialGrid::new(-self.radius, 0.0, n).unwrap();
        let mut w: Vec<f64> =
            (0..n).map(|i| self.jet_from_center(Profile::center_offset(&grid, i)).value()).collect();
        w[0] = 0.0;
        WarpedBallMetric::new(grid, w, Vec::new(), false).unwrap()
    }

    /// `(w, w', w'', w''')` at every node.
    pub fn derivs(&self, m: &WarpedBallMetric) -> Vec<[f64; 4]> {
        (0..m.n())
            .map(|i| {
                let j = self.jet_from_center(Profile::center_offset(&m.grid, i));
                [if i == 0 { 0.0 } else { j.value() }, j.d(1), j.d(2), j.d(3)]
            })
            .collect()
    }
}

/// Flat unit ball, doubled and glued at half-width `rho`.
pub fn glued_flat_ball(n: usize, rho: f64) -> WarpedBallMetric {
    let d = double(&build_warped(&Profile::FlatBall(1.0), n).unwrap()).unwrap().0;
    glue_interpolate(&d, rho).unwrap().0
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Largest deviation over sectional curvatures, Ricci entries and slice forms.
pub fn field_deviation(a: &CurvatureField, b: &CurvatureField) -> f64 {
    let mut d = 0.0f64;
    for k in 0..a.n_points() {
        d = d
            .max((a.k_mixed[k][0] - b.k_mixed[k][0]).abs())
            .max((a.k_tan[k] - b.k_tan[k]).abs())
            .max((a.ricci_radial[k] - b.ricci_radial[k]).abs())
            .max((a.ricci_tangential[k][0] - b.ricci_tangential[k][0]).abs());
        if let (Some(x), Some(y)) = (a.slice_ii[k].round_coefficient(), b.slice_ii[k].round_coefficient()) {
            d = d.max((x - y).abs());
        }
    }
    d
}
