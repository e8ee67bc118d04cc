//! Independent curvature oracle: the coordinate Riemann tensor of an arbitrary
//! three-dimensional chart metric, from second-order central differences only.

use serde::{Deserialize, Serialize};

use crate::curvature::{warped_curvature, warped_curvature_exact, CurvatureField};
use crate::error::{GeomError, Result};
use crate::line::Side;
use crate::metric::{build_warped, Profile, WarpedBallMetric};

pub type Mat3 = [[f64; 3]; 3];

/// A chart metric `g_{αβ}(p)` in three coordinates.
pub trait ChartMetric {
    fn metric(&self, p: [f64; 3]) -> Mat3;
}

impl<F: Fn([f64; 3]) -> Mat3> ChartMetric for F {
    fn metric(&self, p: [f64; 3]) -> Mat3 {
        self(p)
    }
}

/// Riemann and Ricci components at one chart point.
#[derive(Debug, Clone)]
pub struct RiemannAt {
    pub g: Mat3,
    /// `rm[a][b][c][d] = Rm(∂_a, ∂_b, ∂_c, ∂_d)`, with `Rm(X, Y, X, Y)` the
    /// sectional numerator.
    pub rm: [[[[f64; 3]; 3]; 3]; 3],
    pub ricci: Mat3,
}

impl RiemannAt {
    pub fn sectional(&self, a: usize, b: usize) -> f64 {
        let area = self.g[a][a] * self.g[b][b] - self.g[a][b] * self.g[a][b];
        self.rm[a][b][a][b] / area
    }

    pub fn rm_vec(&self, x: [f64; 3], y: [f64; 3], z: [f64; 3], w: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        s += self.rm[a][b][c][d] * x[a] * y[b] * z[c] * w[d];
                    }
                }
            }
        }
        s
    }

    /// Largest |first Bianchi sum| over all index combinations.
    pub fn bianchi_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let s = self.rm[i][j][k][l] + self.rm[i][k][l][j] + self.rm[i][l][j][k];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

fn inverse3(m: &Mat3) -> Option<Mat3> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    Some(inv)
}

fn checked_metric(s: &dyn ChartMetric, p: [f64; 3]) -> Result<Mat3> {
    let g = s.metric(p);
    let scale = g.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    for i in 0..3 {
        for j in 0..i {
            if (g[i][j] - g[j][i]).abs() > 1e-12 * scale {
                return Err(GeomError::Indefinite(format!("non-symmetric sample at {p:?}")));
            }
        }
    }
    let m1 = g[0][0];
    let m2 = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let m3 = m2 * g[2][2] - g[0][0] * g[1][2] * g[2][1] - g[0][1] * g[1][0] * g[2][2]
        + g[0][1] * g[1][2] * g[2][0] + g[0][2] * g[1][0] * g[2][1] - g[0][2] * g[1][1] * g[2][0];
    if !(m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
        return Err(GeomError::Indefinite(format!("indefinite sample at {p:?}")));
    }
    Ok(g)
}

/// Riemann and Ricci tensors at `p` with O(h²) error.
///
/// Uses the all-lowered coordinate formula: second derivatives of `g` plus
/// quadratic Christoffel terms, all by 2nd-order central differences.
pub fn fd_riemann(sampler: &dyn ChartMetric, p: [f64; 3], h: f64) -> Result<RiemannAt> {
    if !(h > 0.0) {
        return Err(GeomError::Parameter(format!("oracle step {h}")));
    }
    let g = checked_metric(sampler, p)?;
    let ginv = inverse3(&g).ok_or_else(|| GeomError::Indefinite(format!("singular at {p:?}")))?;
    let at = |da: [f64; 3]| checked_metric(sampler, [p[0] + da[0], p[1] + da[1], p[2] + da[2]]);
    let unit = |a: usize, s: f64| {
        let mut v = [0.0; 3];
        v[a] = s;
        v
    };
    let mut dg = [[[0.0; 3]; 3]; 3];
    let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
    for m in 0..3 {
        let gp = at(unit(m, h))?;
        let gm = at(unit(m, -h))?;
        for i in 0..3 {
            for j in 0..3 {
                dg[m][i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
                ddg[m][m][i][j] = (gp[i][j] - 2.0 * g[i][j] + gm[i][j]) / (h * h);
            }
        }
        for n in 0..m {
            let mut q = [[[0.0; 3]; 3]; 4];
            for (k, (sm, sn)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
                let mut d = unit(m, sm * h);
                d[n] = sn * h;
                q[k] = at(d)?;
            }
            for i in 0..3 {
                for j in 0..3 {
                    let v = (q[0][i][j] - q[1][i][j] - q[2][i][j] + q[3][i][j]) / (4.0 * h * h);
                    ddg[m][n][i][j] = v;
                    ddg[n][m][i][j] = v;
                }
            }
        }
    }
    // Symmetrize the sampled component pairs so every identity holds to rounding.
    for a in 0..3 {
        for b in 0..3 {
            for i in 0..3 {
                for j in 0..i {
                    let v = 0.5 * (ddg[a][b][i][j] + ddg[a][b][j][i]);
                    ddg[a][b][i][j] = v;
                    ddg[a][b][j][i] = v;
                }
            }
        }
        for i in 0..3 {
            for j in 0..i {
                let v = 0.5 * (dg[a][i][j] + dg[a][j][i]);
                dg[a][i][j] = v;
                dg[a][j][i] = v;
            }
        }
    }
    // Lowered Christoffel symbols [ij, k] and raised ones.
    let mut low = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                low[k][i][j] = 0.5 * (dg[i][k][j] + dg[j][k][i] - dg[k][i][j]);
            }
        }
    }
    let mut gam = [[[0.0; 3]; 3]; 3];
    for l in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                gam[l][i][j] = (0..3).map(|k| ginv[l][k] * low[k][i][j]).sum();
            }
        }
    }
    // rm[a][b][c][d] = <R(∂_a, ∂_b)∂_d, ∂_c>; rm[a][b][a][b] is the sectional numerator.
    let mut rm = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let lin = 0.5 * (ddg[b][c][a][d] + ddg[a][d][b][c] - ddg[b][d][a][c] - ddg[a][c][b][d]);
                    let mut quad = 0.0;
                    for m in 0..3 {
                        quad += low[m][b][c] * gam[m][a][d] - low[m][b][d] * gam[m][a][c];
                    }
                    rm[a][b][c][d] = lin + quad;
                }
            }
        }
    }
    let mut ricci = [[0.0; 3]; 3];
    for b in 0..3 {
        for d in 0..3 {
            let mut v = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    v += ginv[a][c] * rm[a][b][c][d];
                }
            }
            ricci[b][d] = v;
        }
    }
    Ok(RiemannAt { g, rm, ricci })
}

/// `dr² + w(r)²(dθ² + sin²θ dφ²)` in chart coordinates `(r, θ, φ)`.
pub fn warped_chart(w: impl Fn(f64) -> f64) -> impl Fn([f64; 3]) -> Mat3 {
    move |p: [f64; 3]| {
        let ww = w(p[0]);
        let s = p[1].sin();
        [[1.0, 0.0, 0.0], [0.0, ww * ww, 0.0], [0.0, 0.0, ww * ww * s * s]]
    }
}

/// The same metric in `(r, x, φ)` with `x = cos θ`:
/// `dr² + w²(dx²/(1 − x²) + (1 − x²)dφ²)`.
///
/// At `x = 0` every angular difference is exact by parity, so the oracle
/// error comes from the radial direction alone.
pub fn warped_chart_cos(w: impl Fn(f64) -> f64) -> impl Fn([f64; 3]) -> Mat3 {
    move |p: [f64; 3]| {
        let ww = w(p[0]);
        let q = 1.0 - p[1] * p[1];
        [[1.0, 0.0, 0.0], [0.0, ww * ww / q, 0.0], [0.0, 0.0, ww * ww * q]]
    }
}

/// Oracle values of `(K_mixed, K_tan, Ric(∂_r, ∂_r), Ric_tan)` at radius `r`
/// for a sampler in the `warped_chart_cos` coordinates.
pub fn warped_oracle(sampler: &dyn ChartMetric, r: f64, h: f64) -> Result<[f64; 4]> {
    let o = fd_riemann(sampler, [r, 0.0, 0.3], h)?;
    Ok([o.sectional(1, 0), o.sectional(1, 2), o.ricci[0][0], o.ricci[1][1] / o.g[1][1]])
}

/// `dr² + w²·g_round` near a pole, in Cartesian coordinates `x = u·n` where
/// `u` is the distance from the pole. Unlike the polar charts this one is
/// regular at the pole, so the oracle error does not grow like `h²/u²`.
pub fn warped_chart_cartesian(w_of_u: impl Fn(f64) -> f64) -> impl Fn([f64; 3]) -> Mat3 {
    move |x: [f64; 3]| {
        let u = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let f = (w_of_u(u) / u).powi(2);
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = (1.0 - f) * x[i] * x[j] / (u * u) + if i == j { f } else { 0.0 };
            }
        }
        g
    }
}

/// As [`warped_oracle`], for a `warped_chart_cartesian` sampler at distance
/// `u` from the pole.
pub fn cartesian_oracle(sampler: &dyn ChartMetric, u: f64, h: f64) -> Result<[f64; 4]> {
    let o = fd_riemann(sampler, [u, 0.0, 0.0], h)?;
    Ok([o.sectional(0, 1), o.sectional(1, 2), o.ricci[0][0] / o.g[0][0], o.ricci[1][1] / o.g[1][1]])
}

/// Closed-form reference: sampled metric plus exact curvature from jets.
pub fn reference_metric(profile: &Profile, n_points: usize) -> Result<(WarpedBallMetric, CurvatureField)> {
    if matches!(profile, Profile::Samples { .. }) {
        return Err(GeomError::Profile("reference metrics are analytic profiles only".into()));
    }
    let m = build_warped(profile, n_points)?;
    let r = m.grid.nodes();
    let derivs: Vec<[f64; 4]> = r
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let j = profile.jet_from_center(Profile::center_offset(&m.grid, i)).expect("analytic");
            let v = if i == 0 { 0.0 } else { j.value() };
            [v, j.d(1), j.d(2), j.d(3)]
        })
        .collect();
    Ok((m, warped_curvature_exact(&r, &derivs)))
}

/// Parse a reference name such as `flat_ball`, `hemisphere`, `round_cap:pi/3`.
pub fn reference_by_name(name: &str, n_points: usize) -> Result<(WarpedBallMetric, CurvatureField)> {
    let p: Profile = name.parse()?;
    reference_metric(&p, n_points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckEntry {
    pub component: String,
    pub max_dev: f64,
    /// Radial coordinate of the largest deviation.
    pub location: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub entries: Vec<CrosscheckEntry>,
    pub pass: bool,
    pub points_checked: usize,
    /// Nodes where the oracle's roundoff floor exceeds `tol/10`: `ε/(h²w²)`
    /// in the polar chart, `ε/(h²u)` in the Cartesian one.
    pub points_ill_conditioned: usize,
}

pub const COMPONENTS: [&str; 4] = ["k_mixed", "k_tan", "ricci_radial", "ricci_tangential"];

/// Compare the engine against the oracle at every admissible gridpoint.
///
/// Nodes within three spacings of a break or of an interval end are skipped;
/// second differences across a C¹ interface are meaningless. Nodes close to a
/// pole, where the oracle's own rounding error would exceed `tol/10`, are
/// counted but not compared.
pub fn crosscheck(m: &WarpedBallMetric, tol: f64) -> CrosscheckReport {
    let engine = match warped_curvature(m) {
        Ok(c) => c,
        Err(e) => {
            return CrosscheckReport {
                entries: vec![CrosscheckEntry { component: format!("engine: {e}"), max_dev: f64::INFINITY,
                                                location: f64::NAN, pass: false }],
                pass: false,
                points_checked: 0,
                points_ill_conditioned: 0,
            }
        }
    };
    let line = m.line();
    let sampler = warped_chart_cos(|r: f64| line.interp(r, 0, Side::Left)[0]);
    let collar = 3.0 * m.grid.spacing;
    let h = (0.5 * m.grid.spacing).min(1e-3);
    let breaks = m.break_positions();
    let (pole_lo, pole_hi) = (m.pole_lo(), m.pole_hi());
    let mut worst = [(0.0f64, f64::NAN); 4];
    let mut checked = 0;
    let mut ill = 0;
    let mut failed_eval = None;
    for i in 0..m.n() {
        let r = m.grid.r(i);
        if r - m.grid.r_min < collar - 1e-12 || m.grid.r_max - r < collar - 1e-12 {
            continue;
        }
        if breaks.iter().any(|b| (r - b).abs() <= collar + 1e-12) {
            continue;
        }
        // Sample around the nearer pole in Cartesian coordinates. The polar
        // chart's error grows like h²/u² and still exceeds 10h² at u ~ L/4.
        let from_lo = i as f64 * m.grid.spacing;
        let from_hi = (m.n() - 1 - i) as f64 * m.grid.spacing;
        let pole = if pole_lo && (from_lo <= from_hi || !pole_hi) {
            Some((from_lo, false))
        } else if pole_hi {
            Some((from_hi, true))
        } else {
            None
        };
        let floor = match pole {
            Some((u, _)) => f64::EPSILON / (h * h * u),
            None => f64::EPSILON / (h * h * m.w[i] * m.w[i]),
        };
        if !(floor <= 0.1 * tol) {
            ill += 1;
            continue;
        }
        // Keep the oracle stencil on the node's side of any break.
        let side_sampler = |p: [f64; 3]| {
            let side = if breaks.iter().any(|b| p[0] < *b && r >= *b) { Side::Right } else { Side::Left };
            let ww = line.interp(p[0], 0, side)[0];
            let q = 1.0 - p[1] * p[1];
            [[1.0, 0.0, 0.0], [0.0, ww * ww / q, 0.0], [0.0, 0.0, ww * ww * q]]
        };
        let o = if let Some((u, high)) = pole {
            let top = (m.n() - 1) as f64;
            let side = if high { Side::Right } else { Side::Left };
            let chart = warped_chart_cartesian(|v: f64| {
                let p = if high { top - v / m.grid.spacing } else { v / m.grid.spacing };
                line.interp_pos(p, 0, side)[0]
            });
            cartesian_oracle(&chart, u, h)
        } else if breaks.is_empty() {
            warped_oracle(&sampler, r, h)
        } else {
            warped_oracle(&side_sampler, r, h)
        };
        let o = match o {
            Ok(o) => o,
            Err(e) => {
                failed_eval = Some(format!("{e}"));
                continue;
            }
        };
        checked += 1;
        let eng = [engine.k_mixed[i][0], engine.k_tan[i], engine.ricci_radial[i], engine.ricci_tangential[i][0]];
        for c in 0..4 {
            let d = (o[c] - eng[c]).abs();
            if !(d <= worst[c].0) {
                worst[c] = (d, r);
            }
        }
    }
    let mut entries: Vec<CrosscheckEntry> = COMPONENTS
        .iter()
        .zip(worst)
        .map(|(name, (d, loc))| CrosscheckEntry { component: name.to_string(), max_dev: d, location: loc,
                                                  pass: d < tol })
        .collect();
    if let Some(e) = failed_eval {
        entries.push(CrosscheckEntry { component: format!("oracle: {e}"), max_dev: f64::INFINITY,
                                       location: f64::NAN, pass: false });
    }
    let pass = checked > 0 && entries.iter().all(|e| e.pass);
    CrosscheckReport { entries, pass, points_checked: checked, points_ill_conditioned: ill }
}
