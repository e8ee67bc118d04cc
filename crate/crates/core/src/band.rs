//! General Fermi-band metrics `dr² + gʳ_ij(r, x)` over a periodic 2-D chart.

use serde::{Deserialize, Serialize};

use crate::curvature::{band_field, CurvatureField, Sym2, SymmetricForm};
use crate::error::{GeomError, Result};
use crate::grid::RadialGrid;
use crate::line::{Ghost, Line};
use crate::stencil::{D1_C4, D2_C4};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMetric {
    pub grid: RadialGrid,
    pub nx: usize,
    pub ny: usize,
    pub cross_dim: usize,
    /// Row-major `[ir][iy][ix]`.
    pub comps: Vec<Sym2>,
}

/// On-disk layout: grid descriptors plus row-major component arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandMetricJson {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub nx: usize,
    pub ny: usize,
    pub cross_dim: usize,
    pub g_xx: Vec<f64>,
    pub g_xy: Vec<f64>,
    pub g_yy: Vec<f64>,
}

impl BandMetric {
    pub fn new(grid: RadialGrid, nx: usize, ny: usize, comps: Vec<Sym2>) -> Result<Self> {
        let m = BandMetric { grid, nx, ny, cross_dim: 2, comps };
        m.validate()?;
        Ok(m)
    }

    /// Sample `f(r, x, y)` on the unit-square torus chart.
    pub fn from_fn(grid: RadialGrid, nx: usize, ny: usize, f: impl Fn(f64, f64, f64) -> Sym2) -> Result<Self> {
        let mut comps = Vec::with_capacity(grid.n_points * nx * ny);
        for ir in 0..grid.n_points {
            let r = grid.r(ir);
            for iy in 0..ny {
                for ix in 0..nx {
                    comps.push(f(r, ix as f64 / nx as f64, iy as f64 / ny as f64));
                }
            }
        }
        Self::new(grid, nx, ny, comps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cross_dim != 2 {
            return Err(GeomError::Parameter(format!("cross_dim {} (chart is two-dimensional)", self.cross_dim)));
        }
        if self.nx < 5 || self.ny < 5 {
            return Err(GeomError::Grid("chart needs at least 5 points per direction".into()));
        }
        if self.comps.len() != self.grid.n_points * self.nx * self.ny {
            return Err(GeomError::Grid("component array has wrong length".into()));
        }
        for (k, s) in self.comps.iter().enumerate() {
            if !(s.0[0] > 0.0 && s.det() > 0.0) {
                return Err(GeomError::Indefinite(format!("band point {k}")));
            }
        }
        Ok(())
    }

    #[inline]
    fn idx(&self, ir: usize, ix: usize, iy: usize) -> usize {
        (ir * self.ny + iy % self.ny) * self.nx + ix % self.nx
    }

    pub fn slice_points(&self) -> usize {
        self.nx * self.ny
    }

    pub fn to_json(&self) -> BandMetricJson {
        BandMetricJson {
            r_min: self.grid.r_min,
            r_max: self.grid.r_max,
            n_r: self.grid.n_points,
            nx: self.nx,
            ny: self.ny,
            cross_dim: self.cross_dim,
            g_xx: self.comps.iter().map(|s| s.0[0]).collect(),
            g_xy: self.comps.iter().map(|s| s.0[1]).collect(),
            g_yy: self.comps.iter().map(|s| s.0[2]).collect(),
        }
    }

    pub fn from_json(j: &BandMetricJson) -> Result<Self> {
        let grid = RadialGrid::new(j.r_min, j.r_max, j.n_r)?;
        if j.g_xx.len() != j.g_xy.len() || j.g_xy.len() != j.g_yy.len() {
            return Err(GeomError::Parse("component arrays differ in length".into()));
        }
        let comps = (0..j.g_xx.len()).map(|k| Sym2([j.g_xx[k], j.g_xy[k], j.g_yy[k]])).collect();
        let m = BandMetric { grid, nx: j.nx, ny: j.ny, cross_dim: j.cross_dim, comps };
        m.validate()?;
        Ok(m)
    }

    /// Radial derivatives of each component at every point.
    fn radial_derivs(&self, d: usize) -> Vec<Sym2> {
        let n_r = self.grid.n_points;
        let mut out = vec![Sym2([0.0; 3]); self.comps.len()];
        let mut col = vec![0.0; n_r];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                for c in 0..3 {
                    for ir in 0..n_r {
                        col[ir] = self.comps[self.idx(ir, ix, iy)].0[c];
                    }
                    let line = Line::new(&col, self.grid.r_min, self.grid.spacing, &[], Ghost::None, Ghost::None);
                    for ir in 0..n_r {
                        let k = self.idx(ir, ix, iy);
                        out[k].0[c] = line.deriv(ir, d);
                    }
                }
            }
        }
        out
    }

    /// Gauss curvature of the slice metric at `(ir, ix, iy)` (Brioschi formula).
    fn slice_gauss(&self, ir: usize, ix: usize, iy: usize) -> f64 {
        let hx = 1.0 / self.nx as f64;
        let hy = 1.0 / self.ny as f64;
        let c = |dx: i64, dy: i64, k: usize| -> f64 {
            let x = (ix as i64 + dx).rem_euclid(self.nx as i64) as usize;
            let y = (iy as i64 + dy).rem_euclid(self.ny as i64) as usize;
            self.comps[self.idx(ir, x, y)].0[k]
        };
        let du = |k: usize| (0..5).map(|j| D1_C4[j] * c(j as i64 - 2, 0, k)).sum::<f64>() / hx;
        let dv = |k: usize| (0..5).map(|j| D1_C4[j] * c(0, j as i64 - 2, k)).sum::<f64>() / hy;
        let duu = |k: usize| (0..5).map(|j| D2_C4[j] * c(j as i64 - 2, 0, k)).sum::<f64>() / (hx * hx);
        let dvv = |k: usize| (0..5).map(|j| D2_C4[j] * c(0, j as i64 - 2, k)).sum::<f64>() / (hy * hy);
        let duv = |k: usize| {
            let mut s = 0.0;
            for a in 0..5 {
                for b in 0..5 {
                    s += D1_C4[a] * D1_C4[b] * c(a as i64 - 2, b as i64 - 2, k);
                }
            }
            s / (hx * hy)
        };
        let (e, f, g) = (c(0, 0, 0), c(0, 0, 1), c(0, 0, 2));
        let (eu, ev, fu, fv, gu, gv) = (du(0), dv(0), du(1), dv(1), du(2), dv(2));
        let (evv, guu, fuv) = (dvv(0), duu(2), duv(1));
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let a = det3([
            [-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev],
            [fv - 0.5 * gu, e, f],
            [0.5 * gv, f, g],
        ]);
        let b = det3([[0.0, 0.5 * ev, 0.5 * gu], [0.5 * ev, e, f], [0.5 * gu, f, g]]);
        let den = e * g - f * f;
        (a - b) / (den * den)
    }
}

/// Curvature of a band metric, evaluated in a slice-orthonormal eigenframe of
/// `gʳ` at every gridpoint.
pub fn band_curvature(m: &BandMetric) -> Result<CurvatureField> {
    m.validate()?;
    let d1 = m.radial_derivs(1);
    let d2 = m.radial_derivs(2);
    let sp = m.slice_points();
    let n = m.comps.len();
    let mut k_mixed = Vec::with_capacity(n);
    let mut k_tan = Vec::with_capacity(n);
    let mut slice_ii = Vec::with_capacity(m.grid.n_points);
    let mut mean = Vec::with_capacity(m.grid.n_points);
    for ir in 0..m.grid.n_points {
        let mut ii = Vec::with_capacity(sp);
        let mut hs = Vec::with_capacity(sp);
        for iy in 0..m.ny {
            for ix in 0..m.nx {
                let k = m.idx(ir, ix, iy);
                let g = m.comps[k];
                let gp = d1[k];
                let gpp = d2[k];
                let ginv = g.inverse().ok_or_else(|| GeomError::Indefinite(format!("band point {k}")))?;
                let (lam, vecs) = g.eigen();
                if !(lam[0] > 0.0) {
                    return Err(GeomError::Indefinite(format!("band point {k}")));
                }
                let e = [
                    [vecs[0][0] / lam[0].sqrt(), vecs[0][1] / lam[0].sqrt()],
                    [vecs[1][0] / lam[1].sqrt(), vecs[1][1] / lam[1].sqrt()],
                ];
                let mixed = |v: [f64; 2]| {
                    let t = gp.apply(v);
                    -0.5 * gpp.quad(v, v) + 0.25 * ginv.quad(t, t)
                };
                let km = [mixed(e[0]), mixed(e[1])];
                let ks = m.slice_gauss(ir, ix, iy);
                let g12 = gp.quad(e[0], e[1]);
                let kt = ks + 0.25 * (g12 * g12 - gp.quad(e[0], e[0]) * gp.quad(e[1], e[1]));
                if !km[0].is_finite() || !km[1].is_finite() || !kt.is_finite() {
                    return Err(GeomError::NonFinite(format!("band point {k}")));
                }
                k_mixed.push(km);
                k_tan.push(kt);
                let form = gp.scaled(-0.5);
                let trace = ginv.0[0] * form.0[0] + 2.0 * ginv.0[1] * form.0[1] + ginv.0[2] * form.0[2];
                ii.push(form);
                hs.push(trace);
            }
        }
        slice_ii.push(SymmetricForm::Field(ii));
        mean.push(hs);
    }
    Ok(band_field(m.grid.nodes(), sp, k_mixed, k_tan, slice_ii, mean))
}

/// Second fundamental form of the band slice at node `r`.
pub fn band_second_fundamental_form(m: &BandMetric, r: f64) -> Result<(SymmetricForm, Vec<f64>)> {
    let ir = m.grid.node_at(r).ok_or(GeomError::SliceOutside(r))?;
    let c = band_curvature(m)?;
    Ok((c.slice_ii[ir].clone(), c.mean_curvature[ir].clone()))
}
