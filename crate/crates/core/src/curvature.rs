//! Curvature of `dr² + gʳ` in Fermi coordinates.
//!
//! Mixed curvatures come from `K(∂_i, ∂_r) = -½ g''_ii + ¼ g^{pl} g'_ip g'_il`,
//! tangential ones from the Gauss equation. For the warped case
//! `gʳ = w²·round` these reduce to `K_mixed = -w''/w` and
//! `K_tan = (1 - w'²)/w²`; at a pole both tend to `-w'''/w'`.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::line::Side;
use crate::metric::WarpedBallMetric;

/// Symmetric 2×2 tensor `[xx, xy, yy]` at one slice point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2(pub [f64; 3]);

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2([1.0, 0.0, 1.0]);

    pub fn scaled(self, s: f64) -> Sym2 {
        Sym2([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn det(&self) -> f64 {
        self.0[0] * self.0[2] - self.0[1] * self.0[1]
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2([self.0[2] / d, -self.0[1] / d, self.0[0] / d]))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.0[0] * v[0] + self.0[1] * v[1], self.0[1] * v[0] + self.0[2] * v[1]]
    }

    pub fn quad(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let t = self.apply(b);
        a[0] * t[0] + a[1] * t[1]
    }

    /// Eigenvalues (ascending) and unit eigenvectors.
    pub fn eigen(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let [a, b, c] = self.0;
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let l0 = mean - rad;
        let l1 = mean + rad;
        let v1 = if b.abs() > 1e-300 {
            let v = [b, l1 - a];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        } else if a >= c {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        let v0 = [-v1[1], v1[0]];
        ([l0, l1], [v0, v1])
    }

    /// Generalized eigenvalues of `self` against the positive definite `g`.
    pub fn relative_eigen(&self, g: &Sym2) -> Result<[f64; 2]> {
        if !(g.0[0] > 0.0 && g.det() > 0.0) {
            return Err(GeomError::Indefinite(format!("{:?}", g.0)));
        }
        // g = L Lᵀ, eigenvalues of L⁻¹ A L⁻ᵀ.
        let l11 = g.0[0].sqrt();
        let l21 = g.0[1] / l11;
        let l22 = (g.0[2] - l21 * l21).sqrt();
        let [a, b, c] = self.0;
        let m11 = a / (l11 * l11);
        let m21 = (b - l21 * m11 * l11) / (l11 * l22);
        let m22 = (c - 2.0 * l21 * b / l11 + l21 * l21 * a / (l11 * l11)) / (l22 * l22);
        Ok(Sym2([m11, m21, m22]).eigen().0)
    }
}

/// A tensor on a radial slice: either a multiple of the round metric
/// (warped metrics) or a sampled field over the slice chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SymmetricForm {
    Round(f64),
    Field(Vec<Sym2>),
}

impl SymmetricForm {
    pub fn round_coefficient(&self) -> Option<f64> {
        match self {
            SymmetricForm::Round(c) => Some(*c),
            SymmetricForm::Field(_) => None,
        }
    }
}

/// Generalized eigenvalue range of `a` against `g` over all points of a slice.
pub fn relative_eigen_range(a: &SymmetricForm, g: &SymmetricForm) -> Result<(f64, f64)> {
    match (a, g) {
        (SymmetricForm::Round(x), SymmetricForm::Round(y)) => {
            if !(*y > 0.0) {
                return Err(GeomError::Indefinite(format!("round coefficient {y}")));
            }
            Ok((x / y, x / y))
        }
        (SymmetricForm::Field(xs), SymmetricForm::Field(gs)) => {
            if xs.len() != gs.len() || xs.is_empty() {
                return Err(GeomError::Parameter("slice fields differ in size".into()));
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (x, g) in xs.iter().zip(gs) {
                let e = x.relative_eigen(g)?;
                lo = lo.min(e[0]);
                hi = hi.max(e[1]);
            }
            Ok((lo, hi))
        }
        (SymmetricForm::Round(x), SymmetricForm::Field(gs)) => {
            let xs = vec![Sym2::IDENTITY.scaled(*x); gs.len()];
            relative_eigen_range(&SymmetricForm::Field(xs), g)
        }
        (SymmetricForm::Field(xs), SymmetricForm::Round(y)) => {
            let gs = vec![Sym2::IDENTITY.scaled(*y); xs.len()];
            relative_eigen_range(a, &SymmetricForm::Field(gs))
        }
    }
}

/// Pointwise curvature data. Tangential directions are the two vectors of a
/// slice-orthonormal eigenframe; for warped metrics they coincide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub r: Vec<f64>,
    /// Points per radial slice (1 for warped metrics).
    pub slice_points: usize,
    pub k_mixed: Vec<[f64; 2]>,
    pub k_tan: Vec<f64>,
    pub ricci_radial: Vec<f64>,
    pub ricci_tangential: Vec<[f64; 2]>,
    pub scalar: Vec<f64>,
    pub min_ricci_eig: f64,
    /// Second fundamental form `-½ ∂_r gʳ` of each radial slice.
    pub slice_ii: Vec<SymmetricForm>,
    /// Trace of the slice form against `gʳ`, per slice point (NaN at poles).
    pub mean_curvature: Vec<Vec<f64>>,
}

impl CurvatureField {
    fn assemble(r: Vec<f64>, slice_points: usize, k_mixed: Vec<[f64; 2]>, k_tan: Vec<f64>,
                slice_ii: Vec<SymmetricForm>, mean_curvature: Vec<Vec<f64>>) -> Self {
        let ricci_radial: Vec<f64> = k_mixed.iter().map(|k| k[0] + k[1]).collect();
        let ricci_tangential: Vec<[f64; 2]> =
            k_mixed.iter().zip(&k_tan).map(|(k, t)| [k[0] + t, k[1] + t]).collect();
        let scalar = k_mixed.iter().zip(&k_tan).map(|(k, t)| 2.0 * (k[0] + k[1] + t)).collect();
        let min_ricci_eig = ricci_radial
            .iter()
            .chain(ricci_tangential.iter().flatten())
            .fold(f64::INFINITY, |a, &b| a.min(b));
        CurvatureField { r, slice_points, k_mixed, k_tan, ricci_radial, ricci_tangential, scalar,
                         min_ricci_eig, slice_ii, mean_curvature }
    }

    /// Smallest Ricci diagonal entry over points whose radial coordinate
    /// satisfies `keep`.
    pub fn min_ricci_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        let mut m = f64::INFINITY;
        for (k, &rad) in self.ricci_radial.iter().enumerate() {
            if keep(self.r[k / self.slice_points]) {
                let t = self.ricci_tangential[k];
                m = m.min(rad).min(t[0]).min(t[1]);
            }
        }
        m
    }

    pub fn n_points(&self) -> usize {
        self.k_tan.len()
    }
}

/// Curvature of a sampled warped metric with fourth-order differences.
pub fn warped_curvature(m: &WarpedBallMetric) -> Result<CurvatureField> {
    m.validate()?;
    let line = m.line();
    let n = m.n();
    let (pole_lo, pole_hi) = (m.pole_lo(), m.pole_hi());
    let mut k_mixed = Vec::with_capacity(n);
    let mut k_tan = Vec::with_capacity(n);
    let mut slice_ii = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    // Next to a pole K_tan divides the error of w' by w², so fourth-order
    // stencils would leave only O(h²) there; sixth order restores O(h⁴).
    let reach = 0.25 * m.grid.length();
    let near_pole = |i: usize| {
        (pole_lo && i as f64 * m.grid.spacing < reach) || (pole_hi && (n - 1 - i) as f64 * m.grid.spacing < reach)
    };
    let deriv = |i: usize, d: usize| {
        let half = if d <= 2 { 3 } else { 4 };
        near_pole(i).then(|| line.deriv_central(i, d, half)).flatten().unwrap_or_else(|| line.deriv(i, d))
    };
    for i in 0..n {
        let w = m.w[i];
        let w1 = deriv(i, 1);
        let is_pole = (i == 0 && pole_lo) || (i + 1 == n && pole_hi);
        let (km, kt, h) = if is_pole {
            let k = -deriv(i, 3) / w1;
            (k, k, f64::NAN)
        } else {
            let w2 = deriv(i, 2);
            (-w2 / w, (1.0 - w1 * w1) / (w * w), -2.0 * w1 / w)
        };
        if !km.is_finite() || !kt.is_finite() {
            return Err(GeomError::NonFinite(format!("curvature at r = {}", m.grid.r(i))));
        }
        k_mixed.push([km, km]);
        k_tan.push(kt);
        slice_ii.push(SymmetricForm::Round(-w * w1));
        mean.push(vec![h]);
    }
    Ok(CurvatureField::assemble(m.grid.nodes(), 1, k_mixed, k_tan, slice_ii, mean))
}

/// Curvature computed from exact derivatives `(w, w', w'', w''')` per node.
pub fn warped_curvature_exact(r: &[f64], derivs: &[[f64; 4]]) -> CurvatureField {
    let mut k_mixed = Vec::new();
    let mut k_tan = Vec::new();
    let mut slice_ii = Vec::new();
    let mut mean = Vec::new();
    for d in derivs {
        let [w, w1, w2, w3] = *d;
        if w.abs() < 1e-13 {
            let k = -w3 / w1;
            k_mixed.push([k, k]);
            k_tan.push(k);
            mean.push(vec![f64::NAN]);
        } else {
            k_mixed.push([-w2 / w, -w2 / w]);
            k_tan.push((1.0 - w1 * w1) / (w * w));
            mean.push(vec![-2.0 * w1 / w]);
        }
        slice_ii.push(SymmetricForm::Round(-w * w1));
    }
    CurvatureField::assemble(r.to_vec(), 1, k_mixed, k_tan, slice_ii, mean)
}

pub(crate) fn band_field(r: Vec<f64>, slice_points: usize, k_mixed: Vec<[f64; 2]>, k_tan: Vec<f64>,
                         slice_ii: Vec<SymmetricForm>, mean: Vec<Vec<f64>>) -> CurvatureField {
    CurvatureField::assemble(r, slice_points, k_mixed, k_tan, slice_ii, mean)
}

/// Second fundamental form of the slice `{r}` (engine convention
/// `II = Γ⁰_ij = -½ (gʳ)'`) and its mean curvature.
pub fn second_fundamental_form(m: &WarpedBallMetric, r: f64) -> Result<(SymmetricForm, f64)> {
    if !m.grid.contains(r) {
        return Err(GeomError::SliceOutside(r));
    }
    let side = if r >= m.grid.r_max - 1e-12 { Side::Left } else { Side::Right };
    let d = match m.grid.node_at(r) {
        Some(i) => {
            let line = m.line();
            vec![m.w[i], line.deriv_side(i, 1, side)]
        }
        None => m.eval(r, 1, side)?,
    };
    let (w, w1) = (d[0], d[1]);
    let h = if w.abs() < 1e-13 { f64::NAN } else { -2.0 * w1 / w };
    Ok((SymmetricForm::Round(-w * w1), h))
}

/// Relative eigenvalue of the boundary form against the slice metric at the
/// boundary `r = r_max` (both eigenvalues coincide for warped metrics).
pub fn boundary_ii_eig(m: &WarpedBallMetric) -> Result<f64> {
    let r = m.grid.r_max;
    let (ii, _) = second_fundamental_form(m, r)?;
    let w = m.w[m.n() - 1];
    Ok(relative_eigen_range(&ii, &SymmetricForm::Round(w * w))?.1)
}

/// The footnote-convention quantity `(gʳ)' = -2·II`.
pub fn slice_metric_derivative(ii: &SymmetricForm) -> SymmetricForm {
    match ii {
        SymmetricForm::Round(c) => SymmetricForm::Round(-2.0 * c),
        SymmetricForm::Field(v) => SymmetricForm::Field(v.iter().map(|s| s.scaled(-2.0)).collect()),
    }
}
