//! Browser bindings: curvature of a profile, gluing of the doubled flat ball,
//! and the conformal collar deformation. Every call returns a JSON string
//! that the page plots.

use capdeform::curvature::{boundary_ii_eig, warped_curvature, CurvatureField};
use capdeform::deform::{conformal_collar, double, glue_interpolate};
use capdeform::metric::{build_warped, Profile, WarpedBallMetric};
use capdeform::verdict::{check_membership, MetricClass};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps a call well under a second.
const MAX_POINTS: usize = 4097;

fn grid_size(n: usize) -> Result<usize, String> {
    if !(17..=MAX_POINTS).contains(&n) {
        return Err(format!("grid size {n} outside [17, {MAX_POINTS}]"));
    }
    Ok(n)
}

fn profile_metric(profile: &str, n: usize) -> Result<WarpedBallMetric, String> {
    let p: Profile = profile.parse().map_err(|e| format!("{e}"))?;
    if matches!(p, Profile::Samples { .. }) {
        return Err("sampled profiles are not available in the browser".into());
    }
    build_warped(&p, grid_size(n)?).map_err(|e| format!("{e}"))
}

/// Thin every series to at most `max` points for plotting.
fn thin(v: &[f64], max: usize) -> Vec<f64> {
    let step = v.len().div_ceil(max).max(1);
    let mut out: Vec<f64> = v.iter().step_by(step).copied().collect();
    if !(v.len() - 1).is_multiple_of(step) {
        out.push(v[v.len() - 1]);
    }
    out
}

fn field_json(m: &WarpedBallMetric) -> Result<(Value, CurvatureField), String> {
    let c = warped_curvature(m).map_err(|e| format!("{e}"))?;
    let tan: Vec<f64> = c.ricci_tangential.iter().map(|t| t[0]).collect();
    let km: Vec<f64> = c.k_mixed.iter().map(|k| k[0]).collect();
    let v = json!({
        "r": thin(&c.r, 400),
        "w": thin(&m.w, 400),
        "k_mixed": thin(&km, 400),
        "k_tan": thin(&c.k_tan, 400),
        "ricci_radial": thin(&c.ricci_radial, 400),
        "ricci_tangential": thin(&tan, 400),
        "min_ricci_eig": c.min_ricci_eig,
    });
    Ok((v, c))
}

pub fn curvature_json(profile: &str, n: usize) -> Result<String, String> {
    let m = profile_metric(profile, n)?;
    let mut out = field_json(&m)?.0;
    let verdicts: Vec<Value> = [MetricClass::C, MetricClass::C0, MetricClass::D]
        .iter()
        .map(|&k| {
            let v = check_membership(&m, k, None);
            json!({ "class": k.to_string(), "pass": v.pass, "tol": v.tol })
        })
        .collect();
    out["boundary_ii_eig"] = json!(boundary_ii_eig(&m).ok());
    out["verdicts"] = json!(verdicts);
    Ok(out.to_string())
}

pub fn glue_json(rho: f64, n: usize) -> Result<String, String> {
    let flat = build_warped(&Profile::FlatBall(1.0), grid_size(n)?).map_err(|e| format!("{e}"))?;
    let d = double(&flat).map_err(|e| format!("{e}"))?.0;
    let (g, diag) = glue_interpolate(&d, rho).map_err(|e| format!("{e}"))?;
    let (mut out, field) = field_json(&g)?;
    out["rho"] = json!(rho);
    out["eqper_margin"] = json!(diag.eqper_margin);
    out["ricci_min_interior"] = json!(diag.ricci_min_interior);
    out["ricci_radial_center_times_rho"] = json!(field.ricci_radial[g.n() / 2] * rho);
    Ok(out.to_string())
}

pub fn collar_json(eps: f64, s: f64, n: usize) -> Result<String, String> {
    let flat = build_warped(&Profile::FlatBall(1.0), grid_size(n)?).map_err(|e| format!("{e}"))?;
    let c = conformal_collar(&flat, eps, s).map_err(|e| format!("{e}"))?;
    let mut out = field_json(&c.metric)?.0;
    out["s"] = json!(s);
    out["critical_s"] = json!(c.critical_s);
    out["boundary_ii_eig"] = json!(c.boundary_ii_eig);
    out["min_ricci_near_boundary"] = json!(c.min_ricci_near_boundary);
    out["collar_start"] = json!(c.collar_start);
    Ok(out.to_string())
}

fn to_js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Curvature field, boundary form and class verdicts of a named profile.
#[wasm_bindgen]
pub fn curvature(profile: &str, n: usize) -> Result<String, JsError> {
    to_js(curvature_json(profile, n))
}

/// The doubled unit flat ball glued across `[−ρ, ρ]`.
#[wasm_bindgen]
pub fn glue(rho: f64, n: usize) -> Result<String, JsError> {
    to_js(glue_json(rho, n))
}

/// `e^{−2sf}·g` on the unit flat ball with collar width `eps`.
#[wasm_bindgen]
pub fn collar(eps: f64, s: f64, n: usize) -> Result<String, JsError> {
    to_js(collar_json(eps, s, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hemisphere_is_c0_not_c() {
        let v: Value = serde_json::from_str(&curvature_json("hemisphere", 257).unwrap()).unwrap();
        let pass: Vec<bool> = v["verdicts"].as_array().unwrap().iter().map(|x| x["pass"].as_bool().unwrap()).collect();
        assert_eq!(pass, [false, true, false]);
        assert!(v["r"].as_array().unwrap().len() <= 401);
    }

    #[test]
    fn glue_reports_inverse_rho_peak() {
        let v: Value = serde_json::from_str(&glue_json(0.1, 1025).unwrap()).unwrap();
        assert!(v["eqper_margin"].as_f64().unwrap() > 0.0);
        let peak = v["ricci_radial_center_times_rho"].as_f64().unwrap();
        assert!((peak - 2.0).abs() < 1e-3, "{peak}");
    }

    #[test]
    fn bad_requests_are_errors() {
        assert!(curvature_json("torus", 257).is_err());
        assert!(curvature_json("hemisphere", 5).is_err());
        assert!(glue_json(0.9, 257).is_err());
        assert!(collar_json(0.5, 10.0, 257).is_err());
        let v: Value = serde_json::from_str(&collar_json(0.5, 0.05, 513).unwrap()).unwrap();
        assert!(v["boundary_ii_eig"].as_f64().unwrap() < 0.0);
    }
}
