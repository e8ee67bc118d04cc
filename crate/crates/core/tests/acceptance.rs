//! Acceptance criteria 1–9. Runs as a plain binary so every criterion prints
//! one line; exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use capdeform::band::{band_curvature, BandMetric};
use capdeform::curvature::{second_fundamental_form, warped_curvature, warped_curvature_exact, Sym2};
use capdeform::deform::{
    conformal_collar, double, glue_interpolate, hessian_laplacian_check, smooth_c1, smooth_c1_fixed, CollarFunction,
};
use capdeform::flow::{consistency_residual, max_step, run_flow, run_flow_from, FlowMode, FlowOptions, FlowState};
use capdeform::grid::RadialGrid;
use capdeform::metric::{build_warped, Profile};
use capdeform::oracle::{crosscheck, reference_by_name};
use capdeform::pipeline::{build_path, PathParams, PathRun, Theorem};
use capdeform::report::write_csv;
use capdeform::verdict::default_tolerance;
use common::{field_deviation, glued_flat_ball, ClosedFormSphere, SmoothBall};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn curvature_engine() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["flat_ball", "hemisphere", "round_cap:pi/4"] {
        let (m, exact) = reference_by_name(name, 1025).unwrap();
        worst = worst.max(field_deviation(&warped_curvature(&m).unwrap(), &exact));
    }
    let ball = SmoothBall { radius: 1.0, k: 0.0, a: 0.1, b: 2.0 };
    // At 513 points the error reaches the ε/h² rounding floor of the stencils.
    let sizes = [33usize, 65, 129, 257];
    let errs: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let m = ball.metric(n);
            let exact = warped_curvature_exact(&m.grid.nodes(), &ball.derivs(&m));
            field_deviation(&warped_curvature(&m).unwrap(), &exact)
        })
        .collect();
    let x: Vec<f64> = sizes.iter().map(|&n| ((n - 1) as f64).log2()).collect();
    let y: Vec<f64> = errs.iter().map(|e| -e.log2()).collect();
    let order = slope(&x, &y);
    outcome(worst < 1e-7 && (3.5..=4.5).contains(&order),
            format!("closed-form max deviation {worst:.2e} (< 1e-7); order over 33..257 = {order:.2}"))
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio = 0.0f64;
    let mut all = true;
    let mut checked = 0;
    for _ in 0..10 {
        let m = SmoothBall::random(&mut rng).metric(513);
        let tol = (1e-6f64).max(10.0 * m.grid.spacing * m.grid.spacing);
        let rep = crosscheck(&m, tol);
        all &= rep.pass;
        checked += rep.points_checked;
        for e in &rep.entries {
            worst_ratio = worst_ratio.max(e.max_dev / tol);
        }
    }
    outcome(all, format!("10 profiles, {checked} points; worst deviation {worst_ratio:.3} of max(1e-6, 10h²)"))
}

fn gluing() -> Outcome {
    let flat = double(&build_warped(&Profile::FlatBall(1.0), 2049).unwrap()).unwrap().0;
    let rhos = [0.2, 0.1, 0.05, 0.025];
    let mut ok = true;
    let mut ric0 = Vec::new();
    let mut notes = Vec::new();
    for &rho in &rhos {
        let (g, d) = glue_interpolate(&flat, rho).unwrap();
        let field = warped_curvature(&g).unwrap();
        let r0 = field.ricci_radial[g.n() / 2];
        let rel = (r0 * rho / 2.0 - 1.0).abs();
        ok &= d.c1_mismatch < 1e-10 && d.eqper_margin > 0.0 && rel < 0.01 && d.ricci_min_interior > 0.0;
        notes.push(format!("ρ={rho}: C¹ {:.0e}, Ric(0)·ρ/2−1 {rel:.1e}, min Ric {:.3}", d.c1_mismatch,
                           d.ricci_min_interior));
        ric0.push(r0);
    }
    let x: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = ric0.iter().map(|r| r.ln()).collect();
    let s = slope(&x, &y);
    ok &= (s + 1.0).abs() <= 0.05;
    outcome(ok, format!("log-log slope {s:.4}; {}", notes.join("; ")))
}

fn band_engine() -> Outcome {
    // ḡ = (1 − Λ₀r²/ρ)·flat gives K_mixed(0) = Λ₀/ρ.
    let (lambda0, rho) = (0.5, 0.05);
    let grid = RadialGrid::new(-0.05, 0.05, 101).unwrap();
    let quad = BandMetric::from_fn(grid, 5, 5, |r, _, _| Sym2::IDENTITY.scaled(1.0 - lambda0 * r * r / rho)).unwrap();
    let c = band_curvature(&quad).unwrap();
    let mid = 50 * 25;
    let e1 = (c.k_mixed[mid][0] - lambda0 / rho).abs().max((c.k_mixed[mid][1] - lambda0 / rho).abs());
    let grid = RadialGrid::new(-0.5, 0.5, 201).unwrap();
    let hyp = BandMetric::from_fn(grid, 5, 5, |r, _, _| Sym2::IDENTITY.scaled((2.0 * r).exp())).unwrap();
    let c = band_curvature(&hyp).unwrap();
    let e2 = c.k_mixed.iter().flatten().chain(&c.k_tan).fold(0.0f64, |a, k| a.max((k + 1.0).abs()));
    outcome(e1 < 1e-6 && e2 < 1e-6, format!("quadratic K_mixed error {e1:.1e}; e^(2r) error {e2:.1e}"))
}

fn smoothing() -> Outcome {
    let rho = 0.1;
    let g = glued_flat_ball(2049, rho);
    let res = smooth_c1(&g, rho / 4.0).unwrap();
    // The exterior is exactly flat, so the global minimum can only be 0 up to
    // rounding; strict positivity is required where the metric was replaced.
    let positive = res.min_ricci_band > 0.0 && res.min_ricci_global >= -res.tol;
    let mut sup = Vec::new();
    let mut delta = 0.025;
    for _ in 0..4 {
        let s = smooth_c1_fixed(&g, delta).unwrap();
        sup.push(s.w.iter().zip(&g.w).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())));
        delta *= 0.5;
    }
    let ratios: Vec<f64> = sup.windows(2).map(|p| p[0] / p[1]).collect();
    let quadratic = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    outcome(positive && quadratic,
            format!("δ_m {}: band min Ric {:.3}, global min Ric {:.1e} (flat exterior, tol {:.1e}); \
                     sup-change ratios {:.2?}",
                    res.delta_m, res.min_ricci_band, res.min_ricci_global, res.tol, ratios))
}

fn flow() -> Outcome {
    // (a) raw round sphere.
    let opts = FlowOptions { mode: FlowMode::Raw, store_interval: 0.005, ..FlowOptions::default() };
    let tr = run_flow_from(FlowState::round_sphere(129, 1.0).unwrap(), &opts).unwrap();
    let t_est = tr.t_est.unwrap_or(f64::NAN);
    let a = (t_est - 0.25).abs() <= 0.0025;

    // (b) first-order consistency on random states.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ratios = Vec::new();
    for _ in 0..5 {
        let cs = ClosedFormSphere::random(&mut rng);
        let st = cs.state(129);
        let reference = cs.metric(513);
        let dt = max_step(&st);
        let r1 = consistency_residual(&st, dt, &reference).unwrap();
        let r2 = consistency_residual(&st, 0.5 * dt, &reference).unwrap();
        ratios.push(r1 / r2);
    }
    let b = ratios.iter().all(|r| (r - 2.0).abs() < 0.1);

    // (c), (d) normalized flow of the smoothed glued flat ball.
    let smooth = smooth_c1(&glued_flat_ball(2049, 0.1), 0.025).unwrap().metric;
    let opts = FlowOptions { n_points: Some(1025), ..FlowOptions::default() };
    let tr = run_flow(&smooth, &opts).unwrap();
    let pinch = tr.diagnostics.last().unwrap().pinching;
    let c = pinch < 0.01 && tr.max_asymmetry_all_steps < 1e-10;
    let d = tr.min_ricci_all_steps >= -1e-6;
    outcome(a && b && c && d,
            format!("(a) T_est {t_est:.5} {}; (b) residual ratios {ratios:.3?} {}; (c) pinching {pinch:.4} at t {:.3}, \
                     max asymmetry {:.1e} {}; (d) min Ricci {:.2e} {}",
                    mark(a), mark(b), tr.diagnostics.last().unwrap().t, tr.max_asymmetry_all_steps, mark(c),
                    tr.min_ricci_all_steps, mark(d)))
}

fn collar() -> Outcome {
    let m = build_warped(&Profile::FlatBall(1.0), 1025).unwrap();
    let h = hessian_laplacian_check(&m, 0.5).unwrap();
    let f1 = CollarFunction::new(0.5).unwrap().f1(0.0);
    let err = (f1 - 16.0 * (-4.0f64).exp()).abs();
    outcome(h.min_hessian >= -1e-10 && h.min_laplacian_collar > 0.0 && h.min_laplacian_factor > 0.0 && err < 1e-10,
            format!("min Hess {:.1e}; min Δf on collar {:.2e} (Δf/f {:.2e}); f'(0) error {err:.1e}",
                    h.min_hessian, h.min_laplacian_collar, h.min_laplacian_factor))
}

fn conformal() -> Outcome {
    let m = build_warped(&Profile::FlatBall(1.0), 1025).unwrap();
    let f = CollarFunction::new(0.5).unwrap();
    let mut formula = 0.0f64;
    let mut signs = true;
    for k in 0..20 {
        let s = 0.05 * k as f64 / 19.0;
        let c = conformal_collar(&m, 0.5, s).unwrap();
        let ii = second_fundamental_form(&c.metric, 0.0).unwrap().0.round_coefficient().unwrap();
        formula = formula.max(((s * f.f(0.0)).exp() * ii - (-1.0 + s * f.f1(0.0))).abs());
        let tol = default_tolerance(&warped_curvature(&c.metric).unwrap());
        signs &= c.boundary_ii_eig < -tol && c.min_ricci_global >= -tol;
        if s > 0.0 {
            signs &= c.min_ricci_near_boundary > tol;
        }
    }
    outcome(formula < 1e-8 && signs,
            format!("boundary-form formula error {formula:.1e}; sign pattern on 20 values of s: {}", mark(signs)))
}

fn csv_bytes(run: &PathRun) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(&run.samples, &mut out).unwrap();
    out
}

fn paths() -> Outcome {
    let two = PathParams { theorem: Theorem::Two, ..PathParams::default() };
    let cap = build_warped(&Profile::RoundCap(PI / 3.0), 1025).unwrap();
    let first = build_path(&cap, &two).unwrap();
    let second = build_path(&cap, &two).unwrap();
    let same = csv_bytes(&first) == csv_bytes(&second);
    let one = PathParams { theorem: Theorem::One, ..PathParams::default() };
    let ball = build_path(&build_warped(&Profile::FlatBall(1.0), 1025).unwrap(), &one).unwrap();
    let count = |r: &PathRun| format!("{}/{}", r.samples.iter().filter(|s| s.verdict.pass).count(), r.samples.len());
    outcome(first.all_pass() && ball.all_pass() && same,
            format!("theorem 2 (C): {}; theorem 1 (D): {}; repeated CSV byte-identical: {same}",
                    count(&first), count(&ball)))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("curvature engine", curvature_engine),
        ("oracle agreement", oracle_agreement),
        ("gluing", gluing),
        ("band engine", band_engine),
        ("smoothing", smoothing),
        ("flow", flow),
        ("collar", collar),
        ("conformal deformation", conformal),
        ("end-to-end paths", paths),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {:<22} {}  [{:.1}s] {}", k + 1, name, if o.pass { "PASS" } else { "FAIL" },
                 start.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
