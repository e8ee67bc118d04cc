mod common;

use capdeform::curvature::{boundary_ii_eig, second_fundamental_form, warped_curvature};
use capdeform::deform::{
    boundary_perturb, conformal_collar, delta_schedule, double, glue_interpolate, shift, smooth_c1_fixed,
    BumpFunction, CollarFunction, Smoothness,
};
use capdeform::metric::{build_warped, Profile};
use common::{glued_flat_ball, max_abs_diff, SmoothBall};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ball(seed: u64) -> SmoothBall {
    SmoothBall::random(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn doubled_hemisphere_is_smooth_and_flat_ball_is_not() {
    let hemi = build_warped(&Profile::Hemisphere, 257).unwrap();
    assert_eq!(double(&hemi).unwrap().1, Smoothness::Smooth);
    let flat = build_warped(&Profile::FlatBall(1.0), 257).unwrap();
    let (d, s) = double(&flat).unwrap();
    assert_eq!(s, Smoothness::C0);
    assert!(d.doubled && d.pole_lo() && d.pole_hi());
    assert!(double(&d).is_err());
}

#[test]
fn glue_rejects_bad_input() {
    let flat = build_warped(&Profile::FlatBall(1.0), 257).unwrap();
    assert!(glue_interpolate(&flat, 0.1).is_err());
    let d = double(&flat).unwrap().0;
    assert!(glue_interpolate(&d, 0.0).is_err());
    assert!(glue_interpolate(&d, 1.0).is_err());
    // ρ > 1/2 breaks the gluing inequality at the equator.
    assert!(glue_interpolate(&d, 0.6).is_err());
}

#[test]
fn smoothing_is_local_and_removes_interfaces() {
    let (rho, delta) = (0.1, 0.01);
    let g = glued_flat_ball(2049, rho);
    let s = smooth_c1_fixed(&g, delta).unwrap();
    assert!(s.breaks.is_empty());
    for i in 0..g.n() {
        let r = g.grid.r(i);
        if r.abs() >= rho + 2.0 * delta {
            assert_eq!(s.w[i], g.w[i], "r = {r}");
        }
    }
    // Inside the band the change is one constant.
    let inner: Vec<f64> =
        (0..g.n()).filter(|&i| g.grid.r(i).abs() <= rho - 4.0 * delta).map(|i| s.w[i] - g.w[i]).collect();
    let c = inner[0];
    assert!(c != 0.0 && inner.iter().all(|d| (d - c).abs() < 1e-15));
    assert!(smooth_c1_fixed(&g, rho).is_err());
}

#[test]
fn collar_function_identities() {
    let f = CollarFunction::new(0.5).unwrap();
    let e4 = (-4.0f64).exp();
    assert!((f.f1(0.0) - 16.0 * e4).abs() < 1e-10);
    // Difference quotients of f agree with f' and f''.
    for r in [-0.4, -0.25, -0.1, 0.0] {
        let h = 1e-5;
        let d1 = (f.f(r + h) - f.f(r - h)) / (2.0 * h);
        let d2 = (f.f1(r + h) - f.f1(r - h)) / (2.0 * h);
        assert!((d1 - f.f1(r)).abs() < 1e-6 * f.f1(r) + 1e-11, "{r}: {d1} {}", f.f1(r));
        assert!((d2 - f.f2(r)).abs() < 1e-6 * f.f2(r).abs() + 1e-10, "{r}: {d2} {}", f.f2(r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shifts_compose(seed in any::<u64>(), a in 0.0f64..0.3, b in 0.0f64..0.3) {
        let m = ball(seed).metric(513);
        let twice = shift(&shift(&m, a).unwrap(), b).unwrap();
        let once = shift(&m, a + b).unwrap();
        prop_assert!((twice.grid.r_min - once.grid.r_min).abs() < 1e-14);
        prop_assert!(max_abs_diff(&twice.w, &once.w) < 1e-9);
    }

    #[test]
    fn shift_samples_the_restricted_profile(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let b = ball(seed);
        let s = shift(&b.metric(513), eps).unwrap();
        for i in 0..s.n() {
            let exact = b.jet(s.grid.r(i) - eps).value();
            prop_assert!((s.w[i] - exact).abs() < 1e-9, "node {}", i);
        }
    }

    #[test]
    fn doubling_is_a_reflection(seed in any::<u64>()) {
        let m = ball(seed).metric(257);
        let d = double(&m).unwrap().0;
        let n = d.n();
        prop_assert_eq!(n, 2 * m.n() - 1);
        for i in 0..n {
            prop_assert_eq!(d.w[i], d.w[n - 1 - i]);
            prop_assert!((d.grid.r(i) + d.grid.r(n - 1 - i)).abs() < 1e-15);
        }
        prop_assert_eq!(&d.w[..m.n()], &m.w[..]);
    }

    /// For the flat ball `w = 1 + r` at `r = −ρ`: `b = −(1−ρ)/ρ`, `c = 1−ρ`,
    /// `Λ = 1/(1−ρ)`, margin `(1−2ρ)/ρ` and `Ric(∂_r, ∂_r)(0) = −2b/c = 2/ρ`.
    #[test]
    fn flat_ball_gluing_matches_closed_form(rho in 0.02f64..0.45) {
        let (g, diag) = glue_interpolate(&double(&build_warped(&Profile::FlatBall(1.0), 1025).unwrap()).unwrap().0, rho).unwrap();
        let b = diag.b.round_coefficient().unwrap();
        let c = diag.c.round_coefficient().unwrap();
        prop_assert!((b + (1.0 - rho) / rho).abs() < 1e-12 / rho);
        prop_assert!((c - (1.0 - rho)).abs() < 1e-12);
        prop_assert!((diag.lambda - 1.0 / (1.0 - rho)).abs() < 1e-12);
        prop_assert!((diag.eqper_margin - (1.0 - 2.0 * rho) / rho).abs() < 1e-10 / rho);
        prop_assert!(diag.c1_mismatch < 1e-10);
        prop_assert!(diag.ricci_min_interior > 0.0);
        let field = warped_curvature(&g).unwrap();
        let mid = g.n() / 2;
        prop_assert!((field.ricci_radial[mid] - 2.0 / rho).abs() < 1e-6 * (2.0 / rho));
        for i in 0..g.n() {
            prop_assert_eq!(g.w[i], g.w[g.n() - 1 - i]);
        }
    }

    #[test]
    fn eqper_margin_is_positive_for_concave_interpolants(seed in any::<u64>(), rho in 0.05f64..0.3) {
        // The random ball has a convex boundary, so its double can be glued.
        let m = ball(seed).metric(513);
        let d = double(&m).unwrap().0;
        match glue_interpolate(&d, rho) {
            Ok((_, diag)) => {
                prop_assert!(diag.eqper_margin > 0.0);
                prop_assert!(diag.b.round_coefficient().unwrap() < 0.0);
                prop_assert!(diag.c1_mismatch < 1e-10);
            }
            Err(e) => prop_assert!(matches!(e, capdeform::error::GeomError::EqperViolated(_)), "{}", e),
        }
    }

    /// `e^{s·f(0)}·Γ⁰(g^s) = Γ⁰(g) + s·f'(0)·w(0)²` in round-metric units, up
    /// to the fourth-order error of the boundary stencil.
    ///
    /// `f` rises over a length `~ε³/2`; below `ε ≈ 0.4` that is only a few
    /// spacings at 1025 points, while the critical `s` grows like `e^{1/ε²}`.
    #[test]
    fn conformal_boundary_form(seed in any::<u64>(), eps in 0.4f64..0.75, t in 0.0f64..0.9) {
        let b = ball(seed);
        let f = CollarFunction::new(eps).unwrap();
        let coarse = b.metric(1025);
        prop_assume!(boundary_ii_eig(&coarse).unwrap() < 0.0);
        let s = t * conformal_collar(&coarse, eps, 0.0).unwrap().critical_s;
        let w0 = b.jet(0.0).value();
        let err = |n: usize| {
            let m = b.metric(n);
            let c = conformal_collar(&m, eps, s).unwrap();
            let before = second_fundamental_form(&m, 0.0).unwrap().0.round_coefficient().unwrap();
            let after = second_fundamental_form(&c.metric, 0.0).unwrap().0.round_coefficient().unwrap();
            ((s * f.f(0.0)).exp() * after - before - s * f.f1(0.0) * w0 * w0).abs()
        };
        let (e1, e2) = (err(1025), err(2049));
        prop_assert!(e1 < 1e-6, "{}", e1);
        prop_assert!(e2 <= (e1 / 8.0).max(1e-10), "{} {}", e1, e2);
    }

    #[test]
    fn conformal_sign_pattern(eps in 0.3f64..0.75, s in 0.0f64..0.05) {
        let m = build_warped(&Profile::FlatBall(1.0), 1025).unwrap();
        let c = conformal_collar(&m, eps, s).unwrap();
        let tol = capdeform::verdict::default_tolerance(&warped_curvature(&c.metric).unwrap());
        prop_assert!(c.boundary_ii_eig < -tol);
        prop_assert!(c.min_ricci_global >= -tol, "{:?}", c);
        prop_assert!(s < c.critical_s);
    }

    /// The perturbed hemisphere has boundary eigenvalue `−½η·β'(0)`, up to
    /// the fourth-order error of the boundary stencil.
    #[test]
    fn perturbation_bends_the_boundary(eta in 0.0f64..0.05, r0 in 0.1f64..0.5) {
        let expect = -0.5 * eta * BumpFunction::new(r0).unwrap().slope_at_zero();
        let err = |n: usize| {
            let hemi = build_warped(&Profile::Hemisphere, n).unwrap();
            let p = boundary_perturb(&hemi, eta, r0).unwrap();
            for i in 0..n {
                if hemi.grid.r(i) <= -r0 {
                    assert_eq!(p.w[i], hemi.w[i]);
                }
            }
            (boundary_ii_eig(&p).unwrap() - expect).abs()
        };
        let (coarse, fine) = (err(1025), err(2049));
        prop_assert!(coarse < 1e-7, "{}", coarse);
        prop_assert!(fine <= (coarse / 8.0).max(1e-11), "{} {}", coarse, fine);
    }

    #[test]
    fn delta_schedule_is_a_monotone_ramp(delta0 in 0.01f64..0.2, delta1 in 0.01f64..0.49,
                                         s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let d = |x: f64| delta_schedule(x, delta0, delta1).unwrap();
        prop_assert_eq!(d(0.0), 0.0);
        prop_assert_eq!(d(1.0), delta0);
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        prop_assert!(d(lo) <= d(hi));
        prop_assert!((0.0..=delta0).contains(&d(s)));
    }
}
