mod common;

use capdeform::deform::double;
use capdeform::flow::{
    consistency_residual, flow_step, flow_step_gauged, max_step, pinching, restrict_half, run_flow_from, FlowMode,
    FlowOptions, FlowState, Gauge, Termination,
};
use capdeform::metric::{build_warped, Profile};
use common::ClosedFormSphere;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sphere(seed: u64) -> ClosedFormSphere {
    ClosedFormSphere::random(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// A round sphere of radius `R` becomes singular at `T = R²/4`.
#[test]
fn raw_flow_singular_time_scales_with_radius_squared() {
    for radius in [0.5, 2.0] {
        let s = FlowState::round_sphere(129, radius).unwrap();
        let opts = FlowOptions { mode: FlowMode::Raw, store_interval: 0.005 * radius * radius, ..FlowOptions::default() };
        let tr = run_flow_from(s, &opts).unwrap();
        assert_eq!(tr.termination, Termination::CurvatureBlowup);
        let t = tr.t_est.unwrap();
        let expect = 0.25 * radius * radius;
        assert!((t - expect).abs() < 0.01 * expect, "R = {radius}: {t}");
    }
}

#[test]
fn normalized_round_sphere_is_a_fixed_point() {
    let s = FlowState::round_sphere(129, 2.0).unwrap();
    let mut st = s.clone();
    for _ in 0..200 {
        st = flow_step_gauged(&st, max_step(&st), FlowMode::Normalized, Gauge::DeTurck).unwrap();
    }
    assert!(st.t > 0.0);
    for i in 0..s.n() {
        assert!((st.w[i] - s.w[i]).abs() < 1e-8);
        assert!((st.h[i] - s.h[i]).abs() < 1e-8);
    }
    assert!(pinching(&st) < 1e-7);
}

#[test]
fn restrict_half_inverts_doubling() {
    let hemi = build_warped(&Profile::Hemisphere, 257).unwrap();
    let st = FlowState::from_doubled(&double(&hemi).unwrap().0, None).unwrap();
    let half = restrict_half(&st).unwrap();
    assert!(half.mirror && !half.doubled);
    assert!((half.grid.r_min - hemi.grid.r_min).abs() < 1e-12);
    assert!(common::max_abs_diff(&half.w, &hemi.w) < 1e-9);
    assert!(restrict_half(&sphere(5).state(129)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `Δg/Δt + 2Ric` is first order in `dt`; the spatial part of the
    /// residual sits far below it at these sizes.
    #[test]
    fn flow_step_is_consistent_with_ricci(seed in any::<u64>()) {
        let cs = sphere(seed);
        let st = cs.state(129);
        let reference = cs.metric(513);
        let dt = max_step(&st);
        let r: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|f| consistency_residual(&st, dt * f, &reference).unwrap())
            .collect();
        for k in 0..2 {
            prop_assert!((r[k] / r[k + 1] - 2.0).abs() < 0.1, "{:?}", r);
        }
        prop_assert!(r[0] / dt < 1e3);
    }

    /// The flow commutes with `x ↦ −x`: a symmetric state stays symmetric,
    /// and flowing a reflected state gives the reflected result.
    #[test]
    fn flow_preserves_reflection(seed in any::<u64>()) {
        let cs = sphere(seed);
        let st = cs.state(129);
        let n = st.n();
        let mirrored = FlowState::new(st.h.iter().rev().cloned().collect(), st.w.iter().rev().cloned().collect(), 0.0).unwrap();
        let dt = max_step(&st);
        for mode in [FlowMode::Raw, FlowMode::Normalized] {
            let a = flow_step_gauged(&st, dt, mode, Gauge::DeTurck).unwrap();
            let b = flow_step_gauged(&mirrored, dt, mode, Gauge::DeTurck).unwrap();
            for i in 0..n {
                prop_assert!((a.w[i] - b.w[n - 1 - i]).abs() < 1e-13);
                prop_assert!((a.h[i] - b.h[n - 1 - i]).abs() < 1e-13);
            }
        }
        let sym = FlowState::new(
            (0..n).map(|i| 0.5 * (st.h[i] + st.h[n - 1 - i])).collect(),
            (0..n).map(|i| 0.5 * (st.w[i] + st.w[n - 1 - i])).collect(),
            0.0,
        ).unwrap();
        let mut s = sym;
        for _ in 0..20 {
            s = flow_step(&s, max_step(&s), FlowMode::Normalized).unwrap();
        }
        prop_assert!(s.asymmetry() < 1e-12);
    }
}
