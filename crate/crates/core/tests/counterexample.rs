use std::f64::consts::PI;

use icflow::counterexample::{
    build_initial, c0_refinement, check_admissibility, compute_c0, run_counterexample,
    BaseFunction, CounterexampleConfig, Verdict,
};
use icflow::diagnostics::{snapshot_diagnostics, DiagnosticsContext};
use icflow::stepper::Termination;
use icflow::{FlowError, FlowExponent, SpaceForm, SpeedFunction, SphericalGrid, SurfaceState};

fn half() -> FlowExponent {
    FlowExponent::new(0.5).unwrap()
}

fn area(state: &SurfaceState) -> f64 {
    let ctx = DiagnosticsContext::new(
        SpaceForm::Hyperbolic,
        SpeedFunction::MeanCurvature,
        half(),
        state,
    );
    snapshot_diagnostics(&ctx, state).unwrap().area
}

#[test]
fn c0_is_resolved_and_positive() {
    let grid = SphericalGrid::new(32, 64).unwrap();
    for name in ["p2_axisym", "p2_nonaxisym"] {
        let f = BaseFunction::from_name(name, None).unwrap();
        let est = c0_refinement(&f, &grid);
        assert!(est.fine > 0.0, "{name}");
        assert!(
            est.relative_change() <= 1e-6,
            "{name}: {}",
            est.relative_change()
        );
    }
    // e^-f is a constant plus a first eigenfunction for both of these
    for name in ["zero", "first_eigen"] {
        let f = BaseFunction::from_name(name, None).unwrap();
        assert!(
            matches!(compute_c0(&f, &grid), Err(FlowError::DegenerateChoice(_))),
            "{name}"
        );
    }
}

#[test]
fn c0_matches_an_independent_value() {
    let grid = SphericalGrid::new(64, 128).unwrap();
    let f = BaseFunction::from_name("p2_axisym", Some(0.3)).unwrap();
    let c0 = compute_c0(&f, &grid).unwrap();
    assert!((c0 - 14.945895797103733).abs() <= 1e-9 * c0, "{c0}");
}

#[test]
fn area_scales_like_hyperbolic_spheres() {
    let grid = SphericalGrid::shared(32, 64).unwrap();
    let f = BaseFunction::from_name("p2_axisym", None).unwrap();
    let a3 = area(&build_initial(SpaceForm::Hyperbolic, &f, 3.0, grid.clone()).unwrap());
    let a6 = area(&build_initial(SpaceForm::Hyperbolic, &f, 6.0, grid.clone()).unwrap());
    let ratio = 6f64.sinh().powi(2) / 3f64.sinh().powi(2);
    assert!(
        (a6 / a3 - ratio).abs() <= 0.01 * ratio,
        "{} vs {ratio}",
        a6 / a3
    );

    let round = build_initial(SpaceForm::Hyperbolic, &BaseFunction::Zero, 6.0, grid).unwrap();
    let exact = 4.0 * PI * 6f64.sinh().powi(2);
    assert!((area(&round) - exact).abs() <= 1e-12 * exact);
}

#[test]
fn steep_graph_is_not_admissible() {
    let grid = SphericalGrid::shared(32, 64).unwrap();
    let steep =
        SurfaceState::from_fn(grid.clone(), |theta, _| 1.0 + 5.0 * theta.cos().powi(2)).unwrap();
    let report = check_admissibility(SpaceForm::Hyperbolic, &steep, 0.1).unwrap();
    assert!(!report.passed(), "{report}");

    let f = BaseFunction::from_name("p2_axisym", None).unwrap();
    let good = build_initial(SpaceForm::Hyperbolic, &f, 6.0, grid).unwrap();
    assert!(check_admissibility(SpaceForm::Hyperbolic, &good, 0.1)
        .unwrap()
        .passed());
}

#[test]
fn evolution_invariants() {
    let f = BaseFunction::from_name("p2_nonaxisym", None).unwrap();
    let cfg = CounterexampleConfig::new(half(), f, 6.0, 16, 32, 3.0);
    let out = run_counterexample(&cfg).unwrap();
    assert_eq!(out.flow.termination, Termination::TEnd);
    let r = &out.flow.records;
    let rate = 2f64.powf(0.5);
    // rescaled support function stays above its initial minimum
    let chi0 = r[0].min_chi;
    for x in r {
        assert!(x.q <= 0.0);
        assert!(x.min_h > 0.5 * r[0].min_h, "t={} min H {}", x.t, x.min_h);
        let rescaled = x.min_chi * (-x.t / rate).exp();
        assert!(
            rescaled >= chi0 * (1.0 - 1e-6),
            "t={} {} < {}",
            x.t,
            rescaled,
            chi0
        );
    }
    assert_ne!(out.verdict, Verdict::Round);
    assert!(out.conformal_oscillation() > 0.0);
    assert_eq!(out.conformal.len(), 16 * 32);
}

#[test]
fn round_start_stays_round() {
    let cfg = CounterexampleConfig::new(half(), BaseFunction::Zero, 6.0, 16, 32, 2.0);
    let out = run_counterexample(&cfg).unwrap();
    assert!(out.q_series.iter().all(|(_, q)| q.abs() < 1e-8));
    assert_eq!(out.verdict, Verdict::Round);
    assert!(out.conformal_oscillation() < 1e-9);
    assert!(out.verdict_line().starts_with("ROUND,"));
}

#[test]
fn alpha_one_is_rejected() {
    let f = BaseFunction::from_name("p2_axisym", None).unwrap();
    let cfg = CounterexampleConfig::new(FlowExponent::new(1.0).unwrap(), f, 6.0, 8, 16, 1.0);
    assert!(run_counterexample(&cfg).is_err());
}
