use approx::assert_relative_eq;
use cdl_detector::{pointlike_limit, DetectorSpec, Label, Op2, SmearingProfile};
use cdl_exactsim::*;
use cdl_field::{FieldSpec, Kick, SpacetimeFunction};
use cdl_geometry::CausalRelation;
use cdl_perturbation::{dyson_series, sorkin_coefficient, PerturbationError, Scenario, SeriesKey, SeriesOptions};

fn field(n: usize) -> FieldSpec {
    FieldSpec::new(20.0, 1.0, n).unwrap()
}

fn det(label: Label, tc: f64, tw: f64, xc: f64, xw: f64) -> DetectorSpec {
    DetectorSpec::new(label, 1.0, 0.05, SmearingProfile::new(tc, tw, xc, xw))
}

fn two(n: usize, a: DetectorSpec, b: DetectorSpec, window: (f64, f64)) -> Scenario {
    Scenario::new(field(n), vec![a, b], window)
}

fn sorkin(n: usize) -> Scenario {
    let a = DetectorSpec::new(Label::A, 2.0, 0.05, SmearingProfile::new(1.15, 1.0, 0.0, 1.5));
    let b = DetectorSpec::new(Label::B, 2.0, 0.05, SmearingProfile::new(2.3, 0.5, 2.0, 0.3))
        .with_initial_state(Op2::plus())
        .unwrap();
    let kick = Kick { profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, -2.0, 0.3)), lambda: 1.0 };
    let mut s = Scenario::new(field(n), vec![a, b], (-0.5, 2.8)).with_kick(kick);
    s.resolution.steps = 200;
    s
}

fn three(n: usize) -> Scenario {
    let mut s = sorkin(n);
    s.kick = None;
    let c = DetectorSpec::new(Label::C, 2.0, 0.05, SmearingProfile::new(0.0, 0.5, -2.0, 0.3))
        .with_initial_state(Op2::plus())
        .unwrap();
    s.detectors.push(c);
    s
}

#[test]
fn precedence_factorizes_exactly() {
    let s = two(16, det(Label::A, 0.0, 0.5, -0.5, 0.5), det(Label::B, 2.5, 0.5, 0.5, 0.5), (-0.6, 3.1));
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let r = factorization_residual(Label::A, Label::B, &s, &info, &OracleOptions::default()).unwrap();
    assert_eq!(r.relation, CausalRelation::PrecedesAB);
    assert_eq!((r.first, r.second), (Label::A, Label::B));
    assert!(r.residual < 1e-12);
    assert!(r.commutator > 1e-6);
    // reversed roles flip the product
    let r2 = factorization_residual(Label::B, Label::A, &s, &info, &OracleOptions::default()).unwrap();
    assert_eq!((r2.first, r2.second), (Label::A, Label::B));
    assert!(r2.residual < 1e-12);
}

#[test]
fn spacelike_residual_is_far_below_not_orderable() {
    let opts = OracleOptions::default();
    // N = 16 still leaks at 5% of the not-orderable value
    let s = two(32, det(Label::A, 0.0, 0.5, -1.5, 0.5), det(Label::B, 0.0, 0.5, 1.5, 0.5), (-0.6, 0.6));
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let space = factorization_residual(Label::A, Label::B, &s, &info, &opts).unwrap();
    assert_eq!(space.relation, CausalRelation::Spacelike);
    let s = two(32, det(Label::A, 0.0, 1.0, -0.7, 0.3), det(Label::B, 0.0, 1.0, 0.7, 0.3), (-1.1, 1.1));
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let tangled = factorization_residual(Label::A, Label::B, &s, &info, &opts).unwrap();
    assert_eq!(tangled.relation, CausalRelation::NotOrderable);
    assert!(tangled.residual > 100.0 * space.residual, "{} vs {}", tangled.residual, space.residual);
}

#[test]
fn small_space_reports_the_full_norm() {
    let s = two(8, det(Label::A, 0.0, 0.5, -1.5, 0.5), det(Label::B, 0.0, 0.5, 1.5, 0.5), (-0.6, 0.6));
    let info = SpaceInfo::strongest_modes(&s, 3, 3).unwrap();
    let r = factorization_residual(Label::A, Label::B, &s, &info, &OracleOptions::default()).unwrap();
    let full = r.full_space.unwrap();
    assert!(full >= r.residual - 1e-15);
}

#[test]
fn sorkin_slope_matches_perturbative_coefficient() {
    let s = sorkin(16);
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let slope = sorkin_slope(&s, &info, &OracleOptions::default(), 0.5).unwrap();
    let coef = sorkin_coefficient(&s).unwrap();
    assert!(slope.error < 1e-3 * slope.value.abs());
    assert_relative_eq!(slope.value, coef.slope(0.05, 0.05), max_relative = 0.01);
}

#[test]
fn sorkin_controls_are_small() {
    let opts = OracleOptions::default();
    let s = sorkin(16);
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let smeared = sorkin_slope(&s, &info, &opts, 0.5).unwrap().value;
    let mut off = s.clone();
    off.detectors[0].coupling = 0.0;
    let zero = sorkin_slope(&off, &info, &opts, 0.5).unwrap().value;
    let mut point = s.clone();
    point.detectors[0] = pointlike_limit(&s.detectors[0]);
    let pl = sorkin_slope(&point, &info, &opts, 0.5).unwrap().value;
    assert!(zero.abs() < 1e-6 * smeared.abs());
    assert!(pl.abs() < 1e-2 * smeared.abs());
}

#[test]
fn sorkin_probe_table_is_odd_around_zero_kick() {
    let s = sorkin(8);
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let opts = OracleOptions::default();
    let pts = sorkin_probe(&s, &info, &opts, &[-0.5, 0.0, 0.5]).unwrap();
    assert_eq!(pts.len(), 3);
    let slope = sorkin_slope(&s, &info, &opts, 0.5).unwrap().value;
    let diff = (pts[2].p_b.value - pts[0].p_b.value) / (2.0 * 0.5);
    assert_relative_eq!(diff, slope, max_relative = 1e-3);
}

#[test]
fn sorkin_probe_requires_the_geometry() {
    let mut s = sorkin(8);
    s.kick = None;
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    assert!(matches!(
        sorkin_probe(&s, &info, &OracleOptions::default(), &[0.1]),
        Err(ExactError::Scenario(PerturbationError::GeometryViolation(_) | PerturbationError::InvalidScenario(_)))
    ));
}

#[test]
fn order_probe_structure() {
    let s = three(8);
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let k = order_probe_k(&s, &info, &OracleOptions::default(), 0.2).unwrap();
    assert_eq!(k.second.len(), 6);
    // A starts in its ground state: p_B is even in λ_A
    assert_eq!(k.second_derivative(Label::A, Label::B).unwrap().value, 0.0);
    assert_eq!(k.second_derivative(Label::C, Label::A).unwrap().value, 0.0);
    // odd total order vanishes with the field in its vacuum
    assert_eq!(k.third.value, 0.0);
    // C alone cannot move B
    assert!(k.second_derivative(Label::C, Label::C).unwrap().value.abs() < 1e-9);
    assert!(k.fourth.value.abs() > 1e-6);

    // ∂²p_B/∂λ_B² against the second-order series entry
    let b_only = Scenario { detectors: vec![s.detectors[1].clone()], ..s.clone() };
    let series = dyson_series(&b_only, &SeriesOptions { max_order: 2, ..Default::default() }).unwrap();
    let z = series.excitation(&SeriesKey::new(&[2], 0), Label::B).re;
    let d2 = k.second_derivative(Label::B, Label::B).unwrap();
    assert_relative_eq!(d2.value, 2.0 * z, max_relative = 1e-3);
}

#[test]
fn order_probe_requires_three_detectors() {
    let s = sorkin(8);
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    assert!(matches!(order_probe_k(&s, &info, &OracleOptions::default(), 0.2), Err(ExactError::Invalid(_))));
}

#[test]
fn excitation_probability_needs_a_converged_step() {
    let s = two(8, det(Label::A, 0.0, 0.5, -1.5, 0.5), det(Label::B, 0.0, 0.5, 1.5, 0.5), (-0.6, 0.6));
    let info = SpaceInfo::excitation_cap(&s, 2).unwrap();
    let ok = excitation_probability(Label::A, &s, &info, &OracleOptions::default()).unwrap();
    assert!(ok.value > 0.0 && ok.error < 1e-6);
    let coarse = OracleOptions { dt: Some(0.3), step_tolerance: 1e-12, ..Default::default() };
    assert!(matches!(
        excitation_probability(Label::A, &s, &info, &coarse),
        Err(ExactError::StepTooCoarse { .. })
    ));
}
