use approx::assert_relative_eq;
use cdl_detector::{
    commutator_floor, detector_form_factor, interaction_weight, monopole, pointlike_limit,
    DetectorError, DetectorSpec, Label, Op2, SmearingProfile,
};
use cdl_field::{Complex, FieldSpec};
use cdl_geometry::Event;
use proptest::prelude::*;

fn default_detector() -> DetectorSpec<f64> {
    DetectorSpec::new(Label::A, 1.0, 0.05, SmearingProfile::new(0.0, 0.5, 0.0, 0.5))
}

proptest! {
    #[test]
    fn monopole_is_hermitian_and_involutory(t in -20.0..20.0f64, gap in -5.0..5.0f64) {
        let m = monopole(t, gap);
        prop_assert!(m.hermiticity_defect() < 1e-15);
        prop_assert!((m * m).max_abs_diff(&Op2::identity()) < 1e-14);
        let [lo, hi] = m.hermitian_eigenvalues();
        prop_assert!((lo + 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weight_is_separable_and_supported(t in -1.0..1.0f64, x in -1.0..1.0f64) {
        let d = default_detector();
        let (w, _) = interaction_weight(&d, &Event::new(t, x));
        let s = d.smearing;
        prop_assert!((w - d.coupling * s.chi(t) * s.spatial(x)).abs() < 1e-15);
        if w != 0.0 {
            let r = d.support();
            prop_assert!(t >= r.t_min && t <= r.t_max && x >= r.x_min && x <= r.x_max);
        }
    }
}

#[test]
fn interaction_weight_cases() {
    let d = default_detector();
    assert_eq!(interaction_weight(&d, &Event::new(3.0, 0.0)).0, 0.0);
    let peak = interaction_weight(&d, &Event::new(0.0, 0.0)).0;
    assert_relative_eq!(peak, 0.05 * d.smearing.spatial(0.0), max_relative = 1e-15);
    let silent = d.with_coupling(0.0);
    assert_eq!(interaction_weight(&silent, &Event::new(0.1, 0.1)).0, 0.0);
}

#[test]
fn form_factor_table_for_half_width_bump() {
    let d = default_detector();
    let spec = FieldSpec::default();
    let ff = detector_form_factor(&d, &spec, 48, 16).unwrap();
    for (n, v) in [(0, 1.0), (3, 0.9825526736776562), (10, 0.8179042917413525), (40, -0.09652733287019342), (64, 0.033577409470275064)] {
        let f = ff.spatial[(n + 64) as usize];
        assert_relative_eq!(f.re, v, max_relative = 1e-8);
        assert!(f.im.abs() < 1e-14);
    }
    assert_eq!(ff.switching.len(), 16);
    assert_eq!(ff.switching[0], 0.0);
}

#[test]
fn even_profile_phases_carry_only_the_centre() {
    let mut d = default_detector();
    d.smearing.x_center = 1.7;
    let spec = FieldSpec::default();
    let ff = detector_form_factor(&d, &spec, 48, 2).unwrap();
    for (f, m) in ff.spatial.iter().zip(spec.modes()) {
        let stripped = f * Complex::from_polar(1.0, -m.k * 1.7);
        assert!(stripped.im.abs() < 1e-13, "{stripped}");
    }
}

#[test]
fn pointlike_limit_properties() {
    let d = default_detector();
    let p = pointlike_limit(&d);
    let pp = pointlike_limit(&p);
    assert_eq!(p.smearing, pp.smearing);
    let r = p.support();
    assert_eq!((r.x_min, r.x_max), (0.0, 0.0));
    assert_eq!((r.t_min, r.t_max), (-0.5, 0.5));
    let spec = FieldSpec::default();
    let ff = detector_form_factor(&p, &spec, 48, 2).unwrap();
    for (f, m) in ff.spatial.iter().zip(spec.modes()) {
        assert!((f - Complex::from_polar(1.0, m.k * 0.0)).norm() < 1e-15);
    }
}

#[test]
fn narrow_profile_converges_to_pointlike() {
    let mut d = default_detector();
    d.smearing.x_center = 0.8;
    d.smearing.x_width = 1e-3;
    let spec = FieldSpec::default();
    let narrow = detector_form_factor(&d, &spec, 48, 2).unwrap();
    let point = detector_form_factor(&pointlike_limit(&d), &spec, 48, 2).unwrap();
    for (a, b) in narrow.spatial.iter().zip(&point.spatial) {
        assert!((a - b).norm() < 1e-2 * b.norm());
    }
}

#[test]
fn initial_state_validation() {
    let d = default_detector();
    assert!(d.clone().with_initial_state(Op2::plus()).is_ok());
    let bad = Op2::from_real([[0.7, 0.0], [0.0, 0.7]]);
    assert!(matches!(d.clone().with_initial_state(bad), Err(DetectorError::InvalidState { .. })));
    let negative = Op2::from_real([[1.2, 0.0], [0.0, -0.2]]);
    assert!(d.with_initial_state(negative).is_err());
}

#[test]
fn coherent_sender_presents_a_classical_source() {
    let d = default_detector().with_initial_state(Op2::plus()).unwrap();
    for t in [0.0, 0.4, 1.3] {
        assert_relative_eq!(d.current_expectation(t).re, (t * d.gap).cos(), max_relative = 1e-14);
    }
    assert_eq!(default_detector().current_expectation(0.3), Complex::new(0.0, 0.0));
}

#[test]
fn commutator_floor_orders_spacelike_below_timelike() {
    let spec = FieldSpec::default();
    let a = default_detector();
    let mut spacelike = default_detector();
    spacelike.smearing = SmearingProfile::new(1.0, 0.5, 3.5, 0.5);
    let mut timelike = default_detector();
    timelike.smearing = SmearingProfile::new(3.0, 0.5, 0.5, 0.5);
    let s = commutator_floor(&a, &spacelike, &spec, 48).unwrap();
    let t = commutator_floor(&a, &timelike, &spec, 48).unwrap();
    assert!(s < 1e-4 * t, "{s} vs {t}");
}
