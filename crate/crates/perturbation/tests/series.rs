use approx::assert_relative_eq;
use cdl_detector::{
    commutator_floor, detector_form_factor, pointlike_limit, smeared_pauli_jordan, DetectorSpec, Label, Op2,
    SmearingProfile,
};
use cdl_field::{smeared_commutator, FieldSpec, GaussLegendre, GaussianFieldState, Kick, SpacetimeFunction};
use cdl_perturbation::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn det(label: Label, tc: f64, tw: f64, xc: f64, xw: f64) -> DetectorSpec {
    DetectorSpec::new(label, 1.0, 0.05, SmearingProfile::new(tc, tw, xc, xw))
}

fn field(n: usize) -> FieldSpec {
    FieldSpec::new(20.0, 1.0, n).unwrap()
}

fn sorkin_scenario(n: usize) -> Scenario {
    let a = DetectorSpec::new(Label::A, 2.0, 0.05, SmearingProfile::new(1.15, 1.0, 0.0, 1.5));
    let b = DetectorSpec::new(Label::B, 2.0, 0.05, SmearingProfile::new(2.3, 0.5, 2.0, 0.3))
        .with_initial_state(Op2::plus())
        .unwrap();
    let kick = Kick { profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, -2.0, 0.3)), lambda: 1.0 };
    let mut s = Scenario::new(field(n), vec![a, b], (-0.5, 2.8)).with_kick(kick);
    s.resolution.steps = 200;
    s
}

fn single(n: usize) -> Scenario {
    let mut s = Scenario::new(field(n), vec![det(Label::A, 0.0, 0.5, 0.0, 0.5)], (-0.6, 0.6));
    s.resolution.steps = 100;
    s
}

// ---------------------------------------------------------------- response

#[test]
fn response_scales_quadratically() {
    let s = single(32);
    let d = &s.detectors[0];
    assert_eq!(response_probability(&d.with_coupling(0.0), &GaussianFieldState::Vacuum, &s).unwrap(), 0.0);
    let p1 = response_probability(d, &GaussianFieldState::Vacuum, &s).unwrap();
    let p2 = response_probability(&d.with_coupling(0.1), &GaussianFieldState::Vacuum, &s).unwrap();
    assert!(p1 > 0.0);
    assert_relative_eq!(p2, 4.0 * p1, max_relative = 1e-12);
}

#[test]
fn response_matches_series_second_order() {
    let s = single(32);
    let d = &s.detectors[0];
    let p = response_probability(d, &GaussianFieldState::Vacuum, &s).unwrap();
    let series = dyson_series(&s, &SeriesOptions { max_order: 2, ..Default::default() }).unwrap();
    let z = series.excitation(&SeriesKey::new(&[2], 0), Label::A);
    assert!(z.im.abs() < 1e-15);
    assert_relative_eq!(p, z.re * 0.05 * 0.05, max_relative = 1e-7);
}

#[test]
fn response_in_kicked_vacuum_matches_series() {
    let mut s = single(24);
    s.detectors[0] = det(Label::A, 1.5, 0.5, 1.0, 0.5);
    s.window = (-0.6, 2.1);
    s.kick = Some(Kick { profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 0.0, 0.5)), lambda: 2.0 });
    let d = &s.detectors[0];
    let p = response_probability(d, &GaussianFieldState::Vacuum, &s).unwrap();
    let series = dyson_series(&s, &SeriesOptions { max_order: 2, ..Default::default() }).unwrap();
    let z: f64 = (0..=2)
        .map(|f| series.excitation(&SeriesKey::new(&[2], f), Label::A).re * 2f64.powi(f as i32))
        .sum();
    assert_relative_eq!(p, z * 0.05 * 0.05, max_relative = 1e-7);
    // the classical part is a genuine effect here
    let vac = response_probability(d, &GaussianFieldState::Vacuum, &Scenario { kick: None, ..s.clone() }).unwrap();
    assert!(p > 1.5 * vac, "{p} vs {vac}");
}

#[test]
fn coherent_state_equals_kicked_vacuum() {
    let mut s = single(24);
    s.detectors[0] = det(Label::A, 1.5, 0.5, 1.0, 0.5);
    s.window = (-0.6, 2.1);
    s.classical_modes = 24;
    let kick = Kick { profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 0.0, 0.5)), lambda: 0.7 };
    let state = kick.kicked_vacuum(&s.field, s.resolution.quad_order).unwrap();
    let d = &s.detectors[0];
    let p_state = response_probability(d, &state, &s).unwrap();
    let p_kick = response_probability(d, &GaussianFieldState::Vacuum, &s.clone().with_kick(kick)).unwrap();
    assert_relative_eq!(p_state, p_kick, max_relative = 1e-10);
}

#[test]
fn thermal_response_matches_double_integral() {
    let s = single(16);
    let d = &s.detectors[0];
    let nbar: Vec<f64> = s.field.modes().iter().map(|m| 1.0 / ((m.omega / 2.0).exp() - 1.0)).collect();
    let p = response_probability(d, &GaussianFieldState::Thermal(nbar.clone()), &s).unwrap();
    // P = λ² ∫∫ χ(t)χ(t') e^{iΩ(t−t')} W(t', t)
    let g = detector_form_factor(d, &s.field, 48, 2).unwrap().coupling;
    let q = GaussLegendre::new(60);
    let modes = s.field.modes();
    let mut acc = C::new(0.0, 0.0);
    for (t, wt) in q.mapped(0.0, 0.5) {
        for (u, wu) in q.mapped(0.0, 0.5) {
            let w: C = modes
                .iter()
                .zip(&g)
                .zip(&nbar)
                .map(|((m, g), n)| {
                    let e = C::from_polar(1.0, -m.omega * (u - t));
                    g.norm_sqr() * ((1.0 + n) * e + n * e.conj())
                })
                .sum();
            acc += wt * wu * d.smearing.chi(t) * d.smearing.chi(u) * C::from_polar(1.0, (t - u) * d.gap) * w;
        }
    }
    assert!(acc.im.abs() < 1e-14);
    assert_relative_eq!(p, 0.05 * 0.05 * acc.re, max_relative = 1e-9);
    let vac = response_probability(d, &GaussianFieldState::Vacuum, &s).unwrap();
    assert!(p > vac);
}

#[test]
fn response_rejects_excited_detector_and_bad_state() {
    let s = single(8);
    let d = s.detectors[0].clone().with_initial_state(Op2::excited()).unwrap();
    assert!(matches!(
        response_probability(&d, &GaussianFieldState::Vacuum, &s),
        Err(PerturbationError::InvalidScenario(_))
    ));
    let bad = GaussianFieldState::Thermal(vec![0.0; 3]);
    assert!(matches!(response_probability(&s.detectors[0], &bad, &s), Err(PerturbationError::Field(_))));
}

#[test]
fn coarse_quadrature_is_reported() {
    let mut s = single(64);
    s.resolution.quad_order = 3;
    let r = response_probability(&s.detectors[0], &GaussianFieldState::Vacuum, &s);
    assert!(matches!(r, Err(PerturbationError::QuadratureNotConverged { .. })), "{r:?}");
}

// ---------------------------------------------------------------- signaling

fn pair_scenario(n: usize, a: DetectorSpec, b: DetectorSpec, window: (f64, f64)) -> Scenario {
    let mut s = Scenario::new(field(n), vec![a, b], window);
    s.resolution.steps = 200;
    s
}

fn sender(tc: f64, xc: f64) -> DetectorSpec {
    det(Label::A, tc, 0.5, xc, 0.5).with_initial_state(Op2::plus()).unwrap()
}

#[test]
fn signaling_matches_series_entry() {
    let s = pair_scenario(24, sender(0.0, 0.0), det(Label::B, 1.5, 0.5, 0.5, 0.5), (-0.6, 2.1));
    let sig = signaling_coefficient(&s.detectors[0], &s.detectors[1], &s).unwrap();
    assert!(sig.value > 1e-3, "{sig:?}");
    let series = dyson_series(&s, &SeriesOptions { max_order: 2, ..Default::default() }).unwrap();
    let e = series.get(&SeriesKey::new(&[1, 1], 0)).unwrap();
    let rho_b = series.reduce(&e.matrix, Label::B);
    assert!(rho_b.max_abs_diff(&sig.matrix) < 1e-9 * sig.value, "{rho_b:?} vs {:?}", sig.matrix);
}

#[test]
fn ground_sender_cannot_signal_at_this_order() {
    let s = pair_scenario(16, det(Label::A, 0.0, 0.5, 0.0, 0.5), det(Label::B, 1.5, 0.5, 0.5, 0.5), (-0.6, 2.1));
    let sig = signaling_coefficient(&s.detectors[0], &s.detectors[1], &s).unwrap();
    assert_eq!(sig.value, 0.0);
}

#[test]
fn spacelike_signaling_tracks_the_commutator_floor() {
    let a = sender(0.0, 0.0);
    let b = det(Label::B, 1.0, 0.5, 3.5, 0.5);
    let mut ratios = Vec::new();
    for n in [32, 64, 128] {
        let s = pair_scenario(n, a.clone(), b.clone(), (-0.6, 1.6));
        let sig = signaling_coefficient(&a, &b, &s).unwrap();
        let comm = smeared_commutator(
            &SpacetimeFunction::Separable(a.smearing),
            &SpacetimeFunction::Separable(b.smearing),
            &s.field,
            48,
        )
        .unwrap();
        let floor = commutator_floor(&a, &b, &s.field, 48).unwrap();
        assert!(sig.value <= floor, "N={n}: {} > {floor}", sig.value);
        ratios.push(sig.value / comm.abs());
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(l, h), r| (l.min(*r), h.max(*r)));
    assert!(hi / lo < 10.0, "{ratios:?}");
}

#[test]
fn timelike_signaling_dwarfs_spacelike() {
    let a = sender(0.0, 0.0);
    let s1 = pair_scenario(64, a.clone(), det(Label::B, 3.0, 0.5, 0.5, 0.5), (-0.6, 3.6));
    let s2 = pair_scenario(64, a.clone(), det(Label::B, 1.0, 0.5, 3.5, 0.5), (-0.6, 3.6));
    let t = signaling_coefficient(&a, &s1.detectors[1], &s1).unwrap().value;
    let x = signaling_coefficient(&a, &s2.detectors[1], &s2).unwrap().value;
    assert!(t > 1e5 * x, "{t} vs {x}");
}

#[test]
fn swapped_roles_use_the_reversed_kernel() {
    // B entirely before A: nothing reaches B.
    let a = sender(3.0, 0.5);
    let b = det(Label::B, 0.0, 0.5, 0.0, 0.5);
    let s = pair_scenario(32, a.clone(), b.clone(), (-0.6, 3.6));
    assert_eq!(signaling_coefficient(&a, &b, &s).unwrap().value, 0.0);
    let a2 = DetectorSpec { label: Label::A, ..b.clone().with_initial_state(Op2::plus()).unwrap() };
    let b2 = DetectorSpec { label: Label::B, initial_state: Op2::ground(), ..a };
    assert!(signaling_coefficient(&a2, &b2, &s).unwrap().value > 1e-3);
}

// ---------------------------------------------------------------- factorization

fn defect_oracle(a: &DetectorSpec, b: &DetectorSpec, spec: &FieldSpec) -> f64 {
    // nested Gauss-Legendre over {t > s}, built from the smeared Pauli-Jordan kernel
    let ga = detector_form_factor(a, spec, 48, 2).unwrap().coupling;
    let gb = detector_form_factor(b, spec, 48, 2).unwrap().coupling;
    let q = GaussLegendre::new(80);
    let rb = b.support();
    let mut k = [[C::new(0.0, 0.0); 4]; 4];
    for (t, wt) in q.mapped(a.smearing.t_center, a.smearing.t_width) {
        let hi = t.min(rb.t_max);
        if hi <= rb.t_min {
            continue;
        }
        let ja = a.current_at(t);
        for (s, ws) in q.mapped(0.5 * (rb.t_min + hi), 0.5 * (hi - rb.t_min)) {
            let w = wt * ws * a.smearing.chi(t) * b.smearing.chi(s) * smeared_pauli_jordan(&ga, &gb, spec, t, s);
            let jb = b.current_at(s);
            for r in 0..4 {
                for c in 0..4 {
                    k[r][c] += C::new(0.0, -w) * ja.0[r / 2][c / 2] * jb.0[r % 2][c % 2];
                }
            }
        }
    }
    nalgebra::Matrix4::from_fn(|r, c| k[r][c]).singular_values().max()
}

#[test]
fn defect_matches_nested_quadrature() {
    let a = det(Label::A, 1.0, 1.0, 0.0, 0.5);
    let b = det(Label::B, 0.8, 0.5, 1.0, 0.5);
    let s = pair_scenario(16, a.clone(), b.clone(), (-0.6, 2.6));
    let d = factorization_defect_leading(&a, &b, &s).unwrap();
    assert!(d.norm > 1e-3);
    assert_relative_eq!(d.norm, defect_oracle(&a, &b, &s.field), max_relative = 1e-6);
}

#[test]
fn defect_vanishes_when_a_precedes_b() {
    let a = det(Label::A, 0.0, 0.5, 0.0, 0.5);
    let b = det(Label::B, 2.0, 0.5, 0.5, 0.5);
    let s = pair_scenario(32, a.clone(), b.clone(), (-0.6, 2.6));
    assert_eq!(factorization_defect_leading(&a, &b, &s).unwrap().norm, 0.0);
    // the other order is the commutator of two causally related regions
    assert!(factorization_defect_leading(&b, &a, &s).unwrap().norm > 1e-2);
}

#[test]
fn defect_spacelike_is_at_the_truncation_floor() {
    let a = det(Label::A, 0.0, 0.5, 0.0, 0.5);
    let b = det(Label::B, 0.2, 0.5, 3.5, 0.5);
    let s = pair_scenario(64, a.clone(), b.clone(), (-0.6, 1.0));
    let d = factorization_defect_leading(&a, &b, &s).unwrap().norm;
    let floor = commutator_floor(&a, &b, &s.field, 48).unwrap();
    assert!(d <= floor, "{d} > {floor}");
    let overlap = det(Label::B, 0.5, 0.5, 0.5, 0.5);
    let s2 = pair_scenario(64, a.clone(), overlap.clone(), (-0.6, 1.0));
    let o = factorization_defect_leading(&a, &overlap, &s2).unwrap().norm;
    assert!(o > 1e3 * d, "{o} vs {d}");
}

// ---------------------------------------------------------------- series

#[test]
fn odd_a_orders_do_not_excite_b() {
    let s = pair_scenario(16, det(Label::A, 0.0, 0.5, 0.0, 0.5), det(Label::B, 1.5, 0.5, 0.5, 0.5), (-0.6, 2.1));
    let series = dyson_series(&s, &SeriesOptions { max_order: 4, max_kick_order: 0, steps: Some(60) }).unwrap();
    let mut seen = 0;
    for (key, _) in series.entries.iter().filter(|(k, _)| k.orders[0] % 2 == 1) {
        let p = series.excitation(key, Label::B);
        assert!(p.norm() < 1e-15, "{key}: {p}");
        seen += 1;
    }
    assert_eq!(seen, 3);
}

#[test]
fn higher_orders_are_traceless() {
    let s = sorkin_scenario(8);
    let series = dyson_series(&s, &SeriesOptions { max_order: 4, max_kick_order: 2, steps: Some(60) }).unwrap();
    for (key, e) in &series.entries {
        let tr: C = (0..series.dim).map(|i| e.matrix[i * series.dim + i]).sum();
        if key.order() == 0 {
            assert_relative_eq!(tr.re, 1.0, epsilon = 1e-15);
        } else {
            assert!(tr.norm() < 1e-12, "{key}: {tr}");
        }
    }
}

#[test]
fn assemble_at_zero_coupling_is_initial_state() {
    let s = sorkin_scenario(8);
    let series = dyson_series(&s, &SeriesOptions { max_order: 3, max_kick_order: 1, steps: Some(60) }).unwrap();
    let out = assemble(&series, &[0.0, 0.0], 0.0).unwrap();
    assert!(out.reduced_state(Label::A).unwrap().max_abs_diff(&Op2::ground()) < 1e-15);
    assert!(out.reduced_state(Label::B).unwrap().max_abs_diff(&Op2::plus()) < 1e-15);
    assert!(out.warnings.is_empty());
    assert!(assemble(&series, &[0.1], 0.0).is_err());
}

#[test]
fn assemble_is_linear_in_entries() {
    let s = sorkin_scenario(8);
    let mut series = dyson_series(&s, &SeriesOptions { max_order: 2, max_kick_order: 1, steps: Some(60) }).unwrap();
    let key = series.key(&[(Label::A, 2)], 0).unwrap();
    let base = assemble(&series, &[0.1, 0.1], 0.5).unwrap();
    let delta = series.get(&key).unwrap().matrix.clone();
    series.entries.get_mut(&key).unwrap().matrix.iter_mut().zip(&delta).for_each(|(m, d)| *m += d);
    let twice = assemble(&series, &[0.1, 0.1], 0.5).unwrap();
    for i in 0..series.dim * series.dim {
        let expect = base.joint[i] + delta[i] * 0.01;
        assert!((twice.joint[i] - expect).norm() < 1e-15);
    }
}

#[test]
fn strong_coupling_is_flagged() {
    let s = single(16);
    let series = dyson_series(&s, &SeriesOptions { max_order: 2, ..Default::default() }).unwrap();
    assert!(assemble(&series, &[0.05], 0.0).unwrap().warnings.is_empty());
    let out = assemble(&series, &[20.0], 0.0).unwrap();
    assert!(matches!(out.warnings.as_slice(), [Warning::OutOfValidityRange { label: Label::A, .. }]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn assembled_states_are_nearly_hermitian(la in -0.2f64..0.2, lb in -0.2f64..0.2, lf in -2.0f64..2.0) {
        let s = sorkin_scenario(8);
        let series = dyson_series(&s, &SeriesOptions { max_order: 4, max_kick_order: 2, steps: Some(60) }).unwrap();
        let out = assemble(&series, &[la, lb], lf).unwrap();
        prop_assert!(out.hermiticity_correction < 1e-12);
        prop_assert!(out.trace_correction < 1e-12);
        for (_, r) in &out.reduced {
            prop_assert!(r.hermiticity_defect() < 1e-15);
        }
    }
}

// ---------------------------------------------------------------- sorkin

#[test]
fn sorkin_coefficient_reproduces_reference() {
    // independent channel-engine prototype at dt ≈ 1e-3, Richardson-extrapolated
    let c = sorkin_coefficient(&sorkin_scenario(32)).unwrap();
    assert_relative_eq!(c.value, -7.303605309413881e-5, max_relative = 1e-6);
    assert!(c.error < 1e-4 * c.value.abs());
}

#[test]
fn pointlike_sender_carries_no_kick_information() {
    let s = sorkin_scenario(32);
    let smeared = sorkin_coefficient(&s).unwrap().value;
    let mut p = s.clone();
    p.detectors[0] = pointlike_limit(&p.detectors[0]);
    let point = sorkin_coefficient(&p).unwrap().value;
    assert!(point.abs() < 1e-3 * smeared.abs(), "{point} vs {smeared}");
}

#[test]
fn kick_slope_without_a_is_at_the_commutator_floor() {
    let s = sorkin_scenario(32);
    let series = dyson_series(&s, &SeriesOptions { max_order: 3, max_kick_order: 1, steps: None }).unwrap();
    let direct = series.excitation(&series.key(&[(Label::B, 1)], 1).unwrap(), Label::B).re;
    let sm = sorkin_coefficient(&s).unwrap().value;
    assert!(direct.abs() * 0.05 < 1e-2 * sm.abs() * 0.05f64.powi(3), "{direct}");
}

#[test]
fn kick_dependence_is_linear_at_leading_order() {
    let s = sorkin_scenario(16);
    let series = dyson_series(&s, &SeriesOptions { max_order: 3, max_kick_order: 3, steps: None }).unwrap();
    let coeff = sorkin_coefficient(&s).unwrap().value;
    let lam = 0.05;
    let p = |lf: f64| assemble(&series, &[lam, lam], lf).unwrap().excitation_probability(Label::B).unwrap();
    let p0 = p(0.0);
    for lf in [0.05, 0.1, 0.2] {
        let slope = (p(lf) - p0) / lf;
        // curvature comes from entries with two or more kick insertions
        let bound: f64 = series
            .entries
            .keys()
            .filter(|k| k.kick >= 2)
            .map(|k| series.excitation(k, Label::B).norm() * lam.powi(k.order() as i32) * lf.powi(k.kick as i32 - 1))
            .sum::<f64>()
            + 1e-2 * coeff.abs() * lam.powi(3);
        let direct = series.excitation(&series.key(&[(Label::B, 1)], 1).unwrap(), Label::B).re * lam;
        assert!((slope - direct - coeff * lam.powi(3)).abs() <= bound, "λ_f={lf}");
    }
}

#[test]
fn geometry_preconditions_are_enforced() {
    let s = sorkin_scenario(8);
    let mut timelike = s.clone();
    timelike.kick = Some(Kick {
        profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 1.0, 0.3)),
        lambda: 1.0,
    });
    assert!(matches!(sorkin_coefficient(&timelike), Err(PerturbationError::GeometryViolation(_))));
    let mut late_a = s.clone();
    late_a.detectors[0] = det(Label::A, 2.3, 0.4, -6.0, 0.5);
    assert!(matches!(sorkin_coefficient(&late_a), Err(PerturbationError::GeometryViolation(_))));
    let mut no_kick = s.clone();
    no_kick.kick = None;
    assert!(matches!(check_sorkin_geometry(&no_kick), Err(PerturbationError::GeometryViolation(_))));
}

#[test]
fn scenario_validation() {
    let s = sorkin_scenario(8);
    assert!(s.validate().is_ok());
    let mut short = s.clone();
    short.window = (0.0, 2.8);
    assert!(matches!(short.validate(), Err(PerturbationError::InvalidScenario(_))));
    let mut long = s.clone();
    long.window = (-0.5, 9.0);
    assert!(matches!(long.validate(), Err(PerturbationError::InvalidScenario(_))));
    let mut dup = s.clone();
    dup.detectors[1].label = Label::A;
    assert!(dup.validate().is_err());
    let mut outside = s.clone();
    outside.detectors[0].smearing.x_center = 9.0;
    assert!(matches!(outside.validate(), Err(PerturbationError::Field(_))));
}
