use approx::assert_relative_eq;
use cdl_field::quadrature::GaussLegendre;
use cdl_field::{
    classical_field, pauli_jordan, smeared_commutator, smeared_mode_coeffs,
    smeared_mode_coeffs_checked, wightman, Complex, FieldError, FieldSpec, GaussianFieldState, Kick,
    SmearingProfile, SpacetimeFunction,
};
use cdl_geometry::{Event, Region};
use proptest::prelude::*;

fn default_spec() -> FieldSpec<f64> {
    FieldSpec::default()
}

fn event() -> impl Strategy<Value = Event<f64>> {
    (-5.0..5.0f64, -8.0..8.0f64).prop_map(|(t, x)| Event::new(t, x))
}

proptest! {
    #[test]
    fn commutator_is_antisymmetric(x in event(), y in event()) {
        let spec = default_spec();
        prop_assert_eq!(pauli_jordan(&x, &y, &spec), -pauli_jordan(&y, &x, &spec));
    }

    #[test]
    fn commutator_vanishes_at_equal_times(t in -5.0..5.0f64, x1 in -8.0..8.0f64, x2 in -8.0..8.0f64) {
        let spec = default_spec();
        prop_assert_eq!(pauli_jordan(&Event::new(t, x1), &Event::new(t, x2), &spec), 0.0);
    }

    #[test]
    fn imaginary_wightman_is_state_independent(
        x in event(), y in event(),
        seed in proptest::collection::vec((-0.5..0.5f64, -0.5..0.5f64, 0.0..2.0f64), 33),
    ) {
        let spec = FieldSpec::new(20.0, 1.0, 16).unwrap();
        let coherent = GaussianFieldState::Coherent(seed.iter().map(|&(a, b, _)| Complex::new(a, b)).collect());
        let thermal = GaussianFieldState::Thermal(seed.iter().map(|&(_, _, n)| n).collect());
        let half_pj = 0.5 * pauli_jordan(&x, &y, &spec);
        for state in [GaussianFieldState::Vacuum, coherent, thermal] {
            let w = wightman(&x, &y, &state, &spec);
            prop_assert!((w.im - half_pj).abs() < 1e-13, "{} vs {}", w.im, half_pj);
            let w_rev = wightman(&y, &x, &state, &spec);
            prop_assert!((w - w_rev.conj()).norm() < 1e-13);
        }
    }
}

#[test]
fn regression_values_from_independent_mode_sum() {
    let spec = default_spec();
    let x = Event::new(1.0, 0.0);
    let y = Event::new(0.0, 0.0);
    assert_relative_eq!(pauli_jordan(&x, &y, &spec), -0.37977070627440346, max_relative = 1e-13);
    let w = wightman(&x, &y, &GaussianFieldState::Vacuum, &spec);
    assert_relative_eq!(w.re, -0.014333940286941406, max_relative = 1e-12);
    assert_relative_eq!(w.im, -0.18988535313720173, max_relative = 1e-12);
}

#[test]
fn bump_coefficients_match_adaptive_quadrature_table() {
    let spec = default_spec();
    let g = SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 0.0, 0.5));
    let c = smeared_mode_coeffs(&g, &spec, 48).unwrap();
    let table = [
        (0, 0.09354118631476313),
        (1, 0.09100886975367602),
        (5, 0.062116840728147084),
        (20, 0.006085042168442887),
        (64, 2.407425436075663e-05),
    ];
    for (n, re) in table {
        let v = c.coeffs[(n + 64) as usize];
        assert_relative_eq!(v.re, re, max_relative = 1e-7);
        assert!(v.im.abs() < 1e-12);
    }
}

#[test]
fn separable_and_general_paths_agree_at_four_times_density() {
    let spec = default_spec();
    let p = SmearingProfile::new(0.3, 0.5, -1.0, 0.5);
    let general = SpacetimeFunction::general(p.support(), move |t, x| p.eval(t, x));
    let sep = smeared_mode_coeffs(&SpacetimeFunction::Separable(p), &spec, 48).unwrap();
    let gen = smeared_mode_coeffs(&general, &spec, 192).unwrap();
    assert!(sep.relative_distance(&gen) < 1e-8, "{}", sep.relative_distance(&gen));
}

#[test]
fn coefficients_pass_refinement_self_check() {
    let spec = default_spec();
    let g = SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 0.0, 0.5));
    let check = smeared_mode_coeffs_checked(&g, &spec, 48, 4).unwrap();
    assert!(check.passes(1e-6), "{}", check.rel_change);
}

#[test]
fn zero_function_has_zero_coefficients() {
    let spec = default_spec();
    let r = Region::new(-1.0, 1.0, -1.0, 1.0).unwrap();
    let c = smeared_mode_coeffs(&SpacetimeFunction::general(r, |_, _| 0.0), &spec, 16).unwrap();
    assert!(c.coeffs.iter().all(|c| *c == Complex::new(0.0, 0.0)));
}

#[test]
fn real_separable_smearing_pairs_opposite_modes() {
    let spec = default_spec();
    let g = SpacetimeFunction::Separable(SmearingProfile::new(0.2, 0.7, 1.3, 0.4));
    let c = smeared_mode_coeffs(&g, &spec, 48).unwrap();
    let n = spec.cutoff;
    for j in 1..=n {
        let (plus, minus) = (c.coeffs[n + j], c.coeffs[n - j]);
        assert_relative_eq!(plus.norm(), minus.norm(), max_relative = 1e-10, epsilon = 1e-18);
    }
}

#[test]
fn support_outside_cavity_is_rejected() {
    let spec = default_spec();
    let g = SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 9.8, 0.5));
    assert!(matches!(
        smeared_mode_coeffs(&g, &spec, 16),
        Err(FieldError::SupportOutsideDomain { .. })
    ));
}

/// `λ ∫ f(y) PJ(y, e) dy` by direct tensor quadrature of the commutator.
fn classical_field_by_commutator(kick: &Kick<f64>, e: &Event<f64>, spec: &FieldSpec<f64>) -> f64 {
    let SpacetimeFunction::Separable(p) = &kick.profile else { unreachable!() };
    let q = GaussLegendre::<f64>::new(48);
    let mut sum = 0.0;
    for (t, wt) in q.mapped(p.t_center, p.t_width) {
        for (x, wx) in q.mapped(p.x_center, p.x_width) {
            sum += wt * wx * p.eval(t, x) * pauli_jordan(&Event::new(t, x), e, spec);
        }
    }
    kick.lambda * sum
}

#[test]
fn classical_field_matches_commutator_integral() {
    let spec = FieldSpec::new(20.0, 1.0, 32).unwrap();
    let kick = Kick {
        profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, -2.0, 0.5)),
        lambda: 0.7,
    };
    for e in [Event::new(2.0, -1.5), Event::new(1.0, 0.0), Event::new(3.0, 1.0)] {
        let modes = classical_field(&kick, &e, &spec, 48).unwrap();
        let direct = classical_field_by_commutator(&kick, &e, &spec);
        assert!((modes - direct).abs() < 1e-10 * (1.0 + direct.abs()), "{modes} vs {direct}");
    }
    // inside the future cone the field is nonzero
    assert!(classical_field(&kick, &Event::new(2.0, -2.0), &spec, 48).unwrap().abs() > 1e-2);
}

#[test]
fn classical_field_is_linear_in_coupling() {
    let spec = default_spec();
    let mk = |lambda| Kick {
        profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 0.0, 0.5)),
        lambda,
    };
    let e = Event::new(2.0, 0.7);
    let one = classical_field(&mk(1.0), &e, &spec, 48).unwrap();
    let three = classical_field(&mk(3.0), &e, &spec, 48).unwrap();
    assert_relative_eq!(three, 3.0 * one, max_relative = 1e-13);
    assert_eq!(classical_field(&mk(0.0), &e, &spec, 48).unwrap(), 0.0);
}

#[test]
fn classical_field_outside_cone_decays_with_cutoff() {
    let kick = Kick {
        profile: SpacetimeFunction::Separable(SmearingProfile::new(0.0, 0.5, 0.0, 0.5)),
        lambda: 1.0,
    };
    let e = Event::new(1.0, 3.0);
    let values: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&n| classical_field(&kick, &e, &FieldSpec::<f64>::new(20.0, 1.0, n).unwrap(), 64).unwrap().abs())
        .collect();
    assert!(values[3] < 1e-3 * values[0].max(1e-12) || values[3] < 1e-9, "{values:?}");
}

fn bump_fn(tc: f64, xc: f64) -> SpacetimeFunction<f64> {
    SpacetimeFunction::Separable(SmearingProfile::new(tc, 0.5, xc, 0.5))
}

#[test]
fn smeared_commutator_antisymmetry_and_self_zero() {
    let spec = default_spec();
    let g1 = bump_fn(0.0, 0.0);
    let g2 = bump_fn(1.5, 0.5);
    assert_eq!(smeared_commutator(&g1, &g1, &spec, 48).unwrap(), 0.0);
    let a = smeared_commutator(&g1, &g2, &spec, 48).unwrap();
    let b = smeared_commutator(&g2, &g1, &spec, 48).unwrap();
    assert_eq!(a, -b);
}

#[test]
fn smeared_commutator_matches_direct_double_integral() {
    let spec = FieldSpec::new(20.0, 1.0, 16).unwrap();
    let (p1, p2) = (SmearingProfile::new(0.0, 0.5, 0.0, 0.5), SmearingProfile::new(1.5, 0.5, 0.5, 0.5));
    let q = GaussLegendre::<f64>::new(40);
    let mut direct = 0.0;
    for (t1, w1) in q.mapped(0.0, 0.5) {
        for (x1, v1) in q.mapped(0.0, 0.5) {
            let e1 = Event::new(t1, x1);
            let f1 = w1 * v1 * p1.eval(t1, x1);
            for (t2, w2) in q.mapped(1.5, 0.5) {
                for (x2, v2) in q.mapped(0.5, 0.5) {
                    direct += f1 * w2 * v2 * p2.eval(t2, x2) * pauli_jordan(&e1, &Event::new(t2, x2), &spec);
                }
            }
        }
    }
    let modes = smeared_commutator(&p1.into(), &p2.into(), &spec, 48).unwrap();
    assert_relative_eq!(modes, direct, max_relative = 1e-6);
}

#[test]
fn spacelike_commutator_falls_with_cutoff_and_timelike_is_stable() {
    let g = bump_fn(0.0, 0.0);
    let spacelike = bump_fn(1.0, 3.5);
    let timelike = bump_fn(3.0, 0.5);
    let mut prev = f64::INFINITY;
    let mut last_time = 0.0;
    for n in [16usize, 32, 64, 128] {
        let spec = FieldSpec::new(20.0, 1.0, n).unwrap();
        let s = smeared_commutator(&g, &spacelike, &spec, 64).unwrap().abs();
        assert!(s <= prev * 1.1, "non-monotone at N = {n}: {s} after {prev}");
        prev = s;
        last_time = smeared_commutator(&g, &timelike, &spec, 64).unwrap().abs();
    }
    assert!(prev < 1e-3 * last_time, "{prev} vs {last_time}");
}

#[test]
fn single_precision_instantiation() {
    let spec = FieldSpec::<f32>::new(20.0, 1.0, 8).unwrap();
    let x = Event::new(1.0f32, 0.0);
    let y = Event::new(0.0f32, 0.0);
    let v32 = pauli_jordan(&x, &y, &spec);
    let v64 = pauli_jordan(&Event::new(1.0, 0.0), &Event::new(0.0, 0.0), &FieldSpec::new(20.0, 1.0, 8).unwrap());
    assert!((v32 as f64 - v64).abs() < 1e-5);
}
