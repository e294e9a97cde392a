use std::str::FromStr;
use std::time::Instant;

use cdl_detector::{commutator_floor, pointlike_limit, DetectorSpec, Label};
use cdl_exactsim::{
    coupling_derivative, excitation_probability, factorization_residual, final_detector_state,
    mixed_coupling_derivative, order_probe_k, sorkin_probe, sorkin_slope, Estimate, KProbe, StateEstimate,
};
use cdl_field::{smeared_commutator, GaussianFieldState};
use cdl_geometry::sampling::{classify_sampled, sample_lattice};
use cdl_geometry::{classify_causal, CausalRelation, Convention, GeometryError, Region};
use cdl_perturbation::{
    check_sorkin_geometry, factorization_defect_leading, response_probability, signaling_coefficient,
    sorkin_coefficient, Scenario,
};
use num_complex::Complex64 as C;

use crate::converge::scan_from_file;
use crate::{Cell, Claim, HarnessError, LoadedScenario, MeasurementBasis, ResultRecord, ScenarioFile, Table};

/// Relative agreement required between perturbative and exact values.
const AGREEMENT: f64 = 0.02;
/// Separation required between a NotOrderable residual and the step error.
const NOT_ORDERABLE_MARGIN: f64 = 100.0;
/// Relative agreement for the Sorkin slope, which carries a finite-difference
/// error in the kick strength on top.
const SORKIN_AGREEMENT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Experiment {
    Classify,
    Respond,
    Nosignal,
    Factorization,
    Sorkin,
    Korder,
    Converge,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Classify,
        Experiment::Respond,
        Experiment::Nosignal,
        Experiment::Factorization,
        Experiment::Sorkin,
        Experiment::Korder,
        Experiment::Converge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Classify => "classify",
            Experiment::Respond => "respond",
            Experiment::Nosignal => "nosignal",
            Experiment::Factorization => "factorization",
            Experiment::Sorkin => "sorkin",
            Experiment::Korder => "korder",
            Experiment::Converge => "converge",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

pub fn run_experiment(exp: Experiment, loaded: &LoadedScenario) -> Result<ResultRecord, HarnessError> {
    let start = Instant::now();
    let mut rec = ResultRecord::new(exp.name(), &loaded.input_hash);
    let ctx = Ctx { file: &loaded.file, scen: &loaded.scenario };
    match exp {
        Experiment::Classify => classify(&ctx, &mut rec)?,
        Experiment::Respond => respond(&ctx, &mut rec)?,
        Experiment::Nosignal => nosignal(&ctx, &mut rec)?,
        Experiment::Factorization => factorization(&ctx, &mut rec)?,
        Experiment::Sorkin => sorkin(&ctx, &mut rec)?,
        Experiment::Korder => korder(&ctx, &mut rec)?,
        Experiment::Converge => scan_from_file(loaded, &mut rec)?,
    }
    rec.wall_clock = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Runs several experiments on one scenario concurrently.
pub fn run_batch(exps: &[Experiment], loaded: &LoadedScenario) -> Vec<Result<ResultRecord, HarnessError>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = exps.iter().map(|&e| s.spawn(move || run_experiment(e, loaded))).collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    })
}

struct Ctx<'a> {
    file: &'a ScenarioFile,
    scen: &'a Scenario,
}

impl Ctx<'_> {
    fn detector(&self, label: Label) -> Result<&DetectorSpec, HarnessError> {
        self.scen.detector(label).ok_or_else(|| HarnessError::Validation(format!("scenario has no detector {label}")))
    }

    fn factor(&self) -> f64 {
        self.file.tolerances.floor_factor
    }

    fn order(&self) -> usize {
        self.scen.resolution.quad_order
    }

    fn require_oracle(&self, what: &str) -> Result<(), HarnessError> {
        if !self.file.oracle.enabled {
            return Err(HarnessError::Validation(format!("{what} needs the exact oracle (oracle.enabled = false)")));
        }
        Ok(())
    }

    /// Same scenario at half the field cutoff, used to measure truncation floors.
    fn half_cutoff(&self) -> Result<LoadedScenario, HarnessError> {
        let mut f = self.file.clone();
        f.field.cutoff = (f.field.cutoff / 2).max(1);
        LoadedScenario::from_file(f)
    }
}

fn relation(a: &Region, b: &Region) -> Result<CausalRelation, HarnessError> {
    classify_causal(a, b, Convention::Closed).map_err(|e| match e {
        GeometryError::OverlappingRegions => HarnessError::Geometry("detector supports overlap".into()),
        other => other.into(),
    })
}

fn with_coupling(scen: &Scenario, label: Label, coupling: f64) -> Scenario {
    let mut s = scen.clone();
    s.detectors.iter_mut().filter(|d| d.label == label).for_each(|d| d.coupling = coupling);
    s
}

fn with_pointlike(scen: &Scenario, label: Label) -> Scenario {
    let mut s = scen.clone();
    s.detectors.iter_mut().filter(|d| d.label == label).for_each(|d| *d = pointlike_limit(d));
    s
}

fn classify(ctx: &Ctx, rec: &mut ResultRecord) -> Result<(), HarnessError> {
    let mut pairs: Vec<(String, Region, Region, Option<String>)> = Vec::new();
    if ctx.file.pairs.is_empty() {
        for (i, a) in ctx.scen.detectors.iter().enumerate() {
            for b in &ctx.scen.detectors[i + 1..] {
                pairs.push((format!("{}-{}", a.label, b.label), a.support(), b.support(), None));
            }
        }
    } else {
        for p in &ctx.file.pairs {
            let (a, b) = p.regions()?;
            pairs.push((p.name.clone(), a, b, p.expect.clone()));
        }
    }
    let h = ctx.file.probe.sample_spacing;
    let mut t = Table::new(
        "pairs",
        &["case", "a_t_min", "a_t_max", "a_x_min", "a_x_max", "b_t_min", "b_t_max", "b_x_min", "b_x_max", "relation", "sampled", "expected", "agrees"],
    );
    let (mut disagreements, mut mismatches) = (0usize, 0usize);
    for (name, a, b, expect) in &pairs {
        let exact = match classify_causal(a, b, Convention::Closed) {
            Ok(r) => r.name().to_string(),
            Err(GeometryError::OverlappingRegions) => "Overlapping".into(),
            Err(e) => return Err(e.into()),
        };
        let sampled = classify_sampled(&sample_lattice(a, h), &sample_lattice(b, h), a, b, Convention::Closed)
            .map_or("Overlapping".to_string(), |r| r.name().to_string());
        disagreements += usize::from(exact != sampled);
        if expect.as_ref().is_some_and(|e| *e != exact) {
            mismatches += 1;
        }
        let mut row: Vec<Cell> = vec![name.as_str().into()];
        row.extend([a.t_min, a.t_max, a.x_min, a.x_max, b.t_min, b.t_max, b.x_min, b.x_max].map(Cell::from));
        row.push(exact.as_str().into());
        row.push(sampled.as_str().into());
        row.push(expect.clone().unwrap_or_default().into());
        row.push(if expect.as_ref().is_none_or(|e| *e == exact) { "yes" } else { "no" }.into());
        t.push(row);
    }
    rec.set("pairs", pairs.len() as f64);
    rec.set("sampling_disagreements", disagreements as f64);
    rec.set("expectation_mismatches", mismatches as f64);
    rec.tables.push(t);
    Ok(())
}

fn respond(ctx: &Ctx, rec: &mut ResultRecord) -> Result<(), HarnessError> {
    let opts = ctx.file.oracle_options();
    let mut t = Table::new("response", &["detector", "p_perturbative", "p_exact", "exact_error", "rel_diff", "oracle_dim"]);
    let (mut worst, mut step) = (0.0f64, 0.0f64);
    for d in &ctx.scen.detectors {
        let single = Scenario { detectors: vec![d.clone()], ..ctx.scen.clone() };
        let p = response_probability(d, &GaussianFieldState::Vacuum, &single)?;
        let (exact, dim) = if ctx.file.oracle.enabled {
            let info = ctx.file.oracle_space(&single)?;
            (Some(excitation_probability(d.label, &single, &info, &opts)?), info.dim())
        } else {
            (None, 0)
        };
        let row_label = d.label.to_string();
        match exact {
            Some(e) => {
                let rel = (e.value - p).abs() / p.abs();
                worst = worst.max(rel);
                step = step.max(e.error);
                rec.claims.push(Claim::agrees(&format!("response_{}", d.label), e.value, p, AGREEMENT));
                t.push(vec![row_label.into(), p.into(), e.value.into(), e.error.into(), rel.into(), dim.into()]);
            }
            None => t.push(vec![row_label.into(), p.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), 0usize.into()]),
        }
    }
    if ctx.file.oracle.enabled {
        rec.set("max_rel_diff", worst);
    }
    rec.budget.quadrature = Some(ctx.scen.resolution.tolerance);
    rec.budget.step = ctx.file.oracle.enabled.then_some(step);
    rec.tables.push(t);
    Ok(())
}

fn basis(b: MeasurementBasis) -> [[C; 2]; 2] {
    let (o, z) = (C::new(1.0, 0.0), C::new(0.0, 0.0));
    match b {
        MeasurementBasis::Z => [[o, z], [z, o]],
        MeasurementBasis::X => {
            let r = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [[r, r], [r, -r]]
        }
    }
}

fn nosignal(ctx: &Ctx, rec: &mut ResultRecord) -> Result<(), HarnessError> {
    let (sl, rl) = (ctx.file.sender()?, ctx.file.receiver()?);
    let (a, b) = (ctx.detector(sl)?, ctx.detector(rl)?);
    let rel = relation(&a.support(), &b.support())?;
    let sig = signaling_coefficient(a, b, ctx.scen)?;
    // kernel-level floor: a bound on the signaling coefficient at this cutoff
    let kfloor = commutator_floor(a, b, &ctx.scen.field, ctx.order())?;
    let lam = a.coupling * b.coupling;
    rec.notes.push(format!("{sl} and {rl} are {rel}"));
    let mut t = Table::new("signaling", &["quantity", "value", "error", "floor"]);
    t.push(vec!["signaling_coefficient".into(), sig.value.into(), sig.error.into(), kfloor.into()]);
    t.push(vec!["signaling_scaled".into(), (sig.value * lam).into(), (sig.error * lam).into(), (kfloor * lam).into()]);
    rec.set("signaling_coefficient", sig.value);
    rec.set("commutator_floor", kfloor);
    rec.budget.quadrature = Some(sig.error);
    rec.budget.truncation_floor = Some(kfloor * lam);
    let spacelike = rel == CausalRelation::Spacelike;
    if spacelike {
        rec.claims.push(Claim::vanishes("signaling_coefficient", sig.value, kfloor, 1.0));
    }
    if ctx.file.oracle.enabled {
        let opts = ctx.file.oracle_options();
        let info = ctx.file.oracle_space(ctx.scen)?;
        let plain = final_detector_state(rl, ctx.scen, &info, &opts, None)?;
        let measured = final_detector_state(rl, ctx.scen, &info, &opts, Some(&(sl, basis(ctx.file.probe.basis))))?;
        let d_meas = plain.state.trace_distance(&measured.state);
        let meas_err = plain.error + measured.error;
        let meas_floor = lam * kfloor + meas_err;
        let h = ctx.file.probe.coupling_step;
        let deriv = coupling_derivative(sl, rl, ctx.scen, &info, &opts, h)?;
        let d_deriv = StateEstimate::half_trace_norm(&deriv.state);
        let deriv_floor = b.coupling * kfloor + deriv.error;
        let mixed = mixed_coupling_derivative(sl, rl, ctx.scen, &info, &opts, h)?;
        let exact_sig = StateEstimate::half_trace_norm(&mixed.state);
        t.push(vec!["measurement_trace_distance".into(), d_meas.into(), meas_err.into(), meas_floor.into()]);
        t.push(vec!["coupling_derivative".into(), d_deriv.into(), deriv.error.into(), deriv_floor.into()]);
        t.push(vec!["signaling_exact".into(), exact_sig.into(), mixed.error.into(), kfloor.into()]);
        t.push(vec![
            "signaling_matrix_difference".into(),
            mixed.state.max_abs_diff(&sig.matrix).into(),
            (mixed.error + sig.error).into(),
            kfloor.into(),
        ]);
        rec.set("measurement_trace_distance", d_meas);
        rec.set("coupling_derivative", d_deriv);
        rec.set("signaling_exact", exact_sig);
        rec.set("oracle_dim", info.dim() as f64);
        rec.budget.step = Some(meas_err);
        if spacelike {
            rec.claims.push(Claim::vanishes("measurement_trace_distance", d_meas, meas_floor, ctx.factor()));
            rec.claims.push(Claim::vanishes("coupling_derivative", d_deriv, deriv_floor, ctx.factor()));
        }
        // dual route: perturbative kernel against the exact mixed derivative;
        // for spacelike pairs both sit at the truncation floor
        if !spacelike {
            rec.claims.push(Claim::agrees("signaling_exact", exact_sig, sig.value, AGREEMENT));
        }
    }
    rec.tables.push(t);
    Ok(())
}

fn factorization(ctx: &Ctx, rec: &mut ResultRecord) -> Result<(), HarnessError> {
    ctx.require_oracle("factorization")?;
    let (sl, rl) = (ctx.file.sender()?, ctx.file.receiver()?);
    let (a, b) = (ctx.detector(sl)?, ctx.detector(rl)?);
    relation(&a.support(), &b.support())?;
    let info = ctx.file.oracle_space(ctx.scen)?;
    let r = factorization_residual(sl, rl, ctx.scen, &info, &ctx.file.oracle_options())?;
    let (first, second) = (ctx.detector(r.first)?, ctx.detector(r.second)?);
    let defect = factorization_defect_leading(first, second, ctx.scen)?;
    let lam = a.coupling * b.coupling;
    let predicted = defect.norm * lam;
    let half = ctx.half_cutoff()?;
    let half_info = half.file.oracle_space(&half.scenario)?;
    let coarse = factorization_residual(sl, rl, &half.scenario, &half_info, &ctx.file.oracle_options())?;
    let truncation = (r.residual - coarse.residual).abs();
    // microcausality only bounds the spacelike case by the commutator size
    let spacelike = r.relation == CausalRelation::Spacelike;
    let leak = if spacelike { lam * commutator_floor(a, b, &ctx.scen.field, ctx.order())? } else { 0.0 };
    // a nonzero residual is a property of the truncated model, so only the
    // integration error can fake one
    let orderable = r.relation.is_orderable();
    let floor = if orderable { r.step_error + truncation + leak } else { r.step_error };
    rec.notes.push(format!("{sl} and {rl} are {}; product ordered {} then {}", r.relation, r.first, r.second));
    let mut t = Table::new("factorization", &["quantity", "value", "floor"]);
    t.push(vec!["residual".into(), r.residual.into(), floor.into()]);
    t.push(vec!["commutator".into(), r.commutator.into(), floor.into()]);
    t.push(vec!["step_error".into(), r.step_error.into(), f64::NAN.into()]);
    t.push(vec!["residual_half_cutoff".into(), coarse.residual.into(), f64::NAN.into()]);
    t.push(vec!["perturbative_residual".into(), predicted.into(), (defect.error * lam).into()]);
    if let Some(full) = r.full_space {
        t.push(vec!["full_space_residual".into(), full.into(), f64::NAN.into()]);
    }
    rec.set("residual", r.residual);
    rec.set("commutator", r.commutator);
    rec.set("step_error", r.step_error);
    rec.set("perturbative_residual", predicted);
    rec.set("floor", floor);
    rec.set("oracle_dim", info.dim() as f64);
    rec.set("residual_half_cutoff", coarse.residual);
    rec.budget = crate::ErrorBudget { quadrature: Some(defect.error * lam), step: Some(r.step_error), truncation_floor: Some(truncation + leak) };
    if orderable {
        rec.claims.push(Claim::vanishes("residual", r.residual, floor, ctx.factor()));
    } else {
        rec.claims.push(Claim::exceeds("residual", r.residual, floor, NOT_ORDERABLE_MARGIN));
        rec.claims.push(Claim::agrees("perturbative_residual", r.residual, predicted, SORKIN_AGREEMENT));
    }
    if spacelike {
        rec.claims.push(Claim::vanishes("commutator", r.commutator, floor, ctx.factor()));
    }
    rec.tables.push(t);
    Ok(())
}

fn sorkin(ctx: &Ctx, rec: &mut ResultRecord) -> Result<(), HarnessError> {
    check_sorkin_geometry(ctx.scen)?;
    ctx.require_oracle("sorkin")?;
    let coef = sorkin_coefficient(ctx.scen)?;
    let (la, lb) = (ctx.detector(Label::A)?.coupling, ctx.detector(Label::B)?.coupling);
    let predicted = coef.slope(la, lb);
    let opts = ctx.file.oracle_options();
    let h = ctx.file.probe.kick_step;
    let info = ctx.file.oracle_space(ctx.scen)?;
    let smeared = sorkin_slope(ctx.scen, &info, &opts, h)?;
    let zero = sorkin_slope(&with_coupling(ctx.scen, Label::A, 0.0), &info, &opts, h)?;
    let point_scen = with_pointlike(ctx.scen, Label::A);
    let point = sorkin_slope(&point_scen, &info, &opts, h)?;
    let half = ctx.half_cutoff()?;
    let half_info = half.file.oracle_space(&half.scenario)?;
    let coarse = sorkin_slope(&half.scenario, &half_info, &opts, h)?;
    // truncation uncertainty of the headline slope; the pointlike slope is not part of it
    let floor = (smeared.value - coarse.value).abs() + zero.value.abs() + smeared.error;

    let mut t = Table::new("slopes", &["variant", "slope", "error", "floor"]);
    for (name, e) in [("smeared", smeared), ("lambda_a_zero", zero), ("pointlike", point), ("smeared_half_cutoff", coarse)] {
        t.push(vec![name.into(), e.value.into(), e.error.into(), floor.into()]);
    }
    t.push(vec!["perturbative".into(), predicted.into(), (coef.error * la * la * lb).into(), floor.into()]);
    rec.tables.push(t);

    let pts = sorkin_probe(ctx.scen, &info, &opts, &ctx.file.probe.lambda_f)?;
    let ppts = sorkin_probe(&point_scen, &info, &opts, &ctx.file.probe.lambda_f)?;
    let mut p = Table::new("probe", &["lambda_f", "p_b_smeared", "error_smeared", "p_b_pointlike", "error_pointlike"]);
    for (s, q) in pts.iter().zip(&ppts) {
        p.push(vec![s.lambda_f.into(), s.p_b.value.into(), s.p_b.error.into(), q.p_b.value.into(), q.p_b.error.into()]);
    }
    rec.tables.push(p);

    rec.set("slope_smeared", smeared.value);
    rec.set("slope_lambda_a_zero", zero.value);
    rec.set("slope_pointlike", point.value);
    rec.set("slope_half_cutoff", coarse.value);
    rec.set("slope_perturbative", predicted);
    rec.set("floor", floor);
    rec.set("oracle_dim", info.dim() as f64);
    rec.budget = crate::ErrorBudget {
        quadrature: Some(coef.error * la * la * lb),
        step: Some(smeared.error),
        truncation_floor: Some(floor),
    };
    let k = ctx.factor();
    rec.claims.push(Claim::exceeds("smeared_over_lambda_a_zero", smeared.value, zero.value, k));
    rec.claims.push(Claim::exceeds("smeared_over_pointlike", smeared.value, point.value, k));
    rec.claims.push(Claim::exceeds("smeared_over_floor", smeared.value, floor, k));
    rec.claims.push(Claim::vanishes("pointlike", point.value, floor, k));
    rec.claims.push(Claim::agrees("perturbative", smeared.value, predicted, SORKIN_AGREEMENT));
    Ok(())
}

fn korder(ctx: &Ctx, rec: &mut ResultRecord) -> Result<(), HarnessError> {
    ctx.require_oracle("korder")?;
    for l in [Label::A, Label::B, Label::C] {
        ctx.detector(l)?;
    }
    let opts = ctx.file.oracle_options();
    let h = ctx.file.probe.order_step;
    let info = ctx.file.oracle_space(ctx.scen)?;
    let k = order_probe_k(ctx.scen, &info, &opts, h)?;
    let kp = order_probe_k(&with_pointlike(ctx.scen, Label::A), &info, &opts, h)?;
    let half = ctx.half_cutoff()?;
    let half_info = half.file.oracle_space(&half.scenario)?;
    let kh = order_probe_k(&half.scenario, &half_info, &opts, h)?;
    let (b, c) = (ctx.detector(Label::B)?, ctx.detector(Label::C)?);
    let bc_bound = commutator_floor(b, c, &ctx.scen.field, ctx.order())?;
    // microcausality violation between B and C at this cutoff; N/2 is too
    // coarse to resolve the supports, so a half-cutoff spread would swamp it
    let bc_floor = smeared_commutator(&b.smearing.into(), &c.smearing.into(), &ctx.scen.field, ctx.order())?.abs();
    let floor4 = (k.fourth.value - kh.fourth.value).abs() + k.fourth.error + kp.fourth.value.abs() + kp.fourth.error;

    let mut t = Table::new("derivatives", &["derivative", "value", "error", "floor", "pointlike_a", "half_cutoff"]);
    let get = |p: &KProbe, i: Label, j: Label| p.second_derivative(i, j).expect("all pairs present");
    let k_fac = ctx.factor();
    for (i, j) in [(Label::A, Label::A), (Label::A, Label::B), (Label::B, Label::B), (Label::A, Label::C), (Label::B, Label::C), (Label::C, Label::C)] {
        let e = get(&k, i, j);
        let name = format!("d2_{i}{j}");
        let involves_c = i == Label::C || j == Label::C;
        let floor = if involves_c { bc_floor + e.error } else { f64::NAN };
        t.push(vec![name.as_str().into(), e.value.into(), e.error.into(), floor.into(), get(&kp, i, j).value.into(), get(&kh, i, j).value.into()]);
        if involves_c {
            rec.claims.push(Claim::vanishes(&name, e.value, floor, k_fac));
        }
    }
    let row = |name: &str, e: Estimate, floor: f64, p: Estimate, q: Estimate| -> Vec<Cell> {
        vec![name.into(), e.value.into(), e.error.into(), floor.into(), p.value.into(), q.value.into()]
    };
    let floor3 = bc_floor + k.third.error;
    t.push(row("d3_ABC", k.third, floor3, kp.third, kh.third));
    t.push(row("d4_AABC", k.fourth, floor4, kp.fourth, kh.fourth));
    rec.claims.push(Claim::vanishes("d3_ABC", k.third.value, floor3, k_fac));
    rec.claims.push(Claim::exceeds("d4_AABC", k.fourth.value, floor4, k_fac));
    rec.set("d4_AABC", k.fourth.value);
    rec.set("d4_floor", floor4);
    rec.set("bc_commutator", bc_floor);
    rec.set("bc_commutator_bound", bc_bound);
    rec.set("oracle_dim", info.dim() as f64);
    rec.budget = crate::ErrorBudget { quadrature: None, step: Some(k.fourth.error), truncation_floor: Some(floor4) };
    rec.notes.push(
        "p_B derivatives probe the expectation of the order-K operators in one state; a vanishing probe is \
         necessary, not sufficient, evidence that the operator vanishes"
            .into(),
    );
    rec.tables.push(t);
    Ok(())
}
