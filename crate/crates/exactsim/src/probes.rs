use cdl_detector::{Label, Op2};
use cdl_geometry::{classify_causal, CausalRelation, Convention};
use cdl_perturbation::{check_sorkin_geometry, Scenario};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::evolve::{dense_scattering, spectral_norm};
use crate::{nonselective_measure, reduced_detector_state, ExactError, ExactState, OracleOptions, Propagator, SpaceInfo};

/// Value with an error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    /// Extrapolates a quantity with an `O(ε²)` error from steps `ε` and
    /// `ε/2`; the error bar adds the change to the fine values' own errors.
    pub fn richardson(coarse: Estimate, fine: Estimate) -> Estimate {
        Estimate {
            value: (4.0 * fine.value - coarse.value) / 3.0,
            error: (fine.value - coarse.value).abs() / 3.0 + fine.error,
        }
    }

    fn exact(value: f64) -> Estimate {
        Estimate { value, error: 0.0 }
    }
}

fn with_couplings(scen: &Scenario, couplings: &[(Label, f64)]) -> Scenario {
    let mut s = scen.clone();
    for d in &mut s.detectors {
        if let Some(&(_, l)) = couplings.iter().find(|(label, _)| *label == d.label) {
            d.coupling = l;
        }
    }
    s
}

fn with_kick_strength(scen: &Scenario, lambda_f: f64) -> Scenario {
    let mut s = scen.clone();
    if let Some(k) = s.kick.as_mut() {
        k.lambda = lambda_f;
    }
    s
}

/// Excitation probability of `label` after the full evolution, on a given
/// number of steps.
fn excitation_at(scen: &Scenario, info: &SpaceInfo, label: Label, steps: usize, leak: f64) -> Result<f64, ExactError> {
    let prop = Propagator::new(scen, info)?;
    let all: Vec<Label> = scen.detectors.iter().map(|d| d.label).collect();
    let state = prop.evolve_state(&ExactState::initial(scen, info)?, &all, steps);
    state.check_leak(info, leak)?;
    Ok(reduced_detector_state(label, &state, info)?.0[1][1].re)
}

fn base_steps(scen: &Scenario, info: &SpaceInfo, opts: &OracleOptions) -> Result<usize, ExactError> {
    Ok(Propagator::new(scen, info)?.steps_for(opts.step_for(scen)))
}

/// Step-halving driver: evaluates `f(steps)` and `f(2·steps)`, raises
/// `StepTooCoarse` if they differ by more than the tolerance, and returns
/// the Richardson value.
fn step_converged(
    what: &str,
    opts: &OracleOptions,
    steps: usize,
    f: impl Fn(usize) -> Result<Estimate, ExactError>,
) -> Result<Estimate, ExactError> {
    let coarse = f(steps)?;
    let fine = f(2 * steps)?;
    let change = (fine.value - coarse.value).abs();
    if change > opts.step_tolerance {
        return Err(ExactError::StepTooCoarse { what: what.into(), change, tolerance: opts.step_tolerance });
    }
    Ok(Estimate::richardson(coarse, fine))
}

/// Excitation probability of one detector after all detectors interacted.
pub fn excitation_probability(label: Label, scen: &Scenario, info: &SpaceInfo, opts: &OracleOptions) -> Result<Estimate, ExactError> {
    let steps = base_steps(scen, info, opts)?;
    step_converged("excitation probability", opts, steps, |n| {
        excitation_at(scen, info, label, n, opts.leak_tolerance).map(Estimate::exact)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationResidual {
    pub relation: CausalRelation,
    /// Labels in the order of the factorised product (`first` acts first).
    pub first: Label,
    pub second: Label,
    /// `‖(S_{A+B} − S_second S_first) P₀‖` on the refined grid, with `P₀`
    /// the projector on the field vacuum (any qubit state).
    pub residual: f64,
    /// `‖(S_A S_B − S_B S_A) P₀‖`.
    pub commutator: f64,
    /// `‖(S_{A+B}(δt) − S_{A+B}(δt/2)) P₀‖`.
    pub step_error: f64,
    /// Residual over the whole truncated space, for spaces up to 1024
    /// states. Dominated by the truncation boundary, where `[a, a†] ≠ 1`.
    pub full_space: Option<f64>,
}

/// Factorisation residual of the scattering operators, with the product
/// ordered so the detector that may come first (per `classify_causal`)
/// acts first.
pub fn factorization_residual(
    a: Label,
    b: Label,
    scen: &Scenario,
    info: &SpaceInfo,
    opts: &OracleOptions,
) -> Result<FactorizationResidual, ExactError> {
    let spec = |l: Label| scen.detector(l).ok_or_else(|| ExactError::Invalid(format!("no detector {l}")));
    let (da, db) = (spec(a)?, spec(b)?);
    let relation = classify_causal(&da.support(), &db.support(), Convention::Closed)
        .map_err(|e| ExactError::Invalid(e.to_string()))?;
    let (first, second) = if !relation.a_can_come_first() && relation.b_can_come_first() { (b, a) } else { (a, b) };
    let prop = Propagator::new(scen, info)?;
    let steps = prop.steps_for(opts.step_for(scen));
    let fine = 2 * steps;
    let dim = info.dim();
    let f = info.fock_dim();
    let sector: Vec<usize> = (0..1usize << info.qubits()).map(|s| s * f).collect();
    let run = |k: usize, seq: &[&[Label]], n: usize| {
        let mut v = vec![C::new(0.0, 0.0); dim];
        v[k] = C::new(1.0, 0.0);
        for subset in seq {
            prop.evolve(&mut v, subset, n);
        }
        v
    };
    let both: &[Label] = &[a, b];
    let difference = |x: &[&[Label]], nx: usize, y: &[&[Label]], ny: usize| {
        let cols: Vec<Vec<C>> = sector
            .iter()
            .map(|&k| run(k, x, nx).iter().zip(run(k, y, ny)).map(|(p, q)| p - q).collect())
            .collect();
        DMatrix::from_fn(dim, cols.len(), |i, j| cols[j][i]).singular_values().max()
    };
    let residual = difference(&[both], fine, &[&[first], &[second]], fine);
    let commutator = difference(&[&[second], &[first]], fine, &[&[first], &[second]], fine);
    let step_error = difference(&[both], fine, &[both], steps);
    let full_space = (dim <= 1024).then(|| {
        let s_ab = dense_scattering(&prop, both, fine);
        let p21 = dense_scattering(&prop, &[second], fine) * dense_scattering(&prop, &[first], fine);
        spectral_norm(&(s_ab - p21))
    });
    Ok(FactorizationResidual { relation, first, second, residual, commutator, step_error, full_space })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SorkinPoint {
    pub lambda_f: f64,
    pub p_b: Estimate,
}

/// `p_B` after kick and `S_{A+B}`, for each kick strength. The kick is
/// applied exactly through the displaced frame.
pub fn sorkin_probe(scen: &Scenario, info: &SpaceInfo, opts: &OracleOptions, lambda_fs: &[f64]) -> Result<Vec<SorkinPoint>, ExactError> {
    check_sorkin_geometry(scen)?;
    let steps = base_steps(scen, info, opts)?;
    lambda_fs
        .iter()
        .map(|&lf| {
            let s = with_kick_strength(scen, lf);
            let p_b = step_converged("p_B", opts, steps, |n| {
                excitation_at(&s, info, Label::B, n, opts.leak_tolerance).map(Estimate::exact)
            })?;
            Ok(SorkinPoint { lambda_f: lf, p_b })
        })
        .collect()
}

/// `∂p_B/∂λ_f` at `λ_f = 0`: central differences with steps `h` and `h/2`,
/// Richardson-combined in `h`, each on two time grids combined in `δt`.
pub fn sorkin_slope(scen: &Scenario, info: &SpaceInfo, opts: &OracleOptions, h: f64) -> Result<Estimate, ExactError> {
    check_sorkin_geometry(scen)?;
    let steps = base_steps(scen, info, opts)?;
    let on_grid = |n: usize| -> Result<Estimate, ExactError> {
        let p = |lf: f64| excitation_at(&with_kick_strength(scen, lf), info, Label::B, n, opts.leak_tolerance);
        let d = |h: f64| -> Result<f64, ExactError> { Ok((p(h)? - p(-h)?) / (2.0 * h)) };
        Ok(Estimate::richardson(Estimate::exact(d(h)?), Estimate::exact(d(h / 2.0)?)))
    };
    let coarse = on_grid(steps)?;
    let fine = on_grid(2 * steps)?;
    Ok(Estimate::richardson(coarse, fine))
}

/// Mixed coupling derivatives of `p_B` at the origin of `(λ_A, λ_B, λ_C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KProbe {
    pub h: f64,
    /// `∂²p_B/∂λ_i∂λ_j` for `i ≤ j` in the order A, B, C.
    pub second: Vec<((Label, Label), Estimate)>,
    /// `∂³p_B/∂λ_A∂λ_B∂λ_C`.
    pub third: Estimate,
    /// `∂⁴p_B/∂λ_A²∂λ_B∂λ_C`.
    pub fourth: Estimate,
}

impl KProbe {
    pub fn second_derivative(&self, i: Label, j: Label) -> Option<Estimate> {
        self.second.iter().find(|((a, b), _)| (*a, *b) == (i, j) || (*b, *a) == (i, j)).map(|(_, e)| *e)
    }
}

const ABC: [Label; 3] = [Label::A, Label::B, Label::C];

/// Finite-difference derivatives from the 27-point stencil `λ = h·s`,
/// `s ∈ {−1, 0, 1}³`, at `h` and `h/2` (Richardson in `h`) and on two time
/// grids (Richardson in `δt`).
pub fn order_probe_k(scen: &Scenario, info: &SpaceInfo, opts: &OracleOptions, h: f64) -> Result<KProbe, ExactError> {
    for l in ABC {
        scen.detector(l).ok_or_else(|| ExactError::Invalid(format!("order probe needs detector {l}")))?;
    }
    let steps = base_steps(scen, info, opts)?;
    let grids: Vec<Vec<Vec<f64>>> = [steps, 2 * steps]
        .iter()
        .map(|&n| {
            [h, h / 2.0]
                .iter()
                .map(|&hh| {
                    (0..27)
                        .map(|i| {
                            let s = stencil(i);
                            let c: Vec<(Label, f64)> = ABC.iter().zip(s).map(|(&l, s)| (l, s as f64 * hh)).collect();
                            excitation_at(&with_couplings(scen, &c), info, Label::B, n, opts.leak_tolerance)
                        })
                        .collect::<Result<Vec<f64>, ExactError>>()
                })
                .collect::<Result<Vec<_>, ExactError>>()
        })
        .collect::<Result<Vec<_>, ExactError>>()?;
    let combine = |f: &dyn Fn(&[f64], f64) -> f64| -> Estimate {
        let on_grid = |g: &Vec<Vec<f64>>| {
            Estimate::richardson(Estimate::exact(f(&g[0], h)), Estimate::exact(f(&g[1], h / 2.0)))
        };
        Estimate::richardson(on_grid(&grids[0]), on_grid(&grids[1]))
    };
    let mut second = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            let est = if i == j {
                combine(&|p: &[f64], h: f64| {
                    let e = |v: i8| p[index(unit(i, v))];
                    (e(1) - 2.0 * e(0) + e(-1)) / (h * h)
                })
            } else {
                combine(&|p: &[f64], h: f64| {
                    let mut acc = 0.0;
                    for si in [-1i8, 1] {
                        for sj in [-1i8, 1] {
                            let mut s = [0i8; 3];
                            s[i] = si;
                            s[j] = sj;
                            acc += (si * sj) as f64 * p[index(s)];
                        }
                    }
                    acc / (4.0 * h * h)
                })
            };
            second.push(((ABC[i], ABC[j]), est));
        }
    }
    let third = combine(&|p: &[f64], h: f64| {
        (0..27).map(|k| {
            let s = stencil(k);
            (s[0] * s[1] * s[2]) as f64 * p[k]
        }).sum::<f64>() / (8.0 * h * h * h)
    });
    let fourth = combine(&|p: &[f64], h: f64| {
        let mut acc = 0.0;
        for sb in [-1i8, 1] {
            for sc in [-1i8, 1] {
                let e = |sa: i8| p[index([sa, sb, sc])];
                acc += (sb * sc) as f64 * (e(1) - 2.0 * e(0) + e(-1));
            }
        }
        acc / (4.0 * h.powi(4))
    });
    Ok(KProbe { h, second, third, fourth })
}

fn stencil(i: usize) -> [i8; 3] {
    [(i / 9) as i8 - 1, ((i / 3) % 3) as i8 - 1, (i % 3) as i8 - 1]
}

fn index(s: [i8; 3]) -> usize {
    ((s[0] + 1) * 9 + (s[1] + 1) * 3 + (s[2] + 1)) as usize
}

fn unit(i: usize, v: i8) -> [i8; 3] {
    let mut s = [0i8; 3];
    s[i] = v;
    s
}

/// Reduced qubit state with an error bar (largest entry change).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEstimate {
    pub state: Op2,
    pub error: f64,
}

impl StateEstimate {
    fn richardson(coarse: &Op2, fine: &Op2) -> StateEstimate {
        StateEstimate {
            state: fine.scale(C::from(4.0 / 3.0)) - coarse.scale(C::from(1.0 / 3.0)),
            error: fine.max_abs_diff(coarse) / 3.0,
        }
    }

    /// Half the trace norm of a Hermitian matrix.
    pub fn half_trace_norm(m: &Op2) -> f64 {
        let [l0, l1] = m.hermitian_eigenvalues();
        0.5 * (l0.abs() + l1.abs())
    }
}

/// Non-selective measurement of one detector in an orthonormal basis.
pub type Preparation = (Label, [[C; 2]; 2]);

fn state_at(
    scen: &Scenario,
    info: &SpaceInfo,
    label: Label,
    prepare: Option<&Preparation>,
    steps: usize,
    leak: f64,
) -> Result<Op2, ExactError> {
    let prop = Propagator::new(scen, info)?;
    let all: Vec<Label> = scen.detectors.iter().map(|d| d.label).collect();
    let mut start = ExactState::initial(scen, info)?;
    if let Some((m, basis)) = prepare {
        start = nonselective_measure(*m, basis, &start, info)?;
    }
    let state = prop.evolve_state(&start, &all, steps);
    state.check_leak(info, leak)?;
    reduced_detector_state(label, &state, info)
}

/// Final reduced state of `label`, optionally after a non-selective
/// measurement applied to the initial state, step-halving checked.
pub fn final_detector_state(
    label: Label,
    scen: &Scenario,
    info: &SpaceInfo,
    opts: &OracleOptions,
    prepare: Option<&Preparation>,
) -> Result<StateEstimate, ExactError> {
    let steps = base_steps(scen, info, opts)?;
    let coarse = state_at(scen, info, label, prepare, steps, opts.leak_tolerance)?;
    let fine = state_at(scen, info, label, prepare, 2 * steps, opts.leak_tolerance)?;
    let change = fine.max_abs_diff(&coarse);
    if change > opts.step_tolerance {
        return Err(ExactError::StepTooCoarse { what: format!("ρ_{label}"), change, tolerance: opts.step_tolerance });
    }
    Ok(StateEstimate::richardson(&coarse, &fine))
}

fn fd_richardson(h: f64, f: impl Fn(f64) -> Result<StateEstimate, ExactError>) -> Result<StateEstimate, ExactError> {
    let (c, fi) = (f(h)?, f(h / 2.0)?);
    let mut out = StateEstimate::richardson(&c.state, &fi.state);
    out.error += fi.error;
    Ok(out)
}

/// `∂²ρ_receiver/∂λ_s∂λ_r` at zero couplings: mixed central differences
/// at `h` and `h/2`, Richardson-combined.
pub fn mixed_coupling_derivative(
    sender: Label,
    receiver: Label,
    scen: &Scenario,
    info: &SpaceInfo,
    opts: &OracleOptions,
    h: f64,
) -> Result<StateEstimate, ExactError> {
    fd_richardson(h, |h| {
        let mut acc = Op2::zero();
        let mut error = 0.0;
        for ss in [-1.0, 1.0] {
            for sr in [-1.0, 1.0] {
                let s = with_couplings(scen, &[(sender, ss * h), (receiver, sr * h)]);
                let r = final_detector_state(receiver, &s, info, opts, None)?;
                acc = acc + r.state.scale(C::from(ss * sr));
                error += r.error;
            }
        }
        let k = 1.0 / (4.0 * h * h);
        Ok(StateEstimate { state: acc.scale(C::from(k)), error: error * k })
    })
}

/// `∂ρ_receiver/∂λ_s` at `λ_s = 0`, the other couplings as given.
pub fn coupling_derivative(
    sender: Label,
    receiver: Label,
    scen: &Scenario,
    info: &SpaceInfo,
    opts: &OracleOptions,
    h: f64,
) -> Result<StateEstimate, ExactError> {
    fd_richardson(h, |h| {
        let up = final_detector_state(receiver, &with_couplings(scen, &[(sender, h)]), info, opts, None)?;
        let down = final_detector_state(receiver, &with_couplings(scen, &[(sender, -h)]), info, opts, None)?;
        let k = 1.0 / (2.0 * h);
        Ok(StateEstimate { state: (up.state - down.state).scale(C::from(k)), error: (up.error + down.error) * k })
    })
}
