use cdl_detector::{Label, Op2};
use cdl_perturbation::Scenario;
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C;

use crate::{ExactError, SpaceInfo};

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub weight: f64,
    pub psi: Vec<C>,
}

/// Density operator `Σ_k w_k |ψ_k⟩⟨ψ_k|` kept as a weighted ensemble of
/// normalised pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactState {
    pub members: Vec<Member>,
}

impl ExactState {
    pub fn pure(psi: Vec<C>) -> Self {
        Self { members: vec![Member { weight: 1.0, psi }] }
    }

    /// Detectors in their initial states, field in the vacuum.
    pub fn initial(scen: &Scenario, info: &SpaceInfo) -> Result<Self, ExactError> {
        info.check(scen)?;
        let f = info.fock_dim();
        let mut qubit_members: Vec<(f64, Vec<C>)> = vec![(1.0, vec![C::new(1.0, 0.0)])];
        for d in &scen.detectors {
            let parts = qubit_ensemble(&d.initial_state);
            qubit_members = qubit_members
                .iter()
                .flat_map(|(w, v)| {
                    parts.iter().map(move |(pw, pv)| {
                        let mut out = Vec::with_capacity(2 * v.len());
                        for a in v {
                            out.extend(pv.iter().map(|b| a * b));
                        }
                        (w * pw, out)
                    })
                })
                .collect();
        }
        let members = qubit_members
            .into_iter()
            .map(|(weight, q)| {
                let mut psi = vec![ZERO; info.dim()];
                for (s, a) in q.iter().enumerate() {
                    psi[s * f] = *a;
                }
                Member { weight, psi }
            })
            .collect();
        Ok(Self { members })
    }

    pub fn trace(&self) -> f64 {
        self.members.iter().map(|m| m.weight * norm_sqr(&m.psi)).sum()
    }

    pub fn to_dense(&self, info: &SpaceInfo) -> Result<DMatrix<C>, ExactError> {
        let dim = info.dim();
        info.require_dense(dim)?;
        let mut rho = DMatrix::zeros(dim, dim);
        for m in &self.members {
            let v = nalgebra::DVector::from_column_slice(&m.psi);
            rho += (&v * v.adjoint()) * C::from(m.weight);
        }
        Ok(rho)
    }

    /// Population of basis states on the truncation boundary.
    pub fn top_sector_population(&self, info: &SpaceInfo) -> f64 {
        let f = info.fock_dim();
        self.members
            .iter()
            .map(|m| {
                m.weight
                    * m.psi.iter().enumerate().filter(|(i, _)| info.basis.is_top(i % f)).map(|(_, z)| z.norm_sqr()).sum::<f64>()
            })
            .sum()
    }

    pub fn check_leak(&self, info: &SpaceInfo, tolerance: f64) -> Result<(), ExactError> {
        let population = self.top_sector_population(info);
        if population > tolerance {
            return Err(ExactError::TruncationLeak { population, tolerance });
        }
        Ok(())
    }
}

fn norm_sqr(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigen-decomposition of a qubit density matrix into weighted pure states.
fn qubit_ensemble(rho: &Op2) -> Vec<(f64, [C; 2])> {
    let m = Matrix2::new(rho.0[0][0], rho.0[0][1], rho.0[1][0], rho.0[1][1]);
    let eig = m.symmetric_eigen();
    (0..2)
        .filter(|&k| eig.eigenvalues[k] > 1e-15)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            (eig.eigenvalues[k], [v[0], v[1]])
        })
        .collect()
}

/// Partial trace over the field and the other qubits.
pub fn reduced_detector_state(label: Label, state: &ExactState, info: &SpaceInfo) -> Result<Op2, ExactError> {
    let q = info.position(label).ok_or_else(|| ExactError::Invalid(format!("no qubit {label}")))?;
    let shift = info.shift(q);
    let f = info.fock_dim();
    let nq = 1usize << info.qubits();
    let mut out = Op2::zero();
    for m in &state.members {
        for s in 0..nq {
            if (s >> shift) & 1 == 1 {
                continue;
            }
            let e = s | (1 << shift);
            let (g_blk, e_blk) = (&m.psi[s * f..(s + 1) * f], &m.psi[e * f..(e + 1) * f]);
            let gg: f64 = norm_sqr(g_blk);
            let ee: f64 = norm_sqr(e_blk);
            let ge: C = g_blk.iter().zip(e_blk).map(|(a, b)| a * b.conj()).sum();
            out.0[0][0] += C::from(m.weight * gg);
            out.0[1][1] += C::from(m.weight * ee);
            out.0[0][1] += ge * m.weight;
            out.0[1][0] += ge.conj() * m.weight;
        }
    }
    Ok(out)
}

/// `Σ_a (P_a ⊗ 1) ρ (P_a ⊗ 1)` with `P_a = |b_a⟩⟨b_a|` for the columns of
/// `basis` (an orthonormal qubit basis in `(ground, excited)` components).
pub fn nonselective_measure(
    label: Label,
    basis: &[[C; 2]; 2],
    state: &ExactState,
    info: &SpaceInfo,
) -> Result<ExactState, ExactError> {
    let q = info.position(label).ok_or_else(|| ExactError::Invalid(format!("no qubit {label}")))?;
    let (b0, b1) = (basis[0], basis[1]);
    let dot = |a: &[C; 2], b: &[C; 2]| a[0].conj() * b[0] + a[1].conj() * b[1];
    if (dot(&b0, &b0).re - 1.0).abs() > 1e-12 || (dot(&b1, &b1).re - 1.0).abs() > 1e-12 || dot(&b0, &b1).norm() > 1e-12 {
        return Err(ExactError::Invalid("measurement basis is not orthonormal".into()));
    }
    let shift = info.shift(q);
    let f = info.fock_dim();
    let nq = 1usize << info.qubits();
    let mut members = Vec::new();
    for m in &state.members {
        for b in [b0, b1] {
            let mut psi = vec![ZERO; m.psi.len()];
            for s in 0..nq {
                if (s >> shift) & 1 == 1 {
                    continue;
                }
                let e = s | (1 << shift);
                // ⟨b| on the qubit, then |b⟩ back
                for k in 0..f {
                    let amp = b[0].conj() * m.psi[s * f + k] + b[1].conj() * m.psi[e * f + k];
                    psi[s * f + k] = b[0] * amp;
                    psi[e * f + k] = b[1] * amp;
                }
            }
            let p = norm_sqr(&psi);
            if p > 1e-30 {
                let scale = 1.0 / p.sqrt();
                psi.iter_mut().for_each(|z| *z *= scale);
                members.push(Member { weight: m.weight * p, psi });
            }
        }
    }
    Ok(ExactState { members })
}
