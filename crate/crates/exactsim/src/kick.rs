use cdl_field::{smeared_mode_coeffs, FieldSpec, Kick};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use crate::hamiltonian::fock_field_matrix;
use crate::{ExactError, ExactState, SpaceInfo};

/// `e^{iλ φ(f)}` restricted to the retained modes, acting on the Fock factor.
#[derive(Debug, Clone)]
pub struct KickOperator {
    pub fock_unitary: DMatrix<C>,
}

impl KickOperator {
    /// Applies `1_qubits ⊗ U` to every member.
    pub fn apply(&self, state: &ExactState, info: &SpaceInfo) -> ExactState {
        let f = info.fock_dim();
        let mut out = state.clone();
        for m in &mut out.members {
            for block in m.psi.chunks_exact_mut(f) {
                let v = &self.fock_unitary * DVector::from_column_slice(block);
                block.copy_from_slice(v.as_slice());
            }
        }
        out
    }

    /// Full-space matrix `1 ⊗ U`.
    pub fn full(&self, info: &SpaceInfo) -> Result<DMatrix<C>, ExactError> {
        info.require_dense(info.dim())?;
        let f = info.fock_dim();
        let nq = 1usize << info.qubits();
        let mut m = DMatrix::zeros(nq * f, nq * f);
        for s in 0..nq {
            m.view_mut((s * f, s * f), (f, f)).copy_from(&self.fock_unitary);
        }
        Ok(m)
    }
}

/// Literal matrix exponential of `iλ_f φ(f)` on the truncated Fock space.
/// Fails with `TruncationLeak` when the kicked vacuum puts more than
/// `leak_tolerance` on the truncation boundary.
pub fn weyl_kick(
    kick: &Kick,
    field: &FieldSpec,
    info: &SpaceInfo,
    quad_order: usize,
    leak_tolerance: f64,
) -> Result<KickOperator, ExactError> {
    let f = info.fock_dim();
    info.require_dense(f)?;
    let coeffs = smeared_mode_coeffs(&kick.profile, field, quad_order)?.coeffs;
    let n0 = field.cutoff as i64;
    if info.modes.iter().any(|m| m.abs() > n0) {
        return Err(ExactError::Invalid("retained mode outside the field cutoff".into()));
    }
    let c: Vec<C> = info.modes.iter().map(|&n| coeffs[(n + n0) as usize]).collect();
    let phi = fock_field_matrix(&c, info);
    let u = (phi * C::new(0.0, kick.lambda)).exp();
    let population: f64 = (0..f).filter(|&i| info.basis.is_top(i)).map(|i| u[(i, 0)].norm_sqr()).sum();
    if population > leak_tolerance {
        return Err(ExactError::TruncationLeak { population, tolerance: leak_tolerance });
    }
    Ok(KickOperator { fock_unitary: u })
}
