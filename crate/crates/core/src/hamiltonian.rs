//! Internal-state Hamiltonians (ħ = 1, angular units).

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::basis::{kron3, Ket, Level, Mat3, Mat4, Mat9, C64};
use crate::error::{ensure_non_negative, Error, Result};
use crate::physics::{AtomDrive, PhysicsParams};

/// Single-atom Hamiltonian over `{|0⟩, |1⟩, |r⟩}`.
pub fn build_single_hamiltonian(drive: AtomDrive, gamma_r: f64) -> Result<Mat3> {
    drive.validate()?;
    ensure_non_negative("gamma_r", gamma_r)?;
    Ok(single_unchecked(drive.omega, drive.delta, gamma_r))
}

pub(crate) fn single_unchecked(omega: f64, delta: f64, gamma_r: f64) -> Mat3 {
    let mut h = Mat3::zeros();
    let coupling = C64::new(0.5 * omega, 0.0);
    h[(1, 2)] = coupling;
    h[(2, 1)] = coupling;
    h[(2, 2)] = C64::new(-delta, -0.5 * gamma_r);
    h
}

/// Dense 9×9 two-atom operator in the fixed basis order of [`crate::basis`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoAtomOperator(pub Mat9);

impl TwoAtomOperator {
    pub fn matrix(&self) -> &Mat9 {
        &self.0
    }

    pub fn element(&self, row: Ket, col: Ket) -> C64 {
        self.0[(row.index(), col.index())]
    }

    /// Largest `|H − H†|` entry relative to the Frobenius norm.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = self.0 - self.0.adjoint();
        let scale = self.0.norm().max(f64::MIN_POSITIVE);
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
    }
}

/// `H_a ⊗ 𝟙 + 𝟙 ⊗ H_b + V_DD |rr⟩⟨rr|`, decay included per atom.
pub fn build_two_atom_hamiltonian(
    drive_a: AtomDrive,
    drive_b: AtomDrive,
    physics: &PhysicsParams,
) -> Result<TwoAtomOperator> {
    drive_a.validate()?;
    drive_b.validate()?;
    physics.validate()?;
    Ok(TwoAtomOperator(two_atom_unchecked(
        drive_a.omega,
        drive_a.delta,
        drive_b.omega,
        drive_b.delta,
        physics.v_dd,
        physics.gamma_r,
    )))
}

pub(crate) fn two_atom_unchecked(
    omega_a: f64,
    delta_a: f64,
    omega_b: f64,
    delta_b: f64,
    v_dd: f64,
    gamma_r: f64,
) -> Mat9 {
    let id = Mat3::identity();
    let mut h = kron3(&single_unchecked(omega_a, delta_a, gamma_r), &id)
        + kron3(&id, &single_unchecked(omega_b, delta_b, gamma_r));
    let rr = Ket::new(Level::Rydberg, Level::Rydberg).index();
    h[(rr, rr)] += C64::new(v_dd, 0.0);
    h
}

/// Momentum-resolved pair model over `{|G⟩, |B⟩, |D⟩, |rr⟩}` with `|G⟩ = |11⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BDModelParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub delta: f64,
    /// Centre-of-mass momentum along the beam (kg·m/s).
    pub p_cm: f64,
    /// Relative momentum along the beam (kg·m/s).
    pub p_rel: f64,
    pub total_mass: f64,
    pub mass: f64,
}

impl BDModelParams {
    /// Identical atoms of mass `mass` with `M = 2m`.
    pub fn pair(omega: f64, delta: f64, p_cm: f64, p_rel: f64, mass: f64) -> Self {
        Self { omega_a: omega, omega_b: omega, delta, p_cm, p_rel, total_mass: 2.0 * mass, mass }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("omega_a", self.omega_a)?;
        ensure_non_negative("omega_b", self.omega_b)?;
        for (name, v) in [("delta", self.delta), ("p_cm", self.p_cm), ("p_rel", self.p_rel)] {
            crate::error::ensure_finite(name, v)?;
        }
        if !(self.total_mass > 0.0 && self.mass > 0.0) {
            return Err(Error::InvalidInput("masses must be > 0".into()));
        }
        Ok(())
    }
}

pub fn build_bd_hamiltonian(params: &BDModelParams, v_dd: f64, k_1r: f64) -> Result<Mat4> {
    params.validate()?;
    ensure_non_negative("v_dd", v_dd)?;
    crate::error::ensure_finite("k_1r", k_1r)?;
    Ok(bd_unchecked(params, v_dd, k_1r))
}

pub(crate) fn bd_unchecked(p: &BDModelParams, v_dd: f64, k_1r: f64) -> Mat4 {
    let delta_eff = p.delta - k_1r * p.p_cm / p.total_mass;
    let sym = (p.omega_a + p.omega_b) / (2.0 * std::f64::consts::SQRT_2);
    let anti = (p.omega_a - p.omega_b) / (2.0 * std::f64::consts::SQRT_2);
    let bd = k_1r * p.p_rel / p.mass;
    #[rustfmt::skip]
    let h = Matrix4::new(
        0.0,  sym,        anti,       0.0,
        sym,  -delta_eff, bd,         sym,
        anti, bd,         -delta_eff, anti,
        0.0,  sym,        anti,       v_dd - 2.0 * delta_eff,
    );
    h.map(|x| C64::new(x, 0.0))
}
