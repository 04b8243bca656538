use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Unified atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of ¹³³Cs in atomic mass units.
pub const CESIUM_133_AMU: f64 = 132.905_451_933;

/// Physical constants of the two-atom system. Frequencies are angular (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub omega_max: f64,
    /// Dipole-dipole shift of `|rr⟩`.
    pub v_dd: f64,
    /// Rydberg decay rate, `1/τ_r`.
    pub gamma_r: f64,
    /// Rydberg laser wavenumber (rad/m).
    pub k_1r: f64,
    /// Single-atom mass (kg).
    pub mass: f64,
    /// Kelvin.
    pub temperature: f64,
}

impl PhysicsParams {
    /// Cs at 10 μK, 4 MHz Rabi frequency, 319 nm excitation, `V_DD = 10 Ω_max`,
    /// `τ_r = 140 μs`.
    pub fn cesium_reference() -> Self {
        let omega_max = TAU * 4.0e6;
        Self {
            omega_max,
            v_dd: 10.0 * omega_max,
            gamma_r: 1.0 / 140.0e-6,
            k_1r: TAU / 319.0e-9,
            mass: CESIUM_133_AMU * AMU,
            temperature: 10.0e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("omega_max", self.omega_max)?;
        ensure_non_negative("v_dd", self.v_dd)?;
        ensure_non_negative("gamma_r", self.gamma_r)?;
        ensure_non_negative("k_1r", self.k_1r)?;
        ensure_non_negative("mass", self.mass)?;
        ensure_non_negative("temperature", self.temperature)?;
        if self.gamma_r >= self.omega_max && self.gamma_r > 0.0 {
            return Err(Error::InvalidInput(format!(
                "gamma_r ({:.3e}) must be below omega_max ({:.3e})",
                self.gamma_r, self.omega_max
            )));
        }
        Ok(())
    }

    /// Blockade assumption is weak when `V_DD ≤ Ω_max`.
    pub fn weak_blockade(&self) -> bool {
        self.v_dd <= self.omega_max
    }

    pub fn tau_r(&self) -> f64 {
        1.0 / self.gamma_r
    }

    /// Rabi period `2π/Ω_max` (s).
    pub fn rabi_period(&self) -> f64 {
        TAU / self.omega_max
    }

    pub fn with_gamma_r(self, gamma_r: f64) -> Self {
        Self { gamma_r, ..self }
    }

    pub fn with_v_dd(self, v_dd: f64) -> Self {
        Self { v_dd, ..self }
    }
}

/// Instantaneous drive seen by one atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomDrive {
    /// Rabi frequency Ω₁ᵣ (rad/s).
    pub omega: f64,
    /// Signed detuning Δ₁ᵣ (rad/s).
    pub delta: f64,
}

impl AtomDrive {
    pub fn new(omega: f64, delta: f64) -> Result<Self> {
        let drive = Self { omega, delta };
        drive.validate()?;
        Ok(drive)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("omega", self.omega)?;
        ensure_finite("delta", self.delta)
    }
}
