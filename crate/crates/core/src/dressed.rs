//! Closed-form dressed-state analytics.
//!
//! Branch convention: with `H = −Δ|r⟩⟨r| + …`, a blue detuning (Δ > 0) puts
//! the bare ground state above `|r⟩`, so the ground-connected light shift is
//! the upper root. The side sign `s = ±1` selects
//! `E = (−Δ + s·√(nΩ² + Δ²))/2`; red starts give `κ > 0` near resonance,
//! blue starts give `κ < 0`.

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::{Matrix3, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Result};
use crate::physics::AtomDrive;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartSide {
    Blue,
    #[default]
    Red,
}

impl StartSide {
    /// Sign of the detuning on this side, also the branch sign of the light shifts.
    pub fn sign(self) -> f64 {
        match self {
            StartSide::Blue => 1.0,
            StartSide::Red => -1.0,
        }
    }

    /// Sign of κ near resonance.
    pub fn twist_sign(self) -> f64 {
        -self.sign()
    }
}

impl fmt::Display for StartSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StartSide::Blue => "blue",
            StartSide::Red => "red",
        })
    }
}

impl std::str::FromStr for StartSide {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "blue" => Ok(StartSide::Blue),
            "red" => Ok(StartSide::Red),
            other => Err(format!("unknown start side '{other}'")),
        }
    }
}

/// `(−Δ + s√(c² + Δ²))/2` without cancellation on the dressed side.
/// An undriven atom stays in the bare state on either side of resonance.
fn branch(coupling_sq: f64, delta: f64, s: f64) -> f64 {
    if coupling_sq == 0.0 {
        return 0.0;
    }
    let root = (coupling_sq + delta * delta).sqrt();
    let sd = s * delta;
    if sd >= 0.0 {
        s * coupling_sq / (2.0 * (root + sd))
    } else {
        s * (root - sd) / 2.0
    }
}

pub fn light_shift_one(drive: AtomDrive, side: StartSide) -> f64 {
    branch(drive.omega * drive.omega, drive.delta, side.sign())
}

/// Blockaded two-atom shift: `|11⟩` coupled to `|b⟩` with strength `√2 Ω/2`.
pub fn light_shift_two(drive: AtomDrive, side: StartSide) -> f64 {
    branch(2.0 * drive.omega * drive.omega, drive.delta, side.sign())
}

pub fn kappa_perfect_blockade(drive: AtomDrive, side: StartSide) -> f64 {
    light_shift_two(drive, side) - 2.0 * light_shift_one(drive, side)
}

/// `κ ≈ −Ω⁴/8Δ³`, valid for `|Δ| ≫ Ω` on the ground-connected branch.
pub fn kappa_weak_dressing(drive: AtomDrive) -> f64 {
    -drive.omega.powi(4) / (8.0 * drive.delta.powi(3))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedAnalytics {
    pub e_ls1: f64,
    pub e_ls2: f64,
    pub kappa: f64,
    /// Mixing angle of `|1⟩` with `|r⟩`, measured from the bare state:
    /// `tan θ₁ = Ω/(sΔ)` with `θ₁ ∈ [0, π]`.
    pub theta1: f64,
    /// Mixing angle of `|11⟩` with `|b⟩`: `tan θ₂ = √2Ω/(sΔ)`.
    pub theta2: f64,
}

impl DressedAnalytics {
    pub fn at(drive: AtomDrive, side: StartSide) -> Self {
        let e_ls1 = light_shift_one(drive, side);
        let e_ls2 = light_shift_two(drive, side);
        let s = side.sign();
        Self {
            e_ls1,
            e_ls2,
            kappa: e_ls2 - 2.0 * e_ls1,
            theta1: drive.omega.atan2(s * drive.delta),
            theta2: (SQRT_2 * drive.omega).atan2(s * drive.delta),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteBlockadeKappa {
    pub kappa: f64,
    /// Ground-connected eigenvalue of the `{|11⟩, |b⟩, |rr⟩}` block.
    pub pair_energy: f64,
    /// `|V_DD − 2Δ| < Ω`: the `|rr⟩` level sits near the two-photon resonance
    /// and the ground-connected state is strongly mixed with it.
    pub near_resonance: bool,
}

/// Sorted-eigenvalue index of the ground-connected state, assuming the
/// `|r⟩`-type diabatic levels are passed adiabatically and `|rr⟩` diabatically.
pub(crate) fn connected_index(side: StartSide, single_levels: usize, rr_below: bool) -> usize {
    let single = match side {
        StartSide::Blue => single_levels,
        StartSide::Red => 0,
    };
    single + rr_below as usize
}

fn sorted_eigenvalues<const N: usize>(values: impl Iterator<Item = f64>) -> [f64; N] {
    let mut out = [0.0; N];
    for (o, v) in out.iter_mut().zip(values) {
        *o = v;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// κ with a finite `|rr⟩` shift, from the symmetric three-level block.
pub fn kappa_finite_blockade(drive: AtomDrive, v_dd: f64, side: StartSide) -> Result<FiniteBlockadeKappa> {
    drive.validate()?;
    ensure_non_negative("v_dd", v_dd)?;
    let (omega, delta) = (drive.omega, drive.delta);
    let c = SQRT_2 * omega / 2.0;
    let rr = v_dd - 2.0 * delta;
    #[rustfmt::skip]
    let h = Matrix3::new(
        0.0, c,      0.0,
        c,   -delta, c,
        0.0, c,      rr,
    );
    let eig: [f64; 3] = sorted_eigenvalues(SymmetricEigen::new(h).eigenvalues.iter().copied());
    let pair_energy = eig[connected_index(side, 1, rr < 0.0)];
    Ok(FiniteBlockadeKappa {
        kappa: pair_energy - 2.0 * light_shift_one(drive, side),
        pair_energy,
        near_resonance: rr.abs() < omega,
    })
}

/// Ground-connected energy of `|11⟩` with independent drives on the two atoms,
/// from the `{|11⟩, |1r⟩, |r1⟩, |rr⟩}` sector.
pub fn pair_ground_energy(drive_a: AtomDrive, drive_b: AtomDrive, v_dd: f64, side: StartSide) -> f64 {
    let (oa, ob) = (drive_a.omega / 2.0, drive_b.omega / 2.0);
    let rr = v_dd - drive_a.delta - drive_b.delta;
    #[rustfmt::skip]
    let h = Matrix4::new(
        0.0, ob,             oa,             0.0,
        ob,  -drive_b.delta, 0.0,            oa,
        oa,  0.0,            -drive_a.delta, ob,
        0.0, oa,             ob,             rr,
    );
    let eig: [f64; 4] = sorted_eigenvalues(SymmetricEigen::new(h).eigenvalues.iter().copied());
    eig[connected_index(side, 2, rr < 0.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;
    use proptest::prelude::*;

    fn drive(omega: f64, delta: f64) -> AtomDrive {
        AtomDrive::new(omega, delta).unwrap()
    }

    /// Eigenvalue of `[[0, c], [c, −Δ]]` continuously connected to 0 from side `s`.
    fn two_level_oracle(c: f64, delta: f64, side: StartSide) -> f64 {
        let e = SymmetricEigen::new(Matrix2::new(0.0, c, c, -delta)).eigenvalues;
        let (lo, hi) = (e[0].min(e[1]), e[0].max(e[1]));
        match side {
            StartSide::Blue => hi,
            StartSide::Red => lo,
        }
    }

    #[test]
    fn undriven_shifts_vanish() {
        for side in [StartSide::Blue, StartSide::Red] {
            for delta in [-3.0, 0.0, 2.0] {
                let d = drive(0.0, delta);
                assert_eq!(light_shift_one(d, side), 0.0);
                assert_eq!(light_shift_two(d, side), 0.0);
                assert_eq!(kappa_perfect_blockade(d, side), 0.0);
            }
        }
    }

    #[test]
    fn resonant_shifts() {
        let d = drive(1.0, 0.0);
        assert!((light_shift_one(d, StartSide::Red) + 0.5).abs() < 1e-15);
        assert!((light_shift_one(d, StartSide::Blue) - 0.5).abs() < 1e-15);
        assert!((light_shift_two(d, StartSide::Red) + SQRT_2 / 2.0).abs() < 1e-15);
        let k = kappa_perfect_blockade(d, StartSide::Red);
        assert!((k - (2.0 - SQRT_2) / 2.0).abs() < 1e-15);
        assert!((kappa_perfect_blockade(d, StartSide::Blue) + k).abs() < 1e-15);
    }

    #[test]
    fn near_resonance_operating_point() {
        let k = kappa_perfect_blockade(drive(1.0, -0.1), StartSide::Red);
        assert!((k - 0.2461).abs() < 5e-4, "{k}");
    }

    #[test]
    fn perturbative_single_shift() {
        let d = drive(1.0, 20.0);
        let e = light_shift_one(d, StartSide::Blue);
        assert!((e / (1.0 / 80.0) - 1.0).abs() < 2e-3);
        let d = drive(1.0, -20.0);
        assert!((light_shift_one(d, StartSide::Red) / (-1.0 / 80.0) - 1.0).abs() < 2e-3);
    }

    #[test]
    fn weak_dressing_asymptote_improves() {
        let mut last = f64::INFINITY;
        for ratio in [10.0, 20.0, 50.0, 100.0] {
            for side in [StartSide::Blue, StartSide::Red] {
                let d = drive(1.0, side.sign() * ratio);
                let r = kappa_perfect_blockade(d, side) / kappa_weak_dressing(d);
                assert!((0.9..=1.1).contains(&r), "{ratio} {r}");
                if side == StartSide::Red {
                    assert!((r - 1.0).abs() < last);
                    last = (r - 1.0).abs();
                }
            }
        }
    }

    #[test]
    fn finite_blockade_limits() {
        for side in [StartSide::Blue, StartSide::Red] {
            let d = drive(1.0, side.sign() * 0.1);
            let perfect = kappa_perfect_blockade(d, side);
            let far = kappa_finite_blockade(d, 1e6, side).unwrap();
            assert!(((far.kappa - perfect) / perfect).abs() < 1e-4);
            assert!(!far.near_resonance);
        }
        let zero = kappa_finite_blockade(drive(0.0, -0.3), 10.0, StartSide::Red).unwrap();
        assert_eq!(zero.kappa, 0.0);
    }

    #[test]
    fn finite_blockade_matches_direct_diagonalisation() {
        let (omega, delta, v) = (1.0, -0.1, 10.0);
        let c = SQRT_2 * omega / 2.0;
        // Characteristic polynomial root by bisection below the lowest diagonal.
        let det = |e: f64| {
            let (a, b, d) = (0.0 - e, -delta - e, v - 2.0 * delta - e);
            a * (b * d - c * c) - c * (c * d)
        };
        let (mut lo, mut hi) = (-10.0, -1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if det(lo).signum() == det(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let fb = kappa_finite_blockade(drive(omega, delta), v, StartSide::Red).unwrap();
        assert!((fb.pair_energy - lo).abs() < 1e-12);
        let perfect = kappa_perfect_blockade(drive(omega, delta), StartSide::Red);
        assert!(fb.kappa < perfect && fb.kappa > 0.9 * perfect);
    }

    #[test]
    fn finite_blockade_flags_two_photon_resonance() {
        let fb = kappa_finite_blockade(drive(1.0, 5.0), 10.0, StartSide::Blue).unwrap();
        assert!(fb.near_resonance);
    }

    #[test]
    fn blockade_limit_is_monotone() {
        for side in [StartSide::Blue, StartSide::Red] {
            for delta in [0.0, 0.1, 0.5, 1.0] {
                let d = drive(1.0, side.sign() * delta);
                let perfect = kappa_perfect_blockade(d, side);
                let mut last = f64::INFINITY;
                for v in (0..40).map(|i| 4.5 * 1.25f64.powi(i)) {
                    let gap = (kappa_finite_blockade(d, v, side).unwrap().kappa - perfect).abs();
                    assert!(gap <= last + 1e-13, "side {side} Δ {delta} V {v}");
                    last = gap;
                }
            }
        }
    }

    #[test]
    fn pair_energy_reduces_to_symmetric_block() {
        for side in [StartSide::Blue, StartSide::Red] {
            let d = drive(1.0, side.sign() * 0.3);
            let sym = kappa_finite_blockade(d, 10.0, side).unwrap().pair_energy;
            assert!((pair_ground_energy(d, d, 10.0, side) - sym).abs() < 1e-12);
        }
    }

    #[test]
    fn analytics_angles() {
        let a = DressedAnalytics::at(drive(1.0, 2.0), StartSide::Blue);
        assert!((a.theta1.tan() - 0.5).abs() < 1e-14);
        assert!((a.theta2.tan() - SQRT_2 / 2.0).abs() < 1e-14);
        let r = DressedAnalytics::at(drive(1.0, -2.0), StartSide::Red);
        assert!((r.theta1 - a.theta1).abs() < 1e-15);
        assert_eq!(r.kappa, r.e_ls2 - 2.0 * r.e_ls1);
    }

    proptest! {
        #[test]
        fn light_shifts_match_two_level_oracle(omega in 0.0f64..5.0, delta in -20.0f64..20.0, blue in any::<bool>()) {
            let side = if blue { StartSide::Blue } else { StartSide::Red };
            // Oracle ordering is only valid on the side that has not crossed resonance.
            prop_assume!(side.sign() * delta >= 0.0);
            let d = drive(omega, delta);
            let e1 = two_level_oracle(omega / 2.0, delta, side);
            let e2 = two_level_oracle(SQRT_2 * omega / 2.0, delta, side);
            prop_assert!((light_shift_one(d, side) - e1).abs() < 1e-12 * (1.0 + delta.abs()));
            prop_assert!((light_shift_two(d, side) - e2).abs() < 1e-12 * (1.0 + delta.abs()));
        }

        #[test]
        fn kappa_identity_and_closed_form(omega in 0.0f64..5.0, delta in -20.0f64..20.0, blue in any::<bool>()) {
            let side = if blue { StartSide::Blue } else { StartSide::Red };
            let d = drive(omega, delta);
            let k = kappa_perfect_blockade(d, side);
            prop_assert_eq!(k, light_shift_two(d, side) - 2.0 * light_shift_one(d, side));
            let s = side.sign();
            let closed = delta / 2.0
                + s * 0.5 * ((2.0 * omega * omega + delta * delta).sqrt() - 2.0 * (omega * omega + delta * delta).sqrt());
            prop_assert!((k - closed).abs() < 1e-12 * (1.0 + delta.abs()));
        }

        #[test]
        fn branch_is_continuous(omega in 0.1f64..5.0, delta in -20.0f64..20.0, blue in any::<bool>()) {
            let side = if blue { StartSide::Blue } else { StartSide::Red };
            let h = 1e-7;
            let a = kappa_perfect_blockade(drive(omega, delta), side);
            let b = kappa_perfect_blockade(drive(omega, delta + h), side);
            prop_assert!((a - b).abs() < 1e-5);
        }
    }
}
