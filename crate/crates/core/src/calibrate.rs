//! Hold-duration calibration against the simulated twist angle.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::basis::Ket;
use crate::dressed::kappa_perfect_blockade;
use crate::error::{CalibrationFailure, Error, Result};
use crate::gates::extract_angles;
use crate::physics::{AtomDrive, PhysicsParams};
use crate::propagator::{adiabaticity_metric, logical_block, propagate_logical, DriveOffsets, PropagationSettings};
use crate::ramps::{kappa_profile, predicted_theta2, DriveSchedule, RampSchedule};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adjustable {
    /// Only `t3 − t2` moves.
    #[default]
    Hold,
    /// The sweep `t2 − t1` may also lengthen when the guard fails.
    HoldAndSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSpec {
    /// Twist magnitude; the sign follows the schedule's start side.
    pub target_theta2: f64,
    pub tolerance: f64,
    pub adjustable: Adjustable,
    pub adiabaticity_guard: f64,
    pub max_iterations: usize,
    /// Grid size of the adiabaticity check.
    pub metric_points: usize,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            target_theta2: std::f64::consts::FRAC_PI_2,
            tolerance: 1e-3,
            adjustable: Adjustable::Hold,
            adiabaticity_guard: 0.1,
            max_iterations: 12,
            metric_points: 400,
        }
    }
}

impl CalibrationSpec {
    pub fn targeting(target_theta2: f64) -> Self {
        Self { target_theta2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        // Zero is allowed: it calibrates to the shortest (zero-hold) ramp.
        if !(0.0..TAU).contains(&self.target_theta2) {
            return Err(Error::InvalidInput(format!("target_theta2 must lie in [0, 2π), got {}", self.target_theta2)));
        }
        if !(self.adiabaticity_guard > 0.0) || self.max_iterations == 0 || self.metric_points < 2 {
            return Err(Error::InvalidInput("guard, max_iterations and metric_points must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Signed target.
    pub target: f64,
    /// Simulated twist of the returned schedule.
    pub achieved: f64,
    /// Number of simulated ramps.
    pub iterations: usize,
    pub adiabaticity_metric: f64,
    /// Perfect-blockade quadrature of the returned schedule.
    pub predicted: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub schedule: RampSchedule,
    pub report: CalibrationReport,
}

/// Largest number of sweep lengthenings tried when the guard fails.
const MAX_SWEEP_STRETCHES: usize = 8;
const SWEEP_STRETCH: f64 = 1.25;

/// Twist of one noise-free ramp, from continuously tracked phases.
pub fn simulated_theta2(schedule: &RampSchedule, physics: &PhysicsParams, settings: &PropagationSettings) -> Result<f64> {
    let runs = propagate_logical(schedule, &DriveOffsets::zero(), physics, &settings.without_samples())?;
    let angles = extract_angles(&logical_block(&runs)?)?;
    if !angles.unwrapped {
        return Err(Error::Extraction("ramp phases could not be followed continuously".into()));
    }
    Ok(angles.theta2)
}

/// Tunes `t3 − t2` until the simulated twist is within tolerance of the target.
pub fn calibrate_hold(
    template: &RampSchedule,
    spec: &CalibrationSpec,
    physics: &PhysicsParams,
    settings: &PropagationSettings,
) -> Result<Calibration> {
    template.validate()?;
    spec.validate()?;
    physics.validate()?;

    let mut base = template.with_hold(0.0);
    let mut metric = adiabaticity_metric(&base, physics, spec.metric_points)?;
    let mut stretches = 0;
    while metric > spec.adiabaticity_guard {
        if spec.adjustable != Adjustable::HoldAndSweep || stretches == MAX_SWEEP_STRETCHES {
            return Err(CalibrationFailure::GuardViolation { metric, guard: spec.adiabaticity_guard }.into());
        }
        base = base.with_sweep(base.sweep_duration() * SWEEP_STRETCH);
        metric = adiabaticity_metric(&base, physics, spec.metric_points)?;
        stretches += 1;
    }

    let sign = template.start_side.twist_sign();
    let target = sign * spec.target_theta2;
    let plateau = AtomDrive { omega: template.omega_max, delta: template.start_side.sign() * template.delta_min };
    let slope = kappa_perfect_blockade(plateau, template.start_side);
    if slope == 0.0 {
        return Err(CalibrationFailure::VanishingKappa.into());
    }
    // Bracket from the analytic twist, which is affine in the hold.
    let zero_hold = predicted_theta2(&base)?;
    let simulate = |hold: f64| simulated_theta2(&base.with_hold(hold), physics, settings);
    let mut iterations = 1;

    let mut hold = ((target - zero_hold) / slope).max(0.0);
    let mut residual = simulate(hold)? - target;
    if hold == 0.0 && residual * sign > spec.tolerance {
        return Err(CalibrationFailure::NonBracketing { zero_hold: zero_hold.abs(), target: spec.target_theta2 }.into());
    }
    let mut previous: Option<(f64, f64)> = None;
    while residual.abs() > spec.tolerance {
        if iterations >= spec.max_iterations {
            return Err(CalibrationFailure::IterationsExhausted { iterations, residual }.into());
        }
        // Secant on the simulated twist, seeded with the analytic slope.
        let local_slope = match previous {
            Some((h0, r0)) if (hold - h0).abs() > 0.0 && ((residual - r0) / (hold - h0)) * slope > 0.0 => {
                (residual - r0) / (hold - h0)
            }
            _ => slope,
        };
        let next = (hold - residual / local_slope).max(0.0);
        if next == 0.0 && hold == 0.0 {
            return Err(CalibrationFailure::NonBracketing { zero_hold: zero_hold.abs(), target: spec.target_theta2 }.into());
        }
        previous = Some((hold, residual));
        hold = next;
        residual = simulate(hold)? - target;
        iterations += 1;
    }
    let schedule = base.with_hold(hold);
    Ok(Calibration {
        schedule,
        report: CalibrationReport {
            target,
            achieved: target + residual,
            iterations,
            adiabaticity_metric: metric,
            predicted: predicted_theta2(&schedule)?,
        },
    })
}

/// Ramp-level observables of a noise-free run over the four logical inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampObservables {
    pub theta1: f64,
    pub theta2: f64,
    pub predicted_theta2: f64,
    /// Integrated single-Rydberg time per input (s).
    pub t_r: BTreeMap<String, f64>,
    /// Integrated `|rr⟩` time for `|11⟩` (s).
    pub t_rr: f64,
    /// Population outside the computational subspace per input, with decay switched off.
    pub leakage: BTreeMap<String, f64>,
    pub duration: f64,
    pub kappa_max: f64,
}

pub fn ramp_observables(schedule: &RampSchedule, physics: &PhysicsParams, settings: &PropagationSettings) -> Result<RampObservables> {
    let quiet = settings.without_samples();
    let runs = propagate_logical(schedule, &DriveOffsets::zero(), physics, &quiet)?;
    let angles = extract_angles(&logical_block(&runs)?)?;
    let lossless = PhysicsParams { gamma_r: 0.0, ..*physics };
    let closed = propagate_logical(schedule, &DriveOffsets::zero(), &lossless, &quiet)?;
    let labels = Ket::logical().map(|k| k.label());
    let kappa_max = kappa_profile(schedule, 2001)?.iter().map(|s| s.kappa.abs()).fold(0.0, f64::max);
    Ok(RampObservables {
        theta1: angles.theta1,
        theta2: angles.theta2,
        predicted_theta2: predicted_theta2(schedule)?,
        t_r: labels.iter().cloned().zip(runs.iter().map(|r| r.t_r)).collect(),
        t_rr: runs[3].t_rr,
        leakage: labels.iter().cloned().zip(closed.iter().map(|r| r.leakage())).collect(),
        duration: schedule.duration(),
        kappa_max,
    })
}
