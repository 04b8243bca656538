//! Static-noise ensembles, thermal Doppler estimates, and protocol runs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::{light_shift_one, pair_ground_energy, StartSide};
use crate::error::{ensure_non_negative, Error, Result};
use crate::gates::{compose_cz, compose_ms, GateReport, Protocol};
use crate::physics::{AtomDrive, PhysicsParams, BOLTZMANN};
use crate::propagator::{logical_block, propagate_logical, DriveOffsets, PropagationSettings, TrajectoryResult};
use crate::basis::Ket;
use crate::ramps::{single_atom_phase, RampSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation of each atom's detuning offset (rad/s).
    pub sigma_delta: f64,
    /// Standard deviation of each atom's Rabi offset (rad/s).
    pub sigma_omega: f64,
    /// Independent draws per atom; otherwise both atoms share one draw.
    pub per_atom_independent: bool,
    /// Same offsets for every ramp of a gate; otherwise redrawn per ramp.
    pub static_within_gate: bool,
}

impl NoiseModel {
    pub fn new(sigma_delta: f64, sigma_omega: f64) -> Self {
        Self { sigma_delta, sigma_omega, per_atom_independent: true, static_within_gate: true }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("sigma_delta", self.sigma_delta)?;
        ensure_non_negative("sigma_omega", self.sigma_omega)
    }

    pub fn is_silent(&self) -> bool {
        self.sigma_delta == 0.0 && self.sigma_omega == 0.0
    }
}

/// Offsets seen by the first ramp and by the second (MS only).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub first: DriveOffsets,
    pub second: DriveOffsets,
}

impl NoiseRealization {
    pub fn fixed(offsets: DriveOffsets) -> Self {
        Self { first: offsets, second: offsets }
    }

    pub fn is_static(&self) -> bool {
        self.first == self.second
    }
}

/// Generator for sample `index`: one ChaCha20 stream per sample under a
/// common key, so any sample is recomputable on its own.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_offsets<R: Rng + ?Sized>(model: &NoiseModel, rng: &mut R) -> DriveOffsets {
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    if model.per_atom_independent {
        let d = [normal(), normal()];
        let o = [normal(), normal()];
        DriveOffsets { delta: d.map(|z| z * model.sigma_delta), omega: o.map(|z| z * model.sigma_omega) }
    } else {
        let (d, o) = (normal(), normal());
        DriveOffsets { delta: [d * model.sigma_delta; 2], omega: [o * model.sigma_omega; 2] }
    }
}

pub fn sample_realization<R: Rng + ?Sized>(model: &NoiseModel, rng: &mut R) -> NoiseRealization {
    let first = draw_offsets(model, rng);
    let second = if model.static_within_gate { first } else { draw_offsets(model, rng) };
    NoiseRealization { first, second }
}

/// Doppler width `k₁ᵣ √(k_B T / m)` (rad/s).
pub fn thermal_sigma_delta(physics: &PhysicsParams) -> Result<f64> {
    ensure_non_negative("temperature", physics.temperature)?;
    if !(physics.mass > 0.0) {
        return Err(Error::InvalidInput("thermal width needs a positive mass".into()));
    }
    Ok(physics.k_1r * (BOLTZMANN * physics.temperature / physics.mass).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalKappa {
    /// `σ_Δ · |∇κ|` (rad/s).
    pub delta_kappa: f64,
    /// `∂κ/∂Δ_α`, `∂κ/∂Δ_β`.
    pub gradient: [f64; 2],
    pub sigma_delta: f64,
    /// Largest ratio of the quadratic to the linear finite-difference term.
    pub curvature_ratio: f64,
    /// True when `curvature_ratio` exceeds 5%: the step is too coarse.
    pub step_too_large: bool,
}

/// Spread of κ from independent Doppler shifts on the two atoms, using the
/// finite-blockade pair energy.
pub fn delta_kappa_thermal(drive: AtomDrive, physics: &PhysicsParams, fd_step: f64, side: StartSide) -> Result<ThermalKappa> {
    drive.validate()?;
    physics.validate()?;
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::InvalidInput(format!("fd_step must be > 0, got {fd_step}")));
    }
    let sigma_delta = thermal_sigma_delta(physics)?;
    let kappa = |da: f64, db: f64| {
        let a = AtomDrive { delta: drive.delta + da, ..drive };
        let b = AtomDrive { delta: drive.delta + db, ..drive };
        pair_ground_energy(a, b, physics.v_dd, side) - light_shift_one(a, side) - light_shift_one(b, side)
    };
    let k0 = kappa(0.0, 0.0);
    let mut gradient = [0.0; 2];
    let mut curvature_ratio: f64 = 0.0;
    for (i, g) in gradient.iter_mut().enumerate() {
        let shift = |h: f64| if i == 0 { kappa(h, 0.0) } else { kappa(0.0, h) };
        let (plus, minus) = (shift(fd_step), shift(-fd_step));
        *g = (plus - minus) / (2.0 * fd_step);
        let linear = (g.abs() * fd_step).max(f64::MIN_POSITIVE);
        let quadratic = 0.5 * (plus - 2.0 * k0 + minus).abs();
        curvature_ratio = curvature_ratio.max(quadratic / linear);
    }
    Ok(ThermalKappa {
        delta_kappa: sigma_delta * gradient[0].hypot(gradient[1]),
        gradient,
        sigma_delta,
        curvature_ratio,
        step_too_large: curvature_ratio > 0.05,
    })
}

/// `π/(κ τ_r)`: dressing time of one twist quantum against the Rydberg lifetime.
pub fn decay_budget(kappa: f64, tau_r: f64) -> Result<f64> {
    if !(kappa > 0.0 && tau_r > 0.0) {
        return Err(Error::InvalidInput(format!("decay_budget needs positive inputs, got κ = {kappa}, τ_r = {tau_r}")));
    }
    Ok(PI / (kappa * tau_r))
}

/// Where the CZ phase-removal angle comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiducialSource {
    /// `∫ E_LS⁽¹⁾ dt` along the schedule.
    Quadrature,
    /// Phase of `|01⟩` after a noise-free simulated ramp, which also carries
    /// the non-adiabatic correction to the single-atom phase.
    #[default]
    Simulated,
}

/// Everything fixed across the realizations of one protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSetup {
    pub protocol: Protocol,
    pub schedule: RampSchedule,
    pub physics: PhysicsParams,
    pub settings: PropagationSettings,
    pub fiducial_phi1: f64,
}

impl ProtocolSetup {
    pub fn new(
        protocol: Protocol,
        schedule: RampSchedule,
        physics: PhysicsParams,
        settings: PropagationSettings,
        source: FiducialSource,
    ) -> Result<Self> {
        schedule.validate()?;
        physics.validate()?;
        settings.validate()?;
        let fiducial_phi1 = match protocol {
            Protocol::Ms => 0.0,
            Protocol::Cz => fiducial_phase(&schedule, &physics, &settings, source)?,
        };
        Ok(Self { protocol, schedule, physics, settings, fiducial_phi1 })
    }

    fn ramp(&self, offsets: &DriveOffsets) -> Result<Vec<TrajectoryResult>> {
        propagate_logical(&self.schedule, offsets, &self.physics, &self.settings)
    }

    pub fn run(&self, realization: &NoiseRealization) -> Result<GateReport> {
        let tag = |e: Error| match e {
            Error::Integration { t, reason } => {
                Error::Integration { t, reason: format!("{reason} (offsets {:?})", realization.first) }
            }
            other => other,
        };
        let twist_sign = self.schedule.start_side.twist_sign();
        let first = self.ramp(&realization.first).map_err(tag)?;
        let block1 = logical_block(&first)?;
        let labels = Ket::logical().map(|k| k.label());
        match self.protocol {
            Protocol::Cz => {
                let report = compose_cz(&block1, self.fiducial_phi1, twist_sign)?;
                let norm_loss = mean(first.iter().map(|t| 1.0 - t.final_norm.powi(2)));
                Ok(with_times(report.with_norm_loss(norm_loss), &labels, |j| (first[j].t_r, first[j].t_rr)))
            }
            Protocol::Ms => {
                let second = if realization.is_static() {
                    first.clone()
                } else {
                    self.ramp(&realization.second).map_err(tag)?
                };
                let block2 = if realization.is_static() { block1.clone() } else { logical_block(&second)? };
                // Unequal offsets give distinct fingerprints; provenance is still one gate.
                let block2 = crate::propagator::LogicalBlock { fingerprint: block1.fingerprint, ..block2 };
                let report = compose_ms(&block1, &block2, twist_sign)?;
                const FLIP: [usize; 4] = [3, 2, 1, 0];
                let norm_loss = mean(
                    (0..4).map(|j| 1.0 - first[j].final_norm.powi(2) * second[FLIP[j]].final_norm.powi(2)),
                );
                Ok(with_times(report.with_norm_loss(norm_loss), &labels, |j| {
                    (first[j].t_r + second[FLIP[j]].t_r, first[j].t_rr + second[FLIP[j]].t_rr)
                }))
            }
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n.max(1) as f64
}

fn with_times(mut report: GateReport, labels: &[String; 4], times: impl Fn(usize) -> (f64, f64)) -> GateReport {
    report.t_r_by_input = BTreeMap::new();
    report.t_rr_by_input = BTreeMap::new();
    for (j, label) in labels.iter().enumerate() {
        let (t_r, t_rr) = times(j);
        report.t_r_by_input.insert(label.clone(), t_r);
        report.t_rr_by_input.insert(label.clone(), t_rr);
    }
    report
}

/// Single-atom dressing phase to remove after a CZ ramp.
pub fn fiducial_phase(
    schedule: &RampSchedule,
    physics: &PhysicsParams,
    settings: &PropagationSettings,
    source: FiducialSource,
) -> Result<f64> {
    match source {
        FiducialSource::Quadrature => single_atom_phase(schedule),
        FiducialSource::Simulated => {
            let quiet = PropagationSettings { samples: 0, ..*settings };
            let run = crate::propagator::propagate(
                schedule,
                &DriveOffsets::zero(),
                physics,
                &"01".parse::<Ket>().expect("valid label").into(),
                &quiet,
            )?;
            run.tracked_phase
                .map(|p| -p)
                .ok_or_else(|| Error::Extraction("lost track of the |01⟩ phase".into()))
        }
    }
}

/// Noise-free or single-realization protocol run with the default fiducial source.
pub fn run_protocol(
    protocol: Protocol,
    schedule: &RampSchedule,
    physics: &PhysicsParams,
    realization: &NoiseRealization,
    settings: &PropagationSettings,
) -> Result<GateReport> {
    ProtocolSetup::new(protocol, *schedule, *physics, *settings, FiducialSource::default())?.run(realization)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub sigma_delta: f64,
    pub sigma_omega: f64,
    /// `None` when every sample failed.
    pub estimate: Option<FidelityEstimate>,
    pub failures: usize,
    pub first_failure: Option<String>,
}

/// Mean fidelity over `n_samples` static realizations of `model`.
pub fn estimate_fidelity(setup: &ProtocolSetup, model: &NoiseModel, n_samples: usize, seed: u64) -> Result<SweepCell> {
    model.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be >= 1".into()));
    }
    let outcomes: Vec<Result<f64>> = if model.is_silent() {
        // Every realization is identical.
        let one = setup.run(&NoiseRealization::default()).map(|r| r.fidelity);
        vec![one; n_samples]
    } else {
        (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let realization = sample_realization(model, &mut sample_rng(seed, i as u64));
                setup.run(&realization).map(|r| r.fidelity)
            })
            .collect()
    };
    let mut values = Vec::with_capacity(n_samples);
    let mut failures = 0;
    let mut first_failure = None;
    for outcome in outcomes {
        match outcome {
            Ok(f) => values.push(f),
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let estimate = (!values.is_empty()).then(|| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.iter().any(|&v| v != values[0]) {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        FidelityEstimate { mean, std_error: (var / n).sqrt(), n_samples: values.len(), seed }
    });
    Ok(SweepCell { sigma_delta: model.sigma_delta, sigma_omega: model.sigma_omega, estimate, failures, first_failure })
}

/// One [`SweepCell`] per `(σ_Δ, σ_Ω)` grid point (rad/s). Sample `i` uses the
/// same standard-normal draws in every cell.
pub fn sweep(setup: &ProtocolSetup, sigma_grid: &[(f64, f64)], n_samples: usize, seed: u64) -> Result<Vec<SweepCell>> {
    sigma_grid
        .iter()
        .map(|&(sd, so)| estimate_fidelity(setup, &NoiseModel::new(sd, so), n_samples, seed))
        .collect()
}
