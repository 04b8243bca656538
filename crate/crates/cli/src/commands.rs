use std::path::{Path, PathBuf};

use dressgate::calibrate::{calibrate_hold, CalibrationReport};
use dressgate::dressed::{kappa_finite_blockade, DressedAnalytics};
use dressgate::montecarlo::{sweep, NoiseRealization, ProtocolSetup};
use dressgate::propagator::{propagate, propagate_bd, BdOffsets, DriveOffsets, PopulationSample};
use dressgate::{AtomDrive, Ket, Protocol, RampSchedule, StartSide};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::Outputs;
use crate::CliError;

#[derive(Serialize)]
struct KappaRow {
    branch: StartSide,
    omega_hz: f64,
    delta_over_omega: f64,
    e_ls1_over_omega: f64,
    e_ls2_over_omega: f64,
    kappa_over_omega: f64,
    kappa_finite_over_omega: f64,
    near_resonance: bool,
}

pub fn kappa_scan(
    config: &RunConfig,
    out: &Outputs,
    delta_min: f64,
    delta_max: f64,
    points: usize,
) -> Result<PathBuf, CliError> {
    if !(delta_min.is_finite() && delta_max.is_finite() && delta_min < delta_max) || points < 2 {
        return Err(CliError::Config(format!(
            "need delta_min < delta_max and points >= 2, got [{delta_min}, {delta_max}] with {points}"
        )));
    }
    let physics = config.physics()?;
    let omega = physics.omega_max;
    let mut rows = Vec::with_capacity(2 * points);
    for branch in [StartSide::Red, StartSide::Blue] {
        for i in 0..points {
            let x = delta_min + (delta_max - delta_min) * i as f64 / (points - 1) as f64;
            let drive = AtomDrive::new(omega, x * omega)?;
            let a = DressedAnalytics::at(drive, branch);
            let finite = kappa_finite_blockade(drive, physics.v_dd, branch)?;
            rows.push(KappaRow {
                branch,
                omega_hz: omega / std::f64::consts::TAU,
                delta_over_omega: x,
                e_ls1_over_omega: a.e_ls1 / omega,
                e_ls2_over_omega: a.e_ls2 / omega,
                kappa_over_omega: a.kappa / omega,
                kappa_finite_over_omega: finite.kappa / omega,
                near_resonance: finite.near_resonance,
            });
        }
    }
    out.csv("kappa_scan.csv", &rows)
}

/// Calibrated schedule as written by `calibrate` and read by `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleArtifact {
    pub protocol: Protocol,
    #[serde(flatten)]
    pub schedule: RampSchedule,
    pub calibration: CalibrationReport,
}

pub fn calibrate_schedule(config: &RunConfig, protocol: Protocol) -> Result<ScheduleArtifact, CliError> {
    let physics = config.physics()?;
    let ramp = match protocol {
        Protocol::Ms => &config.schedule.ms,
        Protocol::Cz => &config.schedule.cz,
    };
    let template = ramp.shape()?.build(physics.omega_max)?;
    let spec = config.calibration_spec(protocol.ramp_target())?;
    let c = calibrate_hold(&template, &spec, &physics, &config.settings()?)?;
    Ok(ScheduleArtifact { protocol, schedule: c.schedule, calibration: c.report })
}

pub fn calibrate(config: &RunConfig, out: &Outputs, protocol: Protocol) -> Result<PathBuf, CliError> {
    let artifact = calibrate_schedule(config, protocol)?;
    out.json(&format!("schedule_{protocol}.json"), &artifact)
}

pub fn read_schedule(path: &Path, protocol: Protocol, config: &RunConfig) -> Result<RampSchedule, CliError> {
    let text = std::fs::read_to_string(path)?;
    let artifact: ScheduleArtifact =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if artifact.protocol != protocol {
        return Err(CliError::Config(format!(
            "{} was calibrated for {}, not {protocol}",
            path.display(),
            artifact.protocol
        )));
    }
    let omega_max = config.physics()?.omega_max;
    if (artifact.schedule.omega_max / omega_max - 1.0).abs() > 1e-9 {
        return Err(CliError::Config(format!("{} uses a different omega_max than the config", path.display())));
    }
    artifact.schedule.validate()?;
    Ok(artifact.schedule)
}

#[derive(Serialize)]
struct PopulationRow {
    input: String,
    t_periods: f64,
    p_ground_single: f64,
    p_single_rydberg: f64,
    p_11: f64,
    p_bright: f64,
    p_rr: f64,
}

impl PopulationRow {
    fn new(input: &str, period: f64, start: f64, s: &PopulationSample) -> Self {
        let p = |label: &str| s.populations[label.parse::<Ket>().expect("valid label").index()];
        Self {
            input: input.to_owned(),
            t_periods: (s.t - start) / period,
            p_ground_single: p("01") + p("10"),
            p_single_rydberg: p("0r") + p("1r") + p("r0") + p("r1"),
            p_11: p("11"),
            p_bright: s.bright,
            p_rr: p("rr"),
        }
    }
}

pub fn simulate(
    config: &RunConfig,
    out: &Outputs,
    protocol: Protocol,
    schedule_file: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    let physics = config.physics()?;
    let settings = config.settings()?;
    let schedule = match schedule_file {
        Some(path) => read_schedule(path, protocol, config)?,
        None => calibrate_schedule(config, protocol)?.schedule,
    };
    let setup = ProtocolSetup::new(protocol, schedule, physics, settings, config.fiducial()?)?;
    let report = setup.run(&NoiseRealization::default())?;

    let sampled = dressgate::PropagationSettings { samples: config.output.population_samples, ..settings };
    let period = physics.rabi_period();
    let mut rows = Vec::new();
    for ket in Ket::logical() {
        let run = propagate(&schedule, &DriveOffsets::zero(), &physics, &ket.into(), &sampled)?;
        rows.extend(run.population_series.iter().map(|s| PopulationRow::new(&ket.label(), period, schedule.t1, s)));
    }
    Ok(vec![
        out.json(&format!("report_{protocol}.json"), &report)?,
        out.csv(&format!("populations_{protocol}.csv"), &rows)?,
    ])
}

#[derive(Serialize)]
struct SweepRow {
    protocol: Protocol,
    sigma_delta_over_omega: f64,
    sigma_omega_over_omega: f64,
    mean_fidelity: Option<f64>,
    std_error: Option<f64>,
    n_samples: usize,
    failures: usize,
    first_failure: Option<String>,
    seed: u64,
}

pub fn run_sweep(
    config: &RunConfig,
    out: &Outputs,
    protocol: Protocol,
    schedule_file: Option<&Path>,
) -> Result<PathBuf, CliError> {
    let physics = config.physics()?;
    let settings = config.settings()?;
    let schedule = match schedule_file {
        Some(path) => read_schedule(path, protocol, config)?,
        None => calibrate_schedule(config, protocol)?.schedule,
    };
    let setup = ProtocolSetup::new(protocol, schedule, physics, settings, config.fiducial()?)?;
    let omega = physics.omega_max;
    let grid: Vec<(f64, f64)> = config.noise.sigma_grid.iter().map(|[d, o]| (d * omega, o * omega)).collect();
    let cells = sweep(&setup, &grid, config.noise.n_samples, config.noise.seed)?;
    let rows: Vec<SweepRow> = cells
        .into_iter()
        .zip(&config.noise.sigma_grid)
        .map(|(cell, [d, o])| SweepRow {
            protocol,
            sigma_delta_over_omega: *d,
            sigma_omega_over_omega: *o,
            mean_fidelity: cell.estimate.map(|e| e.mean),
            std_error: cell.estimate.map(|e| e.std_error),
            n_samples: cell.estimate.map_or(0, |e| e.n_samples),
            failures: cell.failures,
            first_failure: cell.first_failure,
            seed: config.noise.seed,
        })
        .collect();
    out.csv(&format!("sweep_{protocol}.csv"), &rows)
}

#[derive(Serialize)]
struct BdRow {
    /// `k p_rel / (m Ω_max)`.
    p_rel_over_omega: f64,
    p_rel_si: f64,
    max_dark_population: f64,
}

pub fn bd_check(config: &RunConfig, out: &Outputs, p_rel_max: f64, points: usize) -> Result<PathBuf, CliError> {
    if !(p_rel_max >= 0.0 && p_rel_max.is_finite()) || points < 1 {
        return Err(CliError::Config(format!("need p_rel_max >= 0 and points >= 1, got {p_rel_max}, {points}")));
    }
    let physics = config.physics()?;
    let settings = config.settings()?;
    let schedule = calibrate_schedule(config, Protocol::Ms)?.schedule;
    let scale = physics.mass * physics.omega_max / physics.k_1r;
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let x = if points == 1 { p_rel_max } else { p_rel_max * i as f64 / (points - 1) as f64 };
        let offsets = BdOffsets { p_rel: x * scale, ..BdOffsets::default() };
        let run = propagate_bd(&schedule, &offsets, &physics, &settings)?;
        rows.push(BdRow { p_rel_over_omega: x, p_rel_si: x * scale, max_dark_population: run.max_dark_population });
    }
    out.csv("bd_check.csv", &rows)
}
