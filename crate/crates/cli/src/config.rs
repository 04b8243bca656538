//! Run configuration. Keys carry their unit; everything is converted to SI
//! angular units before reaching the simulator.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use dressgate::calibrate::{Adjustable, CalibrationSpec};
use dressgate::physics::{AMU, CESIUM_133_AMU};
use dressgate::{FiducialSource, Method, PhysicsParams, PropagationSettings, RampShape, StartSide};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

const REFERENCE_OMEGA_MAX_MHZ: f64 = 4.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    pub schedule: ScheduleConfig,
    pub calibration: CalibrationConfig,
    pub propagation: PropagationConfig,
    pub noise: NoiseConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    /// Peak Rabi frequency Ω_max/2π in MHz. Exclusive with `omega_max_hz`;
    /// 4 MHz when neither is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max_mhz: Option<f64>,
    /// Peak Rabi frequency Ω_max/2π in Hz. Exclusive with `omega_max_mhz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max_hz: Option<f64>,
    pub v_dd_over_omega: f64,
    /// Rydberg lifetime; `null` switches decay off.
    pub tau_r_us: Option<f64>,
    pub wavelength_nm: f64,
    pub mass_amu: f64,
    pub temperature_uk: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            omega_max_mhz: Some(REFERENCE_OMEGA_MAX_MHZ),
            omega_max_hz: None,
            v_dd_over_omega: 10.0,
            tau_r_us: Some(140.0),
            wavelength_nm: 319.0,
            mass_amu: CESIUM_133_AMU,
            temperature_uk: 10.0,
        }
    }
}

/// Ramp template in units of Ω_max and its Rabi period 2π/Ω_max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RampConfig {
    pub delta_min_over_omega: f64,
    pub delta_max_over_omega: f64,
    pub omega_min_over_omega: f64,
    pub sweep_periods: f64,
    /// Provisional hold; calibration replaces it.
    pub hold_periods: f64,
    pub tw_over_sweep: f64,
    /// `red` or `blue`.
    pub start_side: String,
}

impl From<RampShape> for RampConfig {
    fn from(s: RampShape) -> Self {
        Self {
            delta_min_over_omega: s.delta_min_over_omega,
            delta_max_over_omega: s.delta_max_over_omega,
            omega_min_over_omega: s.omega_min_over_omega,
            sweep_periods: s.sweep_periods,
            hold_periods: s.hold_periods,
            tw_over_sweep: s.tw_over_sweep,
            start_side: s.start_side.to_string(),
        }
    }
}

impl Default for RampConfig {
    fn default() -> Self {
        RampShape::default().into()
    }
}

impl RampConfig {
    pub fn shape(&self) -> Result<RampShape, CliError> {
        let start_side: StartSide = self.start_side.parse().map_err(|e| CliError::Config(format!("start_side: {e}")))?;
        Ok(RampShape {
            delta_min_over_omega: self.delta_min_over_omega,
            delta_max_over_omega: self.delta_max_over_omega,
            omega_min_over_omega: self.omega_min_over_omega,
            sweep_periods: self.sweep_periods,
            hold_periods: self.hold_periods,
            tw_over_sweep: self.tw_over_sweep,
            start_side,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Template for each of the two MS ramps (target twist π/2).
    pub ms: RampConfig,
    /// Template for the single CZ ramp (target twist π).
    pub cz: RampConfig,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { ms: RampConfig::default(), cz: RampConfig { sweep_periods: 4.0, ..RampConfig::default() } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub tolerance_rad: f64,
    pub adiabaticity_guard: f64,
    pub max_iterations: usize,
    /// `hold` or `hold-and-sweep`.
    pub adjustable: String,
    pub metric_points: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let spec = CalibrationSpec::default();
        Self {
            tolerance_rad: spec.tolerance,
            adiabaticity_guard: spec.adiabaticity_guard,
            max_iterations: spec.max_iterations,
            adjustable: "hold".into(),
            metric_points: spec.metric_points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step_ns: f64,
    /// `adaptive-embedded-pair` or `piecewise-constant-exponential`.
    pub method: String,
    pub checkpoints: usize,
    pub max_steps: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        let s = PropagationSettings::default();
        Self {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            max_step_ns: s.max_step * 1e9,
            method: "adaptive-embedded-pair".into(),
            checkpoints: s.checkpoints,
            max_steps: s.max_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// `[σ_Δ/Ω_max, σ_Ω/Ω_max]` pairs.
    pub sigma_grid: Vec<[f64; 2]>,
    pub n_samples: usize,
    pub seed: u64,
    /// Source of the CZ phase-removal angle: `simulated` or `quadrature`.
    pub fiducial: String,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_grid: vec![[0.0, 0.0], [0.05, 0.0], [0.0, 0.05], [0.05, 0.05], [0.1, 0.1]],
            n_samples: 200,
            seed: 1,
            fiducial: "simulated".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Population samples per input in `simulate` output.
    pub population_samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), population_samples: 512 }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn parse_enum<T: for<'de> Deserialize<'de>>(name: &str, value: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(value.into()))
        .map_err(|_| CliError::Config(format!("{name}: unknown value {value:?}")))
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let config = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        let mut config: Self = config;
        if config.physics.omega_max_mhz.is_none() && config.physics.omega_max_hz.is_none() {
            config.physics.omega_max_mhz = Some(REFERENCE_OMEGA_MAX_MHZ);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.physics()?;
        self.settings()?;
        self.calibration_spec(1.0)?;
        self.fiducial()?;
        self.schedule.ms.shape()?.build(1.0)?;
        self.schedule.cz.shape()?.build(1.0)?;
        for [sd, so] in &self.noise.sigma_grid {
            if !(*sd >= 0.0 && *so >= 0.0 && sd.is_finite() && so.is_finite()) {
                return Err(CliError::Config(format!("sigma_grid entries must be >= 0, got [{sd}, {so}]")));
            }
        }
        if self.noise.n_samples == 0 {
            return Err(CliError::Config("n_samples must be >= 1".into()));
        }
        Ok(())
    }

    pub fn omega_max(&self) -> Result<f64, CliError> {
        let hz = match (self.physics.omega_max_mhz, self.physics.omega_max_hz) {
            (Some(mhz), None) => mhz * 1e6,
            (None, Some(hz)) => hz,
            (None, None) => REFERENCE_OMEGA_MAX_MHZ * 1e6,
            _ => return Err(CliError::Config("set exactly one of omega_max_mhz, omega_max_hz".into())),
        };
        positive("omega_max", hz)?;
        Ok(TAU * hz)
    }

    pub fn physics(&self) -> Result<PhysicsParams, CliError> {
        let p = &self.physics;
        let omega_max = self.omega_max()?;
        positive("v_dd_over_omega", p.v_dd_over_omega)?;
        positive("wavelength_nm", p.wavelength_nm)?;
        positive("mass_amu", p.mass_amu)?;
        if !(p.temperature_uk >= 0.0 && p.temperature_uk.is_finite()) {
            return Err(CliError::Config(format!("temperature_uk must be >= 0, got {}", p.temperature_uk)));
        }
        let gamma_r = match p.tau_r_us {
            Some(tau) => {
                positive("tau_r_us", tau)?;
                1.0 / (tau * 1e-6)
            }
            None => 0.0,
        };
        let physics = PhysicsParams {
            omega_max,
            v_dd: p.v_dd_over_omega * omega_max,
            gamma_r,
            k_1r: TAU / (p.wavelength_nm * 1e-9),
            mass: p.mass_amu * AMU,
            temperature: p.temperature_uk * 1e-6,
        };
        physics.validate()?;
        Ok(physics)
    }

    pub fn settings(&self) -> Result<PropagationSettings, CliError> {
        let p = &self.propagation;
        let settings = PropagationSettings {
            rel_tol: p.rel_tol,
            abs_tol: p.abs_tol,
            max_step: p.max_step_ns * 1e-9,
            method: parse_enum::<Method>("method", &p.method)?,
            samples: 0,
            checkpoints: p.checkpoints,
            max_steps: p.max_steps,
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn calibration_spec(&self, target: f64) -> Result<CalibrationSpec, CliError> {
        let c = &self.calibration;
        let spec = CalibrationSpec {
            target_theta2: target,
            tolerance: c.tolerance_rad,
            adjustable: parse_enum::<Adjustable>("adjustable", &c.adjustable)?,
            adiabaticity_guard: c.adiabaticity_guard,
            max_iterations: c.max_iterations,
            metric_points: c.metric_points,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fiducial(&self) -> Result<FiducialSource, CliError> {
        parse_enum("fiducial", &self.noise.fiducial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_reference_point() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let p = c.physics().unwrap();
        let reference = PhysicsParams::cesium_reference();
        for (a, b) in [
            (p.omega_max, reference.omega_max),
            (p.v_dd, reference.v_dd),
            (p.gamma_r, reference.gamma_r),
            (p.k_1r, reference.k_1r),
            (p.mass, reference.mass),
            (p.temperature, reference.temperature),
        ] {
            assert!((a / b - 1.0).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn hz_and_mhz_agree() {
        let mut c = RunConfig::default();
        c.physics.omega_max_mhz = None;
        c.physics.omega_max_hz = Some(4.0e6);
        let parsed: RunConfig = serde_json::from_str(r#"{"physics": {"omega_max_hz": 4e6}}"#).unwrap();
        assert_eq!(parsed.omega_max().unwrap(), c.omega_max().unwrap());
        assert_eq!(c.omega_max().unwrap(), RunConfig::default().omega_max().unwrap());
        c.physics.omega_max_mhz = Some(4.0);
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_unknown_and_nonpositive() {
        let err = serde_json::from_str::<RunConfig>(r#"{"physics": {"omega_max_ghz": 1}}"#);
        assert!(err.is_err());
        let c: RunConfig = serde_json::from_str(r#"{"physics": {"wavelength_nm": -3}}"#).unwrap();
        assert!(c.validate().is_err());
        let c: RunConfig = serde_json::from_str(r#"{"propagation": {"method": "euler"}}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn null_lifetime_disables_decay() {
        let c: RunConfig = serde_json::from_str(r#"{"physics": {"tau_r_us": null}}"#).unwrap();
        assert_eq!(c.physics().unwrap().gamma_r, 0.0);
    }

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
