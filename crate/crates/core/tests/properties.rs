//! Ensemble and calibration invariants that need full ramp simulations.

use std::f64::consts::{FRAC_PI_2, PI};

use dressgate::calibrate::{calibrate_hold, ramp_observables, simulated_theta2, CalibrationSpec};
use dressgate::gates::Protocol;
use dressgate::montecarlo::{estimate_fidelity, sweep, FiducialSource, NoiseModel, ProtocolSetup};
use dressgate::propagator::adiabaticity_metric;
use dressgate::ramps::predicted_theta2;
use dressgate::{PhysicsParams, PropagationSettings, RampSchedule, RampShape};

fn physics() -> PhysicsParams {
    PhysicsParams::cesium_reference()
}

fn settings() -> PropagationSettings {
    PropagationSettings::default().without_samples()
}

fn calibrated(sweep_periods: f64, target: f64) -> RampSchedule {
    let template = RampShape { sweep_periods, ..RampShape::default() }.build(physics().omega_max).unwrap();
    calibrate_hold(&template, &CalibrationSpec::targeting(target), &physics(), &settings()).unwrap().schedule
}

fn worst_leakage(template: &RampSchedule) -> f64 {
    let lossless = physics().with_gamma_r(0.0);
    (0..12)
        .map(|k| {
            let s = template.with_hold(0.1 * k as f64 * physics().rabi_period());
            let o = ramp_observables(&s, &lossless, &settings()).unwrap();
            o.leakage.values().copied().fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Leakage out of the logical subspace falls off as the square of the
/// adiabaticity metric; it drops below 1e-3 once the metric is under 0.008.
#[test]
fn adiabatic_guard_bounds_leakage() {
    let p = physics();
    for sweep_periods in [3.8, 6.0, 10.0] {
        let t = RampShape { sweep_periods, ..RampShape::default() }.build(p.omega_max).unwrap();
        let metric = adiabaticity_metric(&t, &p, 400).unwrap();
        assert!(metric <= 0.1);
        let leak = worst_leakage(&t);
        assert!(leak <= 20.0 * metric * metric, "sweep {sweep_periods}: {leak} vs metric {metric}");
    }
    let slow = RampShape { sweep_periods: 30.0, ..RampShape::default() }.build(p.omega_max).unwrap();
    assert!(adiabaticity_metric(&slow, &p, 400).unwrap() <= 0.008);
    assert!(worst_leakage(&slow) < 1e-3);
}

#[test]
fn simulated_twist_tracks_quadrature_on_ms_ramp() {
    let s = calibrated(3.8, FRAC_PI_2);
    let sim = simulated_theta2(&s, &physics(), &settings()).unwrap();
    let predicted = predicted_theta2(&s).unwrap();
    assert!((sim / predicted - 1.0).abs() < 0.05, "{sim} {predicted}");
}

fn setups() -> (ProtocolSetup, ProtocolSetup) {
    let ms = ProtocolSetup::new(Protocol::Ms, calibrated(3.8, FRAC_PI_2), physics(), settings(), FiducialSource::Simulated);
    let cz = ProtocolSetup::new(Protocol::Cz, calibrated(4.0, PI), physics(), settings(), FiducialSource::Simulated);
    (ms.unwrap(), cz.unwrap())
}

#[test]
fn ms_is_more_robust_than_cz() {
    let (ms, cz) = setups();
    let omega = physics().omega_max;
    let grid: Vec<(f64, f64)> = [(0.05, 0.0), (0.0, 0.05), (0.05, 0.05), (0.1, 0.1)]
        .iter()
        .map(|&(d, o)| (d * omega, o * omega))
        .collect();
    let n = 500;
    let a = sweep(&ms, &grid, n, 3).unwrap();
    let b = sweep(&cz, &grid, n, 3).unwrap();
    for (m, c) in a.iter().zip(&b) {
        let (m, c) = (m.estimate.unwrap(), c.estimate.unwrap());
        let margin = 3.0 * m.std_error.hypot(c.std_error);
        assert!(m.mean + margin >= c.mean, "{m:?} {c:?}");
    }
}

#[test]
fn fidelity_degrades_with_detuning_spread() {
    let (ms, cz) = setups();
    let omega = physics().omega_max;
    for setup in [&ms, &cz] {
        let mut last: Option<(f64, f64)> = None;
        for frac in [0.0, 0.025, 0.05, 0.1] {
            let cell = estimate_fidelity(setup, &NoiseModel::new(frac * omega, 0.02 * omega), 200, 5).unwrap();
            let e = cell.estimate.unwrap();
            if let Some((mean, se)) = last {
                assert!(e.mean <= mean + 3.0 * se.hypot(e.std_error), "{:?} at {frac}: {} > {mean}", setup.protocol, e.mean);
            }
            last = Some((e.mean, e.std_error));
        }
    }
}
