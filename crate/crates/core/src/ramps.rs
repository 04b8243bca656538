//! Dressing ramps: Gaussian Rabi edges, linear detuning sweep, flat hold.

use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::dressed::{kappa_perfect_blockade, light_shift_one, StartSide};
use crate::error::{ensure_finite, Error, Result};
use crate::physics::AtomDrive;

/// Time-dependent, spatially uniform drive on both atoms.
pub trait DriveSchedule: Sync {
    fn window(&self) -> (f64, f64);
    /// Rabi frequency at `t`; callers keep `t` inside [`Self::window`].
    fn omega(&self, t: f64) -> f64;
    /// Signed detuning at `t`.
    fn delta(&self, t: f64) -> f64;
    /// Interior times where the drive has a kink.
    fn breakpoints(&self) -> Vec<f64>;
    fn start_side(&self) -> StartSide;
    /// Feeds every parameter that shapes the drive into `state`.
    fn hash_params(&self, state: &mut dyn Hasher);

    fn duration(&self) -> f64 {
        let (a, b) = self.window();
        b - a
    }

    fn drive(&self, t: f64) -> AtomDrive {
        AtomDrive { omega: self.omega(t), delta: self.delta(t) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Detuning magnitude on the hold.
    pub delta_min: f64,
    /// Detuning magnitude at the window edges.
    pub delta_max: f64,
    pub t_w: f64,
    pub start_side: StartSide,
}

/// Dimensionless ramp template in units of `Ω_max` and its Rabi period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RampShape {
    pub delta_min_over_omega: f64,
    pub delta_max_over_omega: f64,
    pub omega_min_over_omega: f64,
    /// Sweep duration `t2 − t1` in Rabi periods.
    pub sweep_periods: f64,
    /// Hold duration `t3 − t2` in Rabi periods.
    pub hold_periods: f64,
    /// `t_w / (t2 − t1)`.
    pub tw_over_sweep: f64,
    pub start_side: StartSide,
}

impl Default for RampShape {
    fn default() -> Self {
        Self {
            delta_min_over_omega: 0.1,
            delta_max_over_omega: 6.0,
            omega_min_over_omega: 1e-3,
            sweep_periods: 3.8,
            hold_periods: 0.5,
            tw_over_sweep: 0.25,
            start_side: StartSide::Red,
        }
    }
}

impl RampShape {
    pub fn build(&self, omega_max: f64) -> Result<RampSchedule> {
        let period = std::f64::consts::TAU / omega_max;
        let sweep = self.sweep_periods * period;
        let hold = self.hold_periods * period;
        let schedule = RampSchedule {
            t1: 0.0,
            t2: sweep,
            t3: sweep + hold,
            t4: 2.0 * sweep + hold,
            omega_min: self.omega_min_over_omega * omega_max,
            omega_max,
            delta_min: self.delta_min_over_omega * omega_max,
            delta_max: self.delta_max_over_omega * omega_max,
            t_w: self.tw_over_sweep * sweep,
            start_side: self.start_side,
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

impl RampSchedule {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t1", self.t1),
            ("t2", self.t2),
            ("t3", self.t3),
            ("t4", self.t4),
            ("omega_min", self.omega_min),
            ("omega_max", self.omega_max),
            ("delta_min", self.delta_min),
            ("delta_max", self.delta_max),
            ("t_w", self.t_w),
        ] {
            ensure_finite(name, v)?;
        }
        let invalid = |msg: &str| Err(Error::InvalidInput(format!("ramp schedule: {msg}")));
        if !(self.t1 < self.t2 && self.t2 <= self.t3 && self.t3 < self.t4) {
            return invalid("require t1 < t2 <= t3 < t4");
        }
        let rise = self.t2 - self.t1;
        let fall = self.t4 - self.t3;
        if (rise - fall).abs() > 1e-9 * rise.max(fall) {
            return invalid("falling edge must mirror the rising edge (t4 - t3 = t2 - t1)");
        }
        if !(0.0 <= self.omega_min && self.omega_min < self.omega_max) {
            return invalid("require 0 <= omega_min < omega_max");
        }
        if !(0.0 < self.delta_min && self.delta_min < self.delta_max) {
            return invalid("require 0 < delta_min < delta_max");
        }
        if self.t_w <= 0.0 {
            return invalid("t_w must be > 0");
        }
        Ok(())
    }

    pub fn sweep_duration(&self) -> f64 {
        self.t2 - self.t1
    }

    pub fn hold_duration(&self) -> f64 {
        self.t3 - self.t2
    }

    /// Same shape with the hold set to `hold` (s); the falling edge moves with it.
    pub fn with_hold(&self, hold: f64) -> Self {
        let sweep = self.sweep_duration();
        Self { t3: self.t2 + hold, t4: self.t2 + hold + sweep, ..*self }
    }

    /// Same hold and endpoints, sweep rescaled to `sweep` (s) with `t_w`
    /// keeping its proportion.
    pub fn with_sweep(&self, sweep: f64) -> Self {
        let hold = self.hold_duration();
        let t2 = self.t1 + sweep;
        Self {
            t2,
            t3: t2 + hold,
            t4: t2 + hold + sweep,
            t_w: self.t_w * sweep / self.sweep_duration(),
            ..*self
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        if t >= self.t1 && t <= self.t4 {
            Ok(())
        } else {
            Err(Error::OutsideWindow { t, start: self.t1, end: self.t4 })
        }
    }

    pub fn omega_at(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.omega(t))
    }

    pub fn delta_at(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.delta(t))
    }

    fn gaussian(&self, offset: f64) -> f64 {
        let x = offset / self.t_w;
        self.omega_min + (self.omega_max - self.omega_min) * (-0.5 * x * x).exp()
    }
}

impl DriveSchedule for RampSchedule {
    fn window(&self) -> (f64, f64) {
        (self.t1, self.t4)
    }

    fn omega(&self, t: f64) -> f64 {
        if t < self.t2 {
            self.gaussian(self.t2 - t)
        } else if t <= self.t3 {
            self.omega_max
        } else {
            self.gaussian(t - self.t3)
        }
    }

    fn delta(&self, t: f64) -> f64 {
        let span = self.delta_max - self.delta_min;
        let magnitude = if t < self.t2 {
            self.delta_min + span * (self.t2 - t) / (self.t2 - self.t1)
        } else if t <= self.t3 {
            self.delta_min
        } else {
            self.delta_min + span * (t - self.t3) / (self.t4 - self.t3)
        };
        self.start_side.sign() * magnitude
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.t3 > self.t2 {
            vec![self.t2, self.t3]
        } else {
            vec![self.t2]
        }
    }

    fn start_side(&self) -> StartSide {
        self.start_side
    }

    fn hash_params(&self, state: &mut dyn Hasher) {
        state.write_u8(1);
        for v in [
            self.t1,
            self.t2,
            self.t3,
            self.t4,
            self.omega_min,
            self.omega_max,
            self.delta_min,
            self.delta_max,
            self.t_w,
            self.start_side.sign(),
        ] {
            state.write_u64(v.to_bits());
        }
    }
}

/// Drive held at fixed `(Ω, Δ)` over `[0, duration]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantDrive {
    pub omega: f64,
    pub delta: f64,
    pub duration: f64,
    pub side: StartSide,
}

impl DriveSchedule for ConstantDrive {
    fn window(&self) -> (f64, f64) {
        (0.0, self.duration)
    }

    fn omega(&self, _t: f64) -> f64 {
        self.omega
    }

    fn delta(&self, _t: f64) -> f64 {
        self.delta
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn start_side(&self) -> StartSide {
        self.side
    }

    fn hash_params(&self, state: &mut dyn Hasher) {
        state.write_u8(2);
        for v in [self.omega, self.delta, self.duration, self.side.sign()] {
            state.write_u64(v.to_bits());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSample {
    pub t: f64,
    pub omega: f64,
    pub delta: f64,
    pub kappa: f64,
}

pub fn kappa_profile(schedule: &RampSchedule, n_points: usize) -> Result<Vec<KappaSample>> {
    if n_points < 2 {
        return Err(Error::InvalidInput("kappa_profile needs at least 2 points".into()));
    }
    schedule.validate()?;
    let (a, b) = schedule.window();
    let step = (b - a) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let t = if i + 1 == n_points { b } else { a + step * i as f64 };
            let drive = schedule.drive(t);
            KappaSample {
                t,
                omega: drive.omega,
                delta: drive.delta,
                kappa: kappa_perfect_blockade(drive, schedule.start_side),
            }
        })
        .collect())
}

/// Absolute tolerance (rad) of the schedule integrals.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// `∫ f(Ω(t), Δ(t)) dt` over the schedule, split at its breakpoints.
pub fn integrate_schedule<S, F>(schedule: &S, f: F, tolerance: f64) -> Result<f64>
where
    S: DriveSchedule + ?Sized,
    F: Fn(AtomDrive) -> f64,
{
    let (a, b) = schedule.window();
    let mut knots = vec![a];
    knots.extend(schedule.breakpoints().into_iter().filter(|&t| t > a && t < b));
    knots.push(b);
    knots.dedup();
    let pieces = (knots.len() - 1) as f64;
    let mut total = 0.0;
    for w in knots.windows(2) {
        let out = quadrature::integrate(|t| f(schedule.drive(t)), w[0], w[1], tolerance / pieces);
        if !out.integral.is_finite() || out.error_estimate > tolerance / pieces {
            return Err(Error::Quadrature { estimate: out.error_estimate, tolerance });
        }
        total += out.integral;
    }
    Ok(total)
}

/// `ϑ₂ = ∫ κ dt` under perfect blockade.
pub fn predicted_theta2<S: DriveSchedule + ?Sized>(schedule: &S) -> Result<f64> {
    let side = schedule.start_side();
    integrate_schedule(schedule, |d| kappa_perfect_blockade(d, side), QUADRATURE_TOLERANCE)
}

/// `φ = ∫ E_LS⁽¹⁾ dt`, the single-atom dressing phase.
pub fn single_atom_phase<S: DriveSchedule + ?Sized>(schedule: &S) -> Result<f64> {
    let side = schedule.start_side();
    integrate_schedule(schedule, |d| light_shift_one(d, side), QUADRATURE_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    const OMEGA: f64 = TAU * 4.0e6;

    fn template() -> RampSchedule {
        RampShape::default().build(OMEGA).unwrap()
    }

    #[test]
    fn envelope_landmarks() {
        let s = template();
        assert_eq!(s.omega_at(s.t2).unwrap(), s.omega_max);
        assert_eq!(s.omega_at(0.5 * (s.t2 + s.t3)).unwrap(), s.omega_max);
        let want = s.omega_min + (s.omega_max - s.omega_min) * (-8.0f64).exp();
        assert!((s.omega_at(s.t1).unwrap() - want).abs() < 1e-12 * s.omega_max);
        assert!(s.omega_at(s.t4 * 1.0001).is_err());
        assert!(matches!(s.delta_at(-1e-9), Err(Error::OutsideWindow { .. })));
    }

    #[test]
    fn detuning_landmarks() {
        for side in [StartSide::Blue, StartSide::Red] {
            let s = RampSchedule { start_side: side, ..template() };
            let sg = side.sign();
            assert_eq!(s.delta_at(s.t1).unwrap(), sg * s.delta_max);
            assert_eq!(s.delta_at(s.t2).unwrap(), sg * s.delta_min);
            let mid = s.delta_at(0.5 * (s.t1 + s.t2)).unwrap();
            assert!((mid - sg * 0.5 * (s.delta_max + s.delta_min)).abs() < 1e-9 * s.delta_max);
            assert!((s.delta_at(s.t4).unwrap() - sg * s.delta_max).abs() < 1e-9 * s.delta_max);
        }
    }

    #[test]
    fn rejects_bad_schedules() {
        let s = template();
        assert!(RampSchedule { t4: s.t4 * 1.1, ..s }.validate().is_err());
        assert!(RampSchedule { t3: s.t2 * 0.5, ..s }.validate().is_err());
        assert!(RampSchedule { delta_min: 0.0, ..s }.validate().is_err());
        assert!(RampSchedule { omega_min: s.omega_max, ..s }.validate().is_err());
    }

    #[test]
    fn profile_peak_and_symmetry() {
        let s = template();
        let p = kappa_profile(&s, 801).unwrap();
        let peak = p.iter().map(|x| x.kappa).fold(f64::MIN, f64::max);
        assert!((peak / OMEGA - 0.2461).abs() < 5e-4);
        assert!(p[0].kappa.abs() < 1e-6 * OMEGA);
        for (a, b) in p.iter().zip(p.iter().rev()) {
            assert!((a.kappa - b.kappa).abs() < 1e-9 * OMEGA);
        }
        assert!(kappa_profile(&s, 1).is_err());
    }

    #[test]
    fn undriven_theta2_is_zero() {
        let s = RampSchedule { omega_min: 0.0, omega_max: 1e-300, ..template() };
        assert!(predicted_theta2(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn theta2_additive_in_hold() {
        let s = template();
        let extra = 0.3 * TAU / OMEGA;
        let longer = s.with_hold(s.hold_duration() + extra);
        let plateau = kappa_perfect_blockade(AtomDrive::new(OMEGA, -0.1 * OMEGA).unwrap(), StartSide::Red);
        let diff = predicted_theta2(&longer).unwrap() - predicted_theta2(&s).unwrap();
        assert!((diff - plateau * extra).abs() < 4.0 * QUADRATURE_TOLERANCE);
    }

    #[test]
    fn theta2_matches_fine_trapezoid() {
        let s = template();
        let n = 200_000;
        let h = s.duration() / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * kappa_perfect_blockade(s.drive(s.t1 + h * i as f64), s.start_side);
        }
        assert!((acc * h - predicted_theta2(&s).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn with_sweep_keeps_proportions() {
        let s = template();
        let t = s.with_sweep(2.0 * s.sweep_duration());
        t.validate().unwrap();
        assert!((t.t_w / t.sweep_duration() - 0.25).abs() < 1e-12);
        assert!((t.hold_duration() - s.hold_duration()).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn mirror_symmetry(frac in 0.0f64..1.0, hold in 0.0f64..3.0, blue in any::<bool>()) {
            let shape = RampShape {
                hold_periods: hold,
                start_side: if blue { StartSide::Blue } else { StartSide::Red },
                ..RampShape::default()
            };
            let s = shape.build(OMEGA).unwrap();
            let t = s.t1 + frac * (s.t4 - s.t1);
            let m = s.t1 + s.t4 - t;
            let (o1, o2) = (s.omega_at(t).unwrap(), s.omega_at(m.clamp(s.t1, s.t4)).unwrap());
            let (d1, d2) = (s.delta_at(t).unwrap(), s.delta_at(m.clamp(s.t1, s.t4)).unwrap());
            prop_assert!((o1 - o2).abs() <= 1e-12 * o1.abs().max(s.omega_min));
            prop_assert!((d1 - d2).abs() <= 1e-12 * d1.abs());
        }

        #[test]
        fn monotone_sweep(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let s = template();
            let (lo, hi) = (a.min(b), a.max(b));
            let rise = |x: f64| s.delta_at(s.t1 + x * s.sweep_duration()).unwrap().abs();
            let fall = |x: f64| s.delta_at(s.t3 + x * s.sweep_duration()).unwrap().abs();
            prop_assert!(rise(lo) >= rise(hi));
            prop_assert!(fall(lo) <= fall(hi));
        }

        #[test]
        fn theta2_increases_with_hold(h1 in 0.0f64..2.0, dh in 0.05f64..1.0) {
            let s = template();
            let period = TAU / OMEGA;
            let a = predicted_theta2(&s.with_hold(h1 * period)).unwrap();
            let b = predicted_theta2(&s.with_hold((h1 + dh) * period)).unwrap();
            prop_assert!(b > a);
        }
    }
}
