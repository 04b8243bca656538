//! Time-dependent Schrödinger propagation of the two-atom system.
//!
//! Integration runs in the dimensionless time `τ = (t − t₁)·Ω_max`. The
//! integrated Rydberg dwell times ride along as two extra real components of
//! the ODE state, so they share the adaptive step sequence of the amplitudes.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::Hasher;

use nalgebra::{Matrix3, SMatrix, SVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{rydberg_populations, Ket, Mat4, State9, C64, DIM, LOGICAL};
use crate::dressed::connected_index;
use crate::error::{Error, Result};
use crate::hamiltonian::{bd_unchecked, two_atom_unchecked, BDModelParams};
use crate::ode::{self, OdeOptions, OdeState, StepStats};
use crate::physics::PhysicsParams;
use crate::ramps::DriveSchedule;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    AdaptiveEmbeddedPair,
    PiecewiseConstantExponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step (s).
    pub max_step: f64,
    pub method: Method,
    /// Uniform population samples over the window, endpoints included; 0 disables.
    pub samples: usize,
    /// Uniformly spaced intermediate states kept for phase continuation.
    pub checkpoints: usize,
    pub max_steps: usize,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 1e-8,
            method: Method::AdaptiveEmbeddedPair,
            samples: 512,
            checkpoints: 8,
            max_steps: 5_000_000,
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1e-3], got {v}")));
            }
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput(format!("max_step must be > 0, got {}", self.max_step)));
        }
        if self.samples == 1 {
            return Err(Error::InvalidInput("samples must be 0 or at least 2".into()));
        }
        Ok(())
    }

    /// Same settings without dense population output.
    pub fn without_samples(self) -> Self {
        Self { samples: 0, ..self }
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..self }
    }
}

/// Static per-atom deviations from the nominal drive, index 0 for atom α.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveOffsets {
    /// Detuning offsets δΔᵢ (rad/s).
    pub delta: [f64; 2],
    /// Rabi offsets δΩᵢ (rad/s), applied as `Ω(t)(1 + δΩᵢ/Ω_max)`.
    pub omega: [f64; 2],
}

impl DriveOffsets {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn common_detuning(delta: f64) -> Self {
        Self { delta: [delta; 2], omega: [0.0; 2] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta.iter().chain(&self.omega).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("non-finite drive offsets {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Basis(Ket),
    Vector(State9),
}

impl From<Ket> for InitialState {
    fn from(k: Ket) -> Self {
        InitialState::Basis(k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSample {
    pub t: f64,
    pub populations: [f64; DIM],
    /// `|⟨b|ψ⟩|²` with `|b⟩ = (|1r⟩ + |r1⟩)/√2`.
    pub bright: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub state: State9,
    /// Continuous phase of the initial basis amplitude up to `t`.
    pub tracked_phase: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub initial: Option<Ket>,
    pub final_state: State9,
    pub population_series: Vec<PopulationSample>,
    pub checkpoints: Vec<Checkpoint>,
    /// `∫ P(exactly one atom in r) dt` (s).
    pub t_r: f64,
    /// `∫ P(|rr⟩) dt` (s).
    pub t_rr: f64,
    pub final_norm: f64,
    /// Unwrapped `arg⟨init|ψ(t₄)⟩`, continued over every accepted step.
    /// `None` when the initial amplitude came too close to zero to follow.
    pub tracked_phase: Option<f64>,
    pub stats: StepStats,
    /// Identifies schedule, physics, offsets, and numerical settings.
    pub fingerprint: u64,
}

impl TrajectoryResult {
    pub fn leakage(&self) -> f64 {
        let logical: f64 = LOGICAL.iter().map(|&i| self.final_state[i].norm_sqr()).sum();
        (self.final_norm * self.final_norm - logical).max(0.0)
    }
}

/// Hamiltonian source for the generic integrator.
trait Model<const N: usize>: Sync {
    /// `out = H(t)·ψ`.
    fn apply(&self, t: f64, psi: &SVector<C64, N>, out: &mut SVector<C64, N>);
    fn matrix(&self, t: f64) -> SMatrix<C64, N, N>;
    fn expm(m: SMatrix<C64, N, N>) -> SMatrix<C64, N, N>;
    /// Single-excitation and double-excitation populations.
    fn observables(&self, psi: &SVector<C64, N>) -> [f64; 2];
}

struct NineLevel<'a, S: ?Sized> {
    schedule: &'a S,
    offsets: DriveOffsets,
    physics: PhysicsParams,
}

impl<S: DriveSchedule + ?Sized> NineLevel<'_, S> {
    fn drives(&self, t: f64) -> [(f64, f64); 2] {
        let omega = self.schedule.omega(t);
        let delta = self.schedule.delta(t);
        std::array::from_fn(|i| {
            (omega * (1.0 + self.offsets.omega[i] / self.physics.omega_max), delta + self.offsets.delta[i])
        })
    }
}

impl<S: DriveSchedule + ?Sized> Model<DIM> for NineLevel<'_, S> {
    fn apply(&self, t: f64, psi: &State9, out: &mut State9) {
        let [(oa, da), (ob, db)] = self.drives(t);
        let half_gamma = 0.5 * self.physics.gamma_r;
        let (ca, cb) = (0.5 * oa, 0.5 * ob);
        let ra = C64::new(-da, -half_gamma);
        let rb = C64::new(-db, -half_gamma);
        out.fill(C64::new(0.0, 0.0));
        // Atom α acts on the first index, atom β on the second.
        for o in 0..3 {
            out[3 + o] += psi[6 + o] * ca;
            out[6 + o] += psi[3 + o] * ca + psi[6 + o] * ra;
            let row = 3 * o;
            out[row + 1] += psi[row + 2] * cb;
            out[row + 2] += psi[row + 1] * cb + psi[row + 2] * rb;
        }
        out[8] += psi[8] * self.physics.v_dd;
    }

    fn matrix(&self, t: f64) -> SMatrix<C64, DIM, DIM> {
        let [(oa, da), (ob, db)] = self.drives(t);
        two_atom_unchecked(oa, da, ob, db, self.physics.v_dd, self.physics.gamma_r)
    }

    fn expm(m: SMatrix<C64, DIM, DIM>) -> SMatrix<C64, DIM, DIM> {
        m.exp()
    }

    fn observables(&self, psi: &State9) -> [f64; 2] {
        let (single, double) = rydberg_populations(psi);
        [single, double]
    }
}

#[derive(Clone, Debug)]
struct Aug<const N: usize> {
    psi: SVector<C64, N>,
    acc: [f64; 2],
}

impl<const N: usize> OdeState for Aug<N> {
    fn zeroed(&self) -> Self {
        Self { psi: SVector::zeros(), acc: [0.0; 2] }
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        self.psi.axpy(C64::new(a, 0.0), &x.psi, C64::new(1.0, 0.0));
        self.acc[0] += a * x.acc[0];
        self.acc[1] += a * x.acc[1];
    }

    fn error_sq(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize) {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = atol + rtol * y0.psi[i].norm().max(y1.psi[i].norm());
            acc += (err.psi[i].norm() / scale).powi(2);
        }
        for i in 0..2 {
            let scale = atol + rtol * y0.acc[i].abs().max(y1.acc[i].abs());
            acc += (err.acc[i] / scale).powi(2);
        }
        (acc, N + 2)
    }
}

struct RawTrajectory<const N: usize> {
    final_state: SVector<C64, N>,
    /// Accumulated observables in seconds.
    acc: [f64; 2],
    samples: Vec<(f64, SVector<C64, N>)>,
    checkpoints: Vec<(f64, SVector<C64, N>)>,
    stats: StepStats,
}

fn uniform_times(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![end],
        _ => (0..n)
            .map(|i| if i + 1 == n { end } else { start + (end - start) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Integrates the model over `[start, end]`, stopping exactly at every
/// breakpoint, sample time, and checkpoint.
#[allow(clippy::too_many_arguments)]
fn evolve<const N: usize, M: Model<N>>(
    model: &M,
    start: f64,
    end: f64,
    breakpoints: &[f64],
    initial: SVector<C64, N>,
    settings: &PropagationSettings,
    omega_ref: f64,
    monitor: &mut dyn FnMut(f64, &SVector<C64, N>),
) -> Result<RawTrajectory<N>> {
    let duration = end - start;
    let sample_times = uniform_times(start, end, settings.samples);
    let checkpoint_times: Vec<f64> =
        (1..=settings.checkpoints).map(|k| start + duration * k as f64 / settings.checkpoints as f64).collect();

    let mut knots: Vec<f64> = breakpoints.iter().copied().filter(|&t| t > start && t < end).collect();
    knots.extend(&sample_times);
    knots.extend(&checkpoint_times);
    knots.push(end);
    knots.sort_by(f64::total_cmp);
    let merge = 1e-12 * duration;
    knots.dedup_by(|a, b| (*a - *b).abs() <= merge);
    knots.retain(|&t| t > start + merge);
    if let Some(last) = knots.last_mut() {
        *last = end;
    }

    let tau_of = |t: f64| (t - start) * omega_ref;
    let time_of = |tau: f64| start + tau / omega_ref;
    let inv_ref = 1.0 / omega_ref;
    let minus_i = C64::new(0.0, -inv_ref);

    let mut y = Aug { psi: initial, acc: [0.0; 2] };
    let mut stats = StepStats::default();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut checkpoints = Vec::with_capacity(checkpoint_times.len());
    let (mut si, mut ci) = (0, 0);
    let mut record = |t: f64, psi: &SVector<C64, N>, si: &mut usize, ci: &mut usize| {
        while *si < sample_times.len() && sample_times[*si] <= t + merge {
            samples.push((sample_times[*si], *psi));
            *si += 1;
        }
        while *ci < checkpoint_times.len() && checkpoint_times[*ci] <= t + merge {
            checkpoints.push((checkpoint_times[*ci], *psi));
            *ci += 1;
        }
    };
    record(start, &y.psi, &mut si, &mut ci);

    let mut h = 0.0;
    let mut tau0: f64 = 0.0;
    for &knot in &knots {
        let tau1 = tau_of(knot);
        match settings.method {
            Method::AdaptiveEmbeddedPair => {
                let opts = OdeOptions {
                    rtol: settings.rel_tol,
                    atol: settings.abs_tol,
                    h_max: settings.max_step * omega_ref,
                    max_steps: settings.max_steps.saturating_sub(stats.accepted + stats.rejected),
                };
                let rhs = |tau: f64, y: &Aug<N>, dy: &mut Aug<N>| {
                    model.apply(time_of(tau), &y.psi, &mut dy.psi);
                    dy.psi *= minus_i;
                    let obs = model.observables(&y.psi);
                    dy.acc = obs;
                };
                y = ode::integrate(rhs, tau0, tau1, y, &mut h, &opts, &mut stats, |tau, y: &Aug<N>| {
                    monitor(time_of(tau), &y.psi)
                })
                .map_err(|f| Error::Integration { t: time_of(f.t), reason: f.reason })?;
            }
            Method::PiecewiseConstantExponential => {
                let h_max = settings.max_step * omega_ref;
                let mut tau = tau0;
                while tau < tau1 {
                    if stats.accepted >= settings.max_steps {
                        return Err(Error::Integration {
                            t: time_of(tau),
                            reason: format!("step budget of {} exhausted", settings.max_steps),
                        });
                    }
                    let h_start = model.matrix(time_of(tau)) * C64::new(inv_ref, 0.0);
                    let norm = one_norm(&h_start).max(f64::MIN_POSITIVE);
                    let mut step = (0.1 / norm).min(h_max);
                    if tau + step >= tau1 {
                        step = tau1 - tau;
                    }
                    let mid = model.matrix(time_of(tau + 0.5 * step)) * C64::new(0.0, -inv_ref * step);
                    let before = model.observables(&y.psi);
                    y.psi = M::expm(mid) * y.psi;
                    let after = model.observables(&y.psi);
                    for k in 0..2 {
                        y.acc[k] += 0.5 * step * (before[k] + after[k]);
                    }
                    tau = if tau + step >= tau1 { tau1 } else { tau + step };
                    stats.accepted += 1;
                    monitor(time_of(tau), &y.psi);
                }
            }
        }
        if y.psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Integration { t: knot, reason: "non-finite amplitudes".into() });
        }
        record(knot, &y.psi, &mut si, &mut ci);
        tau0 = tau1;
    }
    Ok(RawTrajectory {
        final_state: y.psi,
        acc: [y.acc[0] / omega_ref, y.acc[1] / omega_ref],
        samples,
        checkpoints,
        stats,
    })
}

fn one_norm<const N: usize>(m: &SMatrix<C64, N, N>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Reference frequency of the dimensionless time axis.
fn reference_rate(physics: &PhysicsParams) -> f64 {
    if physics.omega_max > 0.0 {
        physics.omega_max
    } else {
        1.0
    }
}

fn fingerprint<S: DriveSchedule + ?Sized>(
    schedule: &S,
    physics: &PhysicsParams,
    offsets: &DriveOffsets,
    settings: &PropagationSettings,
) -> u64 {
    let mut h = DefaultHasher::new();
    schedule.hash_params(&mut h);
    for v in [
        physics.omega_max,
        physics.v_dd,
        physics.gamma_r,
        physics.k_1r,
        physics.mass,
        physics.temperature,
        offsets.delta[0],
        offsets.delta[1],
        offsets.omega[0],
        offsets.omega[1],
        settings.rel_tol,
        settings.abs_tol,
        settings.max_step,
    ] {
        h.write_u64(v.to_bits());
    }
    h.write_u8(settings.method as u8);
    h.finish()
}

/// Amplitudes below this are too small to continue a phase through.
const PHASE_TRACK_FLOOR: f64 = 1e-4;

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Follows `arg ψⱼ(t)` continuously over accepted steps.
struct PhaseTracker {
    index: usize,
    last_arg: f64,
    phase: f64,
    lost: bool,
    history: Vec<(f64, Option<f64>)>,
}

impl PhaseTracker {
    fn new(index: usize, initial: &State9) -> Self {
        let amp = initial[index];
        Self { index, last_arg: amp.arg(), phase: 0.0, lost: amp.norm() < PHASE_TRACK_FLOOR, history: Vec::new() }
    }

    fn update(&mut self, t: f64, psi: &State9) {
        let amp = psi[self.index];
        if amp.norm() < PHASE_TRACK_FLOOR {
            self.lost = true;
        }
        if !self.lost {
            let arg = amp.arg();
            self.phase += wrap_pi(arg - self.last_arg);
            self.last_arg = arg;
        }
        self.history.push((t, self.current()));
    }

    fn current(&self) -> Option<f64> {
        (!self.lost).then_some(self.phase)
    }

    fn at(&self, t: f64) -> Option<f64> {
        match self.history.binary_search_by(|(s, _)| s.total_cmp(&t)) {
            Ok(i) => self.history[i].1,
            Err(0) => Some(0.0),
            Err(i) => self.history[i - 1].1,
        }
    }
}

/// Propagates one initial state of the nine-level system along `schedule`.
pub fn propagate<S: DriveSchedule + ?Sized>(
    schedule: &S,
    offsets: &DriveOffsets,
    physics: &PhysicsParams,
    initial: &InitialState,
    settings: &PropagationSettings,
) -> Result<TrajectoryResult> {
    physics.validate()?;
    offsets.validate()?;
    settings.validate()?;
    let (start, end) = schedule.window();
    if !(end > start) {
        return Err(Error::InvalidInput(format!("empty schedule window [{start}, {end}]")));
    }
    let (psi0, label) = match initial {
        InitialState::Basis(k) => (k.state(), Some(*k)),
        InitialState::Vector(v) => {
            if ((v.norm() - 1.0).abs()) > 1e-10 {
                return Err(Error::InvalidInput(format!("initial state has norm {}", v.norm())));
            }
            (*v, None)
        }
    };
    let model = NineLevel { schedule, offsets: *offsets, physics: *physics };
    let mut tracker = label.map(|k| PhaseTracker::new(k.index(), &psi0));
    let mut monitor = |t: f64, psi: &State9| {
        if let Some(tr) = tracker.as_mut() {
            tr.update(t, psi);
        }
    };
    let raw = evolve(
        &model,
        start,
        end,
        &schedule.breakpoints(),
        psi0,
        settings,
        reference_rate(physics),
        &mut monitor,
    )?;
    let bright = crate::basis::bright_state();
    let population_series = raw
        .samples
        .iter()
        .map(|(t, psi)| PopulationSample {
            t: *t,
            populations: std::array::from_fn(|i| psi[i].norm_sqr()),
            bright: bright.dotc(psi).norm_sqr(),
        })
        .collect();
    let checkpoints = raw
        .checkpoints
        .iter()
        .map(|(t, psi)| Checkpoint {
            t: *t,
            state: *psi,
            tracked_phase: tracker.as_ref().and_then(|tr| tr.at(*t)),
        })
        .collect();
    Ok(TrajectoryResult {
        initial: label,
        final_state: raw.final_state,
        population_series,
        checkpoints,
        t_r: raw.acc[0].max(0.0),
        t_rr: raw.acc[1].max(0.0),
        final_norm: raw.final_state.norm(),
        tracked_phase: tracker.as_ref().and_then(PhaseTracker::current),
        stats: raw.stats,
        fingerprint: fingerprint(schedule, physics, offsets, settings),
    })
}

/// Runs the four computational basis inputs `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn propagate_logical<S: DriveSchedule + ?Sized>(
    schedule: &S,
    offsets: &DriveOffsets,
    physics: &PhysicsParams,
    settings: &PropagationSettings,
) -> Result<Vec<TrajectoryResult>> {
    Ket::logical()
        .into_par_iter()
        .map(|k| propagate(schedule, offsets, physics, &InitialState::Basis(k), settings))
        .collect()
}

/// Projection of a run onto the computational subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalBlock {
    pub matrix: Mat4,
    /// Continuous phases of the diagonal, when every input could be followed.
    pub tracked_phases: Option<[f64; 4]>,
    /// Provenance of the underlying trajectories; 0 for synthetic blocks.
    pub fingerprint: u64,
}

impl LogicalBlock {
    /// A block with no simulation behind it.
    pub fn from_matrix(matrix: Mat4) -> Self {
        Self { matrix, tracked_phases: None, fingerprint: 0 }
    }
}

pub fn logical_block(trajectories: &[TrajectoryResult]) -> Result<LogicalBlock> {
    if trajectories.len() != 4 {
        return Err(Error::Mismatch(format!("expected 4 trajectories, got {}", trajectories.len())));
    }
    let fp = trajectories[0].fingerprint;
    let mut phases = [0.0; 4];
    let mut tracked = true;
    let mut matrix = Mat4::zeros();
    for (j, (traj, want)) in trajectories.iter().zip(Ket::logical()).enumerate() {
        if traj.initial != Some(want) {
            return Err(Error::Mismatch(format!(
                "trajectory {j} starts from {:?}, expected {want}",
                traj.initial.map(|k| k.label())
            )));
        }
        if traj.fingerprint != fp {
            return Err(Error::Mismatch(format!("trajectory {j} was run with different parameters")));
        }
        for (i, &row) in LOGICAL.iter().enumerate() {
            matrix[(i, j)] = traj.final_state[row];
        }
        match traj.tracked_phase {
            Some(p) => phases[j] = p,
            None => tracked = false,
        }
    }
    Ok(LogicalBlock { matrix, tracked_phases: tracked.then_some(phases), fingerprint: fp })
}

/// Symmetric blockaded block `{|11⟩, |b⟩, |rr⟩}` with uniform drive.
fn blockade_block(omega: f64, delta: f64, v_dd: f64) -> Matrix3<f64> {
    let c = std::f64::consts::SQRT_2 * omega / 2.0;
    #[rustfmt::skip]
    let h = Matrix3::new(
        0.0, c,      0.0,
        c,   -delta, c,
        0.0, c,      v_dd - 2.0 * delta,
    );
    h
}

/// Sorted eigenpairs of a real symmetric 3×3 matrix.
fn sorted_eigen(h: Matrix3<f64>) -> ([f64; 3], [nalgebra::Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(h);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    (order.map(|i| eig.eigenvalues[i]), order.map(|i| eig.eigenvectors.column(i).into_owned()))
}

/// Worst-case non-adiabatic coupling `|⟨e|∂ₜg⟩| / (E_e − E_g)` along the
/// schedule, over the blockaded symmetric block. Dimensionless; small values
/// mean the ground-connected dressed state is followed.
pub fn adiabaticity_metric<S: DriveSchedule + ?Sized>(
    schedule: &S,
    physics: &PhysicsParams,
    n_points: usize,
) -> Result<f64> {
    if n_points < 2 {
        return Err(Error::InvalidInput("adiabaticity_metric needs at least 2 points".into()));
    }
    let (start, end) = schedule.window();
    let side = schedule.start_side();
    let fd = 1e-6 * (end - start);
    let state_at = |t: f64| {
        let (omega, delta) = (schedule.omega(t), schedule.delta(t));
        let rr_below = physics.v_dd - 2.0 * delta < 0.0;
        let (values, vectors) = sorted_eigen(blockade_block(omega, delta, physics.v_dd));
        (values, vectors, connected_index(side, 1, rr_below))
    };
    let mut worst: f64 = 0.0;
    for t in uniform_times(start, end, n_points) {
        let (values, vectors, g) = state_at(t);
        let (lo, hi) = ((t - fd).max(start), (t + fd).min(end));
        let (_, v_lo, g_lo) = state_at(lo);
        let (_, v_hi, g_hi) = state_at(hi);
        let align = |v: nalgebra::Vector3<f64>| if v.dot(&vectors[g]) < 0.0 { -v } else { v };
        let dg = (align(v_hi[g_hi]) - align(v_lo[g_lo])) / (hi - lo);
        for k in (0..3).filter(|&k| k != g) {
            let gap = (values[k] - values[g]).abs();
            if gap < 1e-9 * physics.omega_max.max(f64::MIN_POSITIVE) {
                return Err(Error::DegenerateGap { t, gap });
            }
            worst = worst.max(vectors[k].dot(&dg).abs() / gap);
        }
    }
    Ok(worst)
}

/// Momentum offsets and per-atom Rabi deviations for the bright/dark model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BdOffsets {
    pub p_cm: f64,
    pub p_rel: f64,
    /// Rabi offsets δΩᵢ (rad/s), relative to `Ω_max` as in [`DriveOffsets`].
    pub omega: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct BdTrajectory {
    /// Amplitudes over `{|G⟩, |B⟩, |D⟩, |rr⟩}`.
    pub final_state: SVector<C64, 4>,
    pub max_dark_population: f64,
    pub t_r: f64,
    pub t_rr: f64,
    pub stats: StepStats,
}

struct BrightDark<'a, S: ?Sized> {
    schedule: &'a S,
    offsets: BdOffsets,
    physics: PhysicsParams,
}

impl<S: DriveSchedule + ?Sized> BrightDark<'_, S> {
    fn params(&self, t: f64) -> BDModelParams {
        let omega = self.schedule.omega(t);
        let scale = |i: usize| omega * (1.0 + self.offsets.omega[i] / self.physics.omega_max);
        BDModelParams {
            omega_a: scale(0),
            omega_b: scale(1),
            delta: self.schedule.delta(t),
            p_cm: self.offsets.p_cm,
            p_rel: self.offsets.p_rel,
            total_mass: 2.0 * self.physics.mass,
            mass: self.physics.mass,
        }
    }
}

impl<S: DriveSchedule + ?Sized> Model<4> for BrightDark<'_, S> {
    fn apply(&self, t: f64, psi: &SVector<C64, 4>, out: &mut SVector<C64, 4>) {
        *out = self.matrix(t) * psi;
    }

    fn matrix(&self, t: f64) -> Mat4 {
        bd_unchecked(&self.params(t), self.physics.v_dd, self.physics.k_1r)
    }

    fn expm(m: Mat4) -> Mat4 {
        m.exp()
    }

    fn observables(&self, psi: &SVector<C64, 4>) -> [f64; 2] {
        [psi[1].norm_sqr() + psi[2].norm_sqr(), psi[3].norm_sqr()]
    }
}

/// Propagates `|G⟩ = |11⟩` through the momentum-resolved bright/dark model.
pub fn propagate_bd<S: DriveSchedule + ?Sized>(
    schedule: &S,
    offsets: &BdOffsets,
    physics: &PhysicsParams,
    settings: &PropagationSettings,
) -> Result<BdTrajectory> {
    physics.validate()?;
    settings.validate()?;
    if !(physics.mass > 0.0) {
        return Err(Error::InvalidInput("bright/dark model needs a positive mass".into()));
    }
    let model = BrightDark { schedule, offsets: *offsets, physics: *physics };
    let (start, end) = schedule.window();
    let mut initial = SVector::<C64, 4>::zeros();
    initial[0] = C64::new(1.0, 0.0);
    let mut max_dark: f64 = 0.0;
    let mut monitor = |_t: f64, psi: &SVector<C64, 4>| max_dark = max_dark.max(psi[2].norm_sqr());
    let raw = evolve(
        &model,
        start,
        end,
        &schedule.breakpoints(),
        initial,
        settings,
        reference_rate(physics),
        &mut monitor,
    )?;
    let sampled = raw.samples.iter().map(|(_, psi)| psi[2].norm_sqr()).fold(0.0, f64::max);
    Ok(BdTrajectory {
        final_state: raw.final_state,
        max_dark_population: max_dark.max(sampled),
        t_r: raw.acc[0],
        t_rr: raw.acc[1],
        stats: raw.stats,
    })
}
