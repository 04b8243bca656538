//! Dormand–Prince 5(4) embedded Runge–Kutta pair with FSAL.

/// Vector-space operations needed by the stepper.
pub trait OdeState: Clone {
    fn zeroed(&self) -> Self;
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// Squared scaled error contributions and component count.
    fn error_sq(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeFailure {
    pub t: f64,
    pub reason: String,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn initial_step<S: OdeState>(f0: &S, y0: &S, span: f64, opts: &OdeOptions) -> f64 {
    let (fy, n) = S::error_sq(f0, y0, y0, opts.rtol, opts.atol);
    let d1 = (fy / n as f64).sqrt();
    let h = if d1 > 1e-12 { 0.01 / d1 } else { 1e-3 * span };
    h.min(opts.h_max).min(span)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, updating `h` with the last
/// proposed step so consecutive segments continue smoothly. `on_accept`
/// sees every accepted `(t, y)`.
pub fn integrate<S, F, M>(
    mut f: F,
    t0: f64,
    t1: f64,
    mut y: S,
    h: &mut f64,
    opts: &OdeOptions,
    stats: &mut StepStats,
    mut on_accept: M,
) -> Result<S, OdeFailure>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
    M: FnMut(f64, &S),
{
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y);
    }
    let mut k: [S; 7] = std::array::from_fn(|_| y.zeroed());
    f(t0, &y, &mut k[0]);
    stats.evaluations += 1;
    if !(*h > 0.0) || !h.is_finite() {
        *h = initial_step(&k[0], &y, span, opts);
    }
    let mut t = t0;
    let mut stage = y.zeroed();
    let mut err = y.zeroed();
    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(OdeFailure { t, reason: format!("step budget of {} exhausted", opts.max_steps) });
        }
        steps += 1;
        let mut step = h.min(opts.h_max);
        let last = t + step >= t1 || t1 - (t + step) < 1e-12 * span;
        if last {
            step = t1 - t;
        }
        if step <= 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(OdeFailure { t, reason: format!("step size underflow (h = {step:.3e})") });
        }
        for s in 1..7 {
            stage.clone_from(&y);
            for (j, a) in A[s].iter().enumerate() {
                if *a != 0.0 {
                    stage.axpy(step * a, &k[j]);
                }
            }
            f(t + C[s] * step, &stage, &mut k[s]);
        }
        stats.evaluations += 6;
        // Stage 7 was evaluated at the fifth-order solution, which `stage` now holds.
        err = err.zeroed();
        for (j, e) in E.iter().enumerate() {
            if *e != 0.0 {
                err.axpy(step * e, &k[j]);
            }
        }
        let (sq, n) = S::error_sq(&err, &y, &stage, opts.rtol, opts.atol);
        let norm = (sq / n as f64).sqrt();
        if !norm.is_finite() {
            return Err(OdeFailure { t, reason: "non-finite error estimate".into() });
        }
        let factor = if norm == 0.0 { MAX_FACTOR } else { (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
        if norm <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + step };
            std::mem::swap(&mut y, &mut stage);
            let (first, rest) = k.split_at_mut(1);
            std::mem::swap(&mut first[0], &mut rest[5]);
            on_accept(t, &y);
            // Do not let the clipped final step shrink the carried step size.
            if !last || step >= *h {
                *h = step * factor;
            }
        } else {
            stats.rejected += 1;
            *h = step * factor.min(1.0);
        }
    }
    Ok(y)
}
