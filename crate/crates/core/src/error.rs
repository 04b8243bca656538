use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time {t:.6e} s outside schedule window [{start:.6e}, {end:.6e}]")]
    OutsideWindow { t: f64, start: f64, end: f64 },

    #[error("quadrature did not converge: error estimate {estimate:.3e} exceeds {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("integration failed at t = {t:.6e} s: {reason}")]
    Integration { t: f64, reason: String },

    #[error("mismatched run metadata: {0}")]
    Mismatch(String),

    #[error("angle extraction failed: {0}")]
    Extraction(String),

    #[error("degenerate gap ({gap:.3e} rad/s) at t = {t:.6e} s")]
    DegenerateGap { t: f64, gap: f64 },

    #[error("calibration failed: {0}")]
    Calibration(#[from] CalibrationFailure),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationFailure {
    #[error("template does not bracket the target: zero-hold twist {zero_hold:.6} rad already exceeds target {target:.6} rad")]
    NonBracketing { zero_hold: f64, target: f64 },

    #[error("adiabaticity metric {metric:.4} above guard {guard:.4}")]
    GuardViolation { metric: f64, guard: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e} rad)")]
    IterationsExhausted { iterations: usize, residual: f64 },

    #[error("plateau entangling energy vanishes")]
    VanishingKappa,
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::OutsideWindow { .. })
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value < 0.0 {
        return Err(Error::InvalidInput(format!("{name} must be >= 0, got {value}")));
    }
    Ok(())
}
