//! Collective-spin unitaries, protocol composition, and fidelities.
//!
//! `Ŝ_μ = (σ_μ ⊗ 𝟙 + 𝟙 ⊗ σ_μ)/2` with `σ_z|0⟩ = +|0⟩`, so `|00⟩` has
//! `S_z = +1` and `|11⟩` has `S_z = −1`. Logical order is
//! `|00⟩, |01⟩, |10⟩, |11⟩`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix2, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize, Serializer};

use crate::basis::{Mat4, C64};
use crate::error::{Error, Result};
use crate::propagator::LogicalBlock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ms,
    Cz,
}

impl Protocol {
    /// Twist magnitude each ramp of the protocol must deliver.
    pub fn ramp_target(self) -> f64 {
        match self {
            Protocol::Ms => PI / 2.0,
            Protocol::Cz => PI,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Ms => "ms",
            Protocol::Cz => "cz",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ms" => Ok(Protocol::Ms),
            "cz" => Ok(Protocol::Cz),
            other => Err(format!("unknown protocol '{other}' (expected ms or cz)")),
        }
    }
}

pub fn pauli(axis: Axis) -> Matrix2<C64> {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match axis {
        Axis::X => Matrix2::new(o, l, l, o),
        Axis::Y => Matrix2::new(o, -i, i, o),
        Axis::Z => Matrix2::new(l, o, o, -l),
    }
}

pub fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Mat4 {
    Mat4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

pub fn collective_spin(axis: Axis) -> Mat4 {
    let s = pauli(axis);
    let id = Matrix2::identity();
    (kron2(&s, &id) + kron2(&id, &s)) * C64::new(0.5, 0.0)
}

/// `f(Ŝ_μ)` from the spectral decomposition; eigenvalues are snapped to
/// the exact spectrum `{−1, 0, 0, +1}`.
fn spectral(axis: Axis, f: impl Fn(f64) -> C64) -> Mat4 {
    if axis == Axis::Z {
        return Mat4::from_diagonal(&Vector4::new(f(1.0), f(0.0), f(0.0), f(-1.0)));
    }
    let eig = SymmetricEigen::new(collective_spin(axis));
    let v = eig.eigenvectors;
    let d = Mat4::from_diagonal(&eig.eigenvalues.map(|m| f(m.round())));
    v * d * v.adjoint()
}

/// `exp(−iϑ₁Ŝ_μ − iϑ₂Ŝ_μ²/2)`.
pub fn u_kappa(theta1: f64, theta2: f64, axis: Axis) -> Mat4 {
    spectral(axis, |m| C64::from_polar(1.0, -(theta1 * m + 0.5 * theta2 * m * m)))
}

/// `exp(−iθŜ_μ)`.
pub fn collective_rotation(theta: f64, axis: Axis) -> Mat4 {
    spectral(axis, |m| C64::from_polar(1.0, -theta * m))
}

/// `|tr(U V†)|² / 16`.
pub fn hs_fidelity(u: &Mat4, v: &Mat4) -> f64 {
    (u * v.adjoint()).trace().norm_sqr() / 16.0
}

/// Fidelity of `u_kappa(ϑ₁ + δϑ₁, ϑ₂ + δϑ₂)` against `u_kappa(ϑ₁, ϑ₂)`.
pub fn analytic_fidelity(d_theta1: f64, d_theta2: f64) -> f64 {
    let c1 = d_theta1.cos();
    0.25 * (1.0 + c1 * c1 + 2.0 * c1 * (0.5 * d_theta2).cos())
}

/// Concurrence `2|ad − bc|` of a normalised two-qubit pure state.
pub fn concurrence(state: &Vector4<C64>) -> f64 {
    let n = state.norm_squared();
    2.0 * (state[0] * state[3] - state[1] * state[2]).norm() / n
}

pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub theta1: f64,
    pub theta2: f64,
    pub axis: Axis,
    /// True when the angles come from continuously tracked phases; otherwise
    /// both are reduced to `(−π, π]` and carry a 2π ambiguity.
    pub unwrapped: bool,
}

/// Off-diagonal magnitude above which a block is not treated as diagonal.
pub const EXTRACTION_LEAKAGE_LIMIT: f64 = 0.1;

fn check_diagonal(m: &Mat4) -> Result<()> {
    let worst = (0..4)
        .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm())
        .fold(0.0, f64::max);
    if worst >= EXTRACTION_LEAKAGE_LIMIT {
        return Err(Error::Extraction(format!("off-diagonal magnitude {worst:.3} exceeds {EXTRACTION_LEAKAGE_LIMIT}")));
    }
    if (0..4).any(|i| m[(i, i)].norm() < 1e-8) {
        return Err(Error::Extraction("vanishing diagonal element".into()));
    }
    Ok(())
}

fn angles_from_unwrapped(phases: [f64; 4]) -> AngleSet {
    let [p00, p01, p10, p11] = phases;
    AngleSet { theta1: 0.5 * (p11 - p00), theta2: p01 + p10 - p00 - p11, axis: Axis::Z, unwrapped: true }
}

/// Inverts `u_kappa(ϑ₁, ϑ₂, z)` on a diagonal-dominant block, up to global phase.
pub fn extract_angles_matrix(m: &Mat4) -> Result<AngleSet> {
    check_diagonal(m)?;
    let [p00, p01, p10, p11] = [0, 1, 2, 3].map(|i| m[(i, i)].arg());
    let theta2 = wrap_angle(p01 + p10 - p00 - p11);
    // The |01⟩/|10⟩ phases fix the global phase since S_z vanishes there.
    let reference = p01 + 0.5 * wrap_angle(p10 - p01);
    let theta1 = wrap_angle(p11 - reference + 0.5 * theta2);
    Ok(AngleSet { theta1, theta2, axis: Axis::Z, unwrapped: false })
}

/// As [`extract_angles_matrix`], preferring tracked phases when the block has them.
pub fn extract_angles(block: &LogicalBlock) -> Result<AngleSet> {
    check_diagonal(&block.matrix)?;
    match block.tracked_phases {
        Some(p) => Ok(angles_from_unwrapped(p)),
        None => extract_angles_matrix(&block.matrix),
    }
}

mod matrix_serde {
    use super::*;
    use serde::ser::SerializeSeq;

    /// Row-major rows of `[re, im]` pairs.
    pub fn serialize<S: Serializer>(m: &Mat4, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        for i in 0..4 {
            let row: [[f64; 2]; 4] = std::array::from_fn(|j| [m[(i, j)].re, m[(i, j)].im]);
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Mat4, D::Error> {
        let rows = <[[[f64; 2]; 4]; 4]>::deserialize(d)?;
        Ok(Mat4::from_fn(|i, j| C64::new(rows[i][j][0], rows[i][j][1])))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub protocol: Protocol,
    #[serde(with = "matrix_serde")]
    pub logical: Mat4,
    #[serde(with = "matrix_serde")]
    pub target: Mat4,
    /// Angles of the accumulated diagonal phase (for MS, after undoing the echo).
    pub angles: AngleSet,
    pub fidelity: f64,
    /// Integrated single-Rydberg time per logical input (s).
    pub t_r_by_input: BTreeMap<String, f64>,
    /// Integrated `|rr⟩` time per logical input (s).
    pub t_rr_by_input: BTreeMap<String, f64>,
    /// Mean population left outside the computational subspace.
    pub leakage: f64,
    /// Mean norm lost to decay.
    pub norm_loss: f64,
}

impl GateReport {
    /// Mean column norm² deficit of the logical matrix; equals `leakage + norm_loss`.
    pub fn population_loss(logical: &Mat4) -> f64 {
        1.0 - (0..4).map(|j| logical.column(j).norm_squared()).sum::<f64>() / 4.0
    }

    fn new(protocol: Protocol, logical: Mat4, target: Mat4, angles: AngleSet) -> Self {
        Self {
            protocol,
            fidelity: hs_fidelity(&logical, &target).min(1.0),
            leakage: Self::population_loss(&logical).max(0.0),
            logical,
            target,
            angles,
            t_r_by_input: BTreeMap::new(),
            t_rr_by_input: BTreeMap::new(),
            norm_loss: 0.0,
        }
    }

    /// Splits the total population loss into decay (`norm_loss`) and the rest.
    pub fn with_norm_loss(mut self, norm_loss: f64) -> Self {
        let total = Self::population_loss(&self.logical).max(0.0);
        self.norm_loss = norm_loss.clamp(0.0, total);
        self.leakage = total - self.norm_loss;
        self
    }

    /// MS about y instead of z: conjugation by `exp(−iπŜ_x/2)`.
    pub fn to_y_axis(&self) -> Self {
        let r = collective_rotation(PI / 2.0, Axis::X);
        let logical = r * self.logical * r.adjoint();
        let target = r * self.target * r.adjoint();
        Self {
            fidelity: hs_fidelity(&logical, &target).min(1.0),
            logical,
            target,
            angles: AngleSet { axis: Axis::Y, ..self.angles },
            ..self.clone()
        }
    }
}

/// The echo `exp(−iπŜ_x) = −X⊗X`.
pub fn echo() -> Mat4 {
    collective_rotation(PI, Axis::X)
}

/// Ideal ramp–echo–ramp output: the echo followed by `exp(−i s π Ŝ_z²/2)`.
pub fn ms_target(twist_sign: f64) -> Mat4 {
    echo() * u_kappa(0.0, twist_sign * PI, Axis::Z)
}

/// `u_kappa(−sπ/2, sπ, z) = diag(1, 1, 1, −1)`.
pub fn cz_target(twist_sign: f64) -> Mat4 {
    u_kappa(-twist_sign * PI / 2.0, twist_sign * PI, Axis::Z)
}

/// `|jk⟩ → |j̄k̄⟩` index map of the echo.
const FLIP: [usize; 4] = [3, 2, 1, 0];

/// `ramp₂ · exp(−iπŜ_x) · ramp₁` scored against [`ms_target`].
pub fn compose_ms(ramp1: &LogicalBlock, ramp2: &LogicalBlock, twist_sign: f64) -> Result<GateReport> {
    if ramp1.fingerprint != ramp2.fingerprint {
        return Err(Error::Mismatch("MS ramps come from differently configured runs".into()));
    }
    let e = echo();
    let logical = ramp2.matrix * e * ramp1.matrix;
    let undone = e.adjoint() * logical;
    let angles = match (ramp1.tracked_phases, ramp2.tracked_phases) {
        (Some(a), Some(b)) => {
            check_diagonal(&undone)?;
            angles_from_unwrapped(std::array::from_fn(|j| a[j] + b[FLIP[j]]))
        }
        _ => extract_angles_matrix(&undone)?,
    };
    Ok(GateReport::new(Protocol::Ms, logical, ms_target(twist_sign), angles))
}

/// Removes the fiducial single-atom phase with `exp(−iφŜ_z)` and scores against CZ.
pub fn compose_cz(ramp: &LogicalBlock, fiducial_phi1: f64, twist_sign: f64) -> Result<GateReport> {
    let logical = collective_rotation(fiducial_phi1, Axis::Z) * ramp.matrix;
    let angles = match ramp.tracked_phases {
        Some([p00, p01, p10, p11]) => {
            check_diagonal(&logical)?;
            angles_from_unwrapped([p00 - fiducial_phi1, p01, p10, p11 + fiducial_phi1])
        }
        None => extract_angles_matrix(&logical)?,
    };
    Ok(GateReport::new(Protocol::Cz, logical, cz_target(twist_sign), angles))
}
