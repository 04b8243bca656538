//! Fixed two-atom basis over the single-atom levels {0, 1, r}.
//!
//! Index of `|ab⟩` is `3 * a + b` with atom α first, giving the order
//! `|00⟩, |01⟩, |0r⟩, |10⟩, |11⟩, |1r⟩, |r0⟩, |r1⟩, |rr⟩`.

use std::fmt;

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type Mat3 = Matrix3<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Mat9 = SMatrix<C64, 9, 9>;
pub type State9 = SVector<C64, 9>;

pub const DIM: usize = 9;

/// Basis indices of the computational subspace `|00⟩, |01⟩, |10⟩, |11⟩`.
pub const LOGICAL: [usize; 4] = [0, 1, 3, 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Zero,
    One,
    Rydberg,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Zero, Level::One, Level::Rydberg];

    pub fn index(self) -> usize {
        match self {
            Level::Zero => 0,
            Level::One => 1,
            Level::Rydberg => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            Level::Zero => '0',
            Level::One => '1',
            Level::Rydberg => 'r',
        }
    }
}

/// A two-atom product basis state `|a b⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ket {
    pub a: Level,
    pub b: Level,
}

impl Ket {
    pub const fn new(a: Level, b: Level) -> Self {
        Self { a, b }
    }

    pub fn index(self) -> usize {
        3 * self.a.index() + self.b.index()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < DIM).then(|| Self::new(Level::ALL[index / 3], Level::ALL[index % 3]))
    }

    pub fn logical() -> [Ket; 4] {
        LOGICAL.map(|i| Ket::from_index(i).unwrap())
    }

    /// Number of atoms in the Rydberg level.
    pub fn rydberg_count(self) -> usize {
        (self.a == Level::Rydberg) as usize + (self.b == Level::Rydberg) as usize
    }

    pub fn label(self) -> String {
        format!("{}{}", self.a.symbol(), self.b.symbol())
    }

    pub fn state(self) -> State9 {
        let mut v = State9::zeros();
        v[self.index()] = C64::new(1.0, 0.0);
        v
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.label())
    }
}

impl std::str::FromStr for Ket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_start_matches('|').trim_end_matches('⟩').trim_end_matches('>');
        let level = |c: char| match c {
            '0' => Ok(Level::Zero),
            '1' => Ok(Level::One),
            'r' | 'R' => Ok(Level::Rydberg),
            other => Err(format!("unknown level '{other}'")),
        };
        let mut chars = s.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(Ket::new(level(a)?, level(b)?)),
            _ => Err(format!("expected two level symbols, got '{s}'")),
        }
    }
}

/// Symmetric single-excitation state `(|1r⟩ + |r1⟩)/√2`.
pub fn bright_state() -> State9 {
    let mut v = State9::zeros();
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[Ket::new(Level::One, Level::Rydberg).index()] = amp;
    v[Ket::new(Level::Rydberg, Level::One).index()] = amp;
    v
}

/// Antisymmetric single-excitation state `(|1r⟩ − |r1⟩)/√2`.
pub fn dark_state() -> State9 {
    let mut v = State9::zeros();
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[Ket::new(Level::One, Level::Rydberg).index()] = amp;
    v[Ket::new(Level::Rydberg, Level::One).index()] = -amp;
    v
}

/// Populations with exactly one atom in `r`, and with both atoms in `r`.
pub fn rydberg_populations(state: &State9) -> (f64, f64) {
    let mut single = 0.0;
    let mut double = 0.0;
    for (i, amp) in state.iter().enumerate() {
        match Ket::from_index(i).map(Ket::rydberg_count) {
            Some(1) => single += amp.norm_sqr(),
            Some(2) => double += amp.norm_sqr(),
            _ => {}
        }
    }
    (single, double)
}

/// Kronecker product of two 3×3 operators in the fixed basis order.
pub fn kron3(a: &Mat3, b: &Mat3) -> Mat9 {
    Mat9::from_fn(|i, j| a[(i / 3, j / 3)] * b[(i % 3, j % 3)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for i in 0..DIM {
            assert_eq!(Ket::from_index(i).unwrap().index(), i);
        }
        assert!(Ket::from_index(DIM).is_none());
    }

    #[test]
    fn labels_follow_lexicographic_order() {
        let labels: Vec<_> = (0..DIM).map(|i| Ket::from_index(i).unwrap().label()).collect();
        assert_eq!(labels, ["00", "01", "0r", "10", "11", "1r", "r0", "r1", "rr"]);
        assert_eq!("|1r⟩".parse::<Ket>().unwrap().index(), 5);
        assert!("1x".parse::<Ket>().is_err());
    }

    #[test]
    fn bright_and_dark_are_orthonormal() {
        let b = bright_state();
        let d = dark_state();
        assert!((b.norm() - 1.0).abs() < 1e-15);
        assert!(b.dotc(&d).norm() < 1e-15);
    }
}
