//! Pauli eigenstates, Bloch vectors, and Alice's imperfect preparation.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{DensityMatrix2, HermitianOperator2, Ket2};

/// Measurement setting `A_i = σ_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliAxis {
    X = 1,
    Y = 2,
    Z = 3,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(PauliAxis::X),
            2 => Ok(PauliAxis::Y),
            3 => Ok(PauliAxis::Z),
            _ => Err(Error::InvalidArgument(format!(
                "Pauli axis must be 1, 2 or 3, got {i}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Zero-based position, handy for array indexing.
    pub fn slot(self) -> usize {
        self as usize - 1
    }

    /// The first `n` axes.
    pub fn first(n: usize) -> &'static [PauliAxis] {
        &Self::ALL[..n.min(3)]
    }

    pub fn operator(self) -> HermitianOperator2 {
        match self {
            PauliAxis::X => HermitianOperator2::pauli_x(),
            PauliAxis::Y => HermitianOperator2::pauli_y(),
            PauliAxis::Z => HermitianOperator2::pauli_z(),
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl Serialize for PauliAxis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.index())
    }
}

impl<'de> Deserialize<'de> for PauliAxis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let i = u8::deserialize(d)?;
        PauliAxis::from_index(i).map_err(serde::de::Error::custom)
    }
}

/// Measurement outcome `a = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    /// Canonical order: `+1` before `-1`.
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn from_sign(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(Error::InvalidArgument(format!(
                "outcome must be +1 or -1, got {v}"
            ))),
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn slot(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Outcome::from_sign(v).map_err(serde::de::Error::custom)
    }
}

/// Generalized Stokes parameters `(⟨σ1⟩, ⟨σ2⟩, ⟨σ3⟩)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn component(&self, axis: PauliAxis) -> f64 {
        match axis {
            PauliAxis::X => self.x,
            PauliAxis::Y => self.y,
            PauliAxis::Z => self.z,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(k * self.x, k * self.y, k * self.z)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Preparation impurity, modeled as isotropic Bloch shrinking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparationConfig {
    pub shrink_s: f64,
}

impl Default for PreparationConfig {
    fn default() -> Self {
        Self { shrink_s: 0.96 }
    }
}

impl PreparationConfig {
    pub fn new(shrink_s: f64) -> Result<Self> {
        let cfg = Self { shrink_s };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ideal() -> Self {
        Self { shrink_s: 1.0 }
    }

    /// `s = sqrt(2p - 1)` for state purity `p ∈ [1/2, 1]`.
    pub fn from_purity(p: f64) -> Result<Self> {
        ensure_finite(p, "purity")?;
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "purity {p} outside [0.5, 1]"
            )));
        }
        Self::new((2.0 * p - 1.0).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.shrink_s, "shrinking factor")?;
        if !(0.0..=1.0).contains(&self.shrink_s) {
            return Err(Error::InvalidArgument(format!(
                "shrinking factor {} outside [0, 1]",
                self.shrink_s
            )));
        }
        Ok(())
    }
}

/// Eigenstate `|a, A_i⟩` in the {|H⟩, |V⟩} basis; first amplitude real and
/// nonnegative.
pub fn pauli_eigenstate(axis: PauliAxis, a: Outcome) -> Ket2 {
    let r = |x: f64| Complex64::new(x, 0.0);
    let s = FRAC_1_SQRT_2;
    match (axis, a) {
        (PauliAxis::X, Outcome::Plus) => Ket2::new(r(s), r(s)),
        (PauliAxis::X, Outcome::Minus) => Ket2::new(r(s), r(-s)),
        (PauliAxis::Y, Outcome::Plus) => Ket2::new(r(s), Complex64::new(0.0, s)),
        (PauliAxis::Y, Outcome::Minus) => Ket2::new(r(s), Complex64::new(0.0, -s)),
        (PauliAxis::Z, Outcome::Plus) => Ket2::new(r(1.0), r(0.0)),
        (PauliAxis::Z, Outcome::Minus) => Ket2::new(r(0.0), r(1.0)),
    }
}

/// Unit Bloch direction of `|a, A_i⟩`.
pub fn eigenstate_direction(axis: PauliAxis, a: Outcome) -> BlochVector {
    let s = a.sign();
    match axis {
        PauliAxis::X => BlochVector::new(s, 0.0, 0.0),
        PauliAxis::Y => BlochVector::new(0.0, s, 0.0),
        PauliAxis::Z => BlochVector::new(0.0, 0.0, s),
    }
}

/// Bloch vector of any Hermitian operator, `v_i = tr(h σ_i)`.
pub fn bloch_of(h: &HermitianOperator2) -> BlochVector {
    let c = h.pauli_coords();
    BlochVector::new(2.0 * c[1], 2.0 * c[2], 2.0 * c[3])
}

pub fn bloch_vector(rho: &DensityMatrix2) -> BlochVector {
    bloch_of(rho.op())
}

/// `(I + v·σ)/2`; rejects vectors outside the Bloch ball.
pub fn density_from_bloch(v: &BlochVector) -> Result<DensityMatrix2> {
    for c in v.as_array() {
        ensure_finite(c, "Bloch vector")?;
    }
    let n = v.norm();
    if n > 1.0 + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "Bloch vector norm {n} exceeds 1"
        )));
    }
    DensityMatrix2::new(operator_from_bloch(v, 1.0))
}

/// `weight · (I + v·σ)/2` without physicality checks.
pub fn operator_from_bloch(v: &BlochVector, weight: f64) -> HermitianOperator2 {
    HermitianOperator2::from_pauli([
        0.5 * weight,
        0.5 * weight * v.x,
        0.5 * weight * v.y,
        0.5 * weight * v.z,
    ])
}

/// `(I + s·n̂·σ)/2`, where `n̂` is the Bloch direction of `|a, A_i⟩`.
pub fn prepare_with_impurity(
    axis: PauliAxis,
    a: Outcome,
    cfg: &PreparationConfig,
) -> Result<DensityMatrix2> {
    cfg.validate()?;
    let v = eigenstate_direction(axis, a).scaled(cfg.shrink_s);
    Ok(DensityMatrix2::new_unchecked(operator_from_bloch(&v, 1.0)))
}
