//! Exact-size 2×2 complex Hermitian algebra.
//!
//! Every operator in the toolkit is a qubit operator, so eigenvalues and
//! projections are done in closed form. Internally an operator is also
//! available in Pauli coordinates `h = c0·I + c1·σ1 + c2·σ2 + c3·σ3`, in which
//! positivity reads `c0 ≥ |(c1, c2, c3)|`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Complex scalar used throughout the crate.
pub type ComplexScalar = Complex64;

/// Default tolerance for positivity checks where none is given.
pub const PSD_TOL: f64 = 1e-9;

/// Trace tolerance for [`DensityMatrix2`].
pub const TRACE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A 2×2 Hermitian matrix. `m10` is implied as `conj(m01)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator2 {
    pub m00: f64,
    pub m11: f64,
    pub m01: ComplexScalar,
}

impl HermitianOperator2 {
    pub const ZERO: Self = Self {
        m00: 0.0,
        m11: 0.0,
        m01: ZERO,
    };

    pub const IDENTITY: Self = Self {
        m00: 1.0,
        m11: 1.0,
        m01: ZERO,
    };

    /// Validating constructor; rejects NaN/Inf entries.
    pub fn new(m00: f64, m11: f64, m01: ComplexScalar) -> Result<Self> {
        let h = Self { m00, m11, m01 };
        h.validate()?;
        Ok(h)
    }

    pub fn diag(m00: f64, m11: f64) -> Self {
        Self {
            m00,
            m11,
            m01: ZERO,
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            m00: 0.0,
            m11: 0.0,
            m01: Complex64::new(1.0, 0.0),
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            m00: 0.0,
            m11: 0.0,
            m01: Complex64::new(0.0, -1.0),
        }
    }

    pub fn pauli_z() -> Self {
        Self::diag(1.0, -1.0)
    }

    /// Builds `c0·I + c1·σ1 + c2·σ2 + c3·σ3`.
    pub fn from_pauli(c: [f64; 4]) -> Self {
        Self {
            m00: c[0] + c[3],
            m11: c[0] - c[3],
            m01: Complex64::new(c[1], -c[2]),
        }
    }

    /// Inverse of [`from_pauli`](Self::from_pauli).
    pub fn pauli_coords(&self) -> [f64; 4] {
        [
            0.5 * (self.m00 + self.m11),
            self.m01.re,
            -self.m01.im,
            0.5 * (self.m00 - self.m11),
        ]
    }

    /// Projector `|ψ⟩⟨ψ|` (not normalized if ψ is not).
    pub fn projector(psi: &Ket2) -> Self {
        Self {
            m00: psi.h.norm_sqr(),
            m11: psi.v.norm_sqr(),
            m01: psi.h * psi.v.conj(),
        }
    }

    pub fn m10(&self) -> ComplexScalar {
        self.m01.conj()
    }

    pub fn is_finite(&self) -> bool {
        self.m00.is_finite()
            && self.m11.is_finite()
            && self.m01.re.is_finite()
            && self.m01.im.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite("Hermitian operator"))
        }
    }

    pub fn trace(&self) -> f64 {
        self.m00 + self.m11
    }

    pub fn det(&self) -> f64 {
        self.m00 * self.m11 - self.m01.norm_sqr()
    }

    /// `tr(self · other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.m00 * other.m00 + self.m11 * other.m11 + 2.0 * (self.m01 * other.m10()).re
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.m00 * self.m00 + self.m11 * self.m11 + 2.0 * self.m01.norm_sqr()).sqrt()
    }

    /// Row-major dense view.
    pub fn to_matrix(&self) -> [[ComplexScalar; 2]; 2] {
        [
            [Complex64::new(self.m00, 0.0), self.m01],
            [self.m10(), Complex64::new(self.m11, 0.0)],
        ]
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Unitary2) -> Self {
        let m = self.to_matrix();
        let a = &u.m;
        // (U M U†)_{ij} = Σ_kl U_ik M_kl conj(U_jl)
        let entry = |i: usize, j: usize| {
            let mut acc = ZERO;
            for k in 0..2 {
                for l in 0..2 {
                    acc += a[i][k] * m[k][l] * a[j][l].conj();
                }
            }
            acc
        };
        Self {
            m00: entry(0, 0).re,
            m11: entry(1, 1).re,
            m01: entry(0, 1),
        }
    }

    /// `⟨ψ|self|ψ⟩`.
    pub fn expectation_in(&self, psi: &Ket2) -> f64 {
        self.m00 * psi.h.norm_sqr()
            + self.m11 * psi.v.norm_sqr()
            + 2.0 * (psi.h.conj() * self.m01 * psi.v).re
    }

    /// Descending eigenvalues, see [`eig2`]. The one of smaller magnitude
    /// comes from the determinant, which avoids cancellation near rank one.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_trace = 0.5 * (self.m00 + self.m11);
        let radius = (0.5 * (self.m00 - self.m11)).hypot(self.m01.norm());
        if half_trace >= 0.0 {
            let hi = half_trace + radius;
            let lo = if hi > 0.0 { self.det() / hi } else { 0.0 };
            (hi, lo.min(hi))
        } else {
            let lo = half_trace - radius;
            (self.det() / lo, lo)
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    /// `f(self)` through the spectral decomposition.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let c = self.pauli_coords();
        let r = (c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
        let (hi, lo) = self.eigenvalues();
        let (hi, lo) = (f(hi), f(lo));
        let k = if r > 0.0 { 0.5 * (hi - lo) / r } else { 0.0 };
        Self::from_pauli([0.5 * (hi + lo), k * c[1], k * c[2], k * c[3]])
    }

    /// `a · self · a` for Hermitian `a`.
    pub fn congruence(&self, a: &Self) -> Self {
        let m = self.to_matrix();
        let a = a.to_matrix();
        let entry = |i: usize, j: usize| {
            let mut acc = ZERO;
            for k in 0..2 {
                for l in 0..2 {
                    acc += a[i][k] * m[k][l] * a[l][j];
                }
            }
            acc
        };
        Self {
            m00: entry(0, 0).re,
            m11: entry(1, 1).re,
            m01: entry(0, 1),
        }
    }
}

impl Add for HermitianOperator2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            m00: self.m00 + rhs.m00,
            m11: self.m11 + rhs.m11,
            m01: self.m01 + rhs.m01,
        }
    }
}

impl Sub for HermitianOperator2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            m00: self.m00 - rhs.m00,
            m11: self.m11 - rhs.m11,
            m01: self.m01 - rhs.m01,
        }
    }
}

impl Neg for HermitianOperator2 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for HermitianOperator2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self {
            m00: self.m00 * rhs,
            m11: self.m11 * rhs,
            m01: self.m01 * rhs,
        }
    }
}

impl std::iter::Sum for HermitianOperator2 {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

/// Pure qubit state in the {|H⟩, |V⟩} basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ket2 {
    pub h: ComplexScalar,
    pub v: ComplexScalar,
}

impl Ket2 {
    pub const fn new(h: ComplexScalar, v: ComplexScalar) -> Self {
        Self { h, v }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket2) -> ComplexScalar {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    pub fn apply(&self, u: &Unitary2) -> Ket2 {
        Ket2 {
            h: u.m[0][0] * self.h + u.m[0][1] * self.v,
            v: u.m[1][0] * self.h + u.m[1][1] * self.v,
        }
    }
}

/// 2×2 unitary, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2 {
    pub m: [[ComplexScalar; 2]; 2],
}

impl Unitary2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            m: [[one, ZERO], [ZERO, one]],
        }
    }

    pub fn from_real(r: [[f64; 2]; 2]) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self {
            m: [[c(r[0][0]), c(r[0][1])], [c(r[1][0]), c(r[1][1])]],
        }
    }

    /// `exp(-i φ σ3 / 2)`: rotates Bloch vectors by φ about z.
    pub fn z_rotation(phi: f64) -> Self {
        Self {
            m: [
                [Complex64::from_polar(1.0, -0.5 * phi), ZERO],
                [ZERO, Complex64::from_polar(1.0, 0.5 * phi)],
            ],
        }
    }

    /// SU(2) element from Euler-like parameters; covers the whole group.
    pub fn from_angles(alpha: f64, beta: f64, gamma: f64) -> Self {
        let (s, c) = (0.5 * beta).sin_cos();
        let a = Complex64::from_polar(c, 0.5 * (alpha + gamma));
        let b = Complex64::from_polar(s, 0.5 * (alpha - gamma));
        Self {
            m: [[a, -b.conj()], [b, a.conj()]],
        }
    }

    pub fn mul(&self, other: &Unitary2) -> Unitary2 {
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.m[i][0] * other.m[0][j] + self.m[i][1] * other.m[1][j];
            }
        }
        Unitary2 { m }
    }

    pub fn adjoint(&self) -> Unitary2 {
        Unitary2 {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }
}

/// Unit-trace positive semidefinite operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix2 {
    op: HermitianOperator2,
}

impl DensityMatrix2 {
    pub fn new(op: HermitianOperator2) -> Result<Self> {
        op.validate()?;
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        let min = op.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotDensityMatrix(format!("minimum eigenvalue {min}")));
        }
        Ok(Self { op })
    }

    pub(crate) fn new_unchecked(op: HermitianOperator2) -> Self {
        Self { op }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            op: HermitianOperator2::diag(0.5, 0.5),
        }
    }

    pub fn pure(psi: &Ket2) -> Result<Self> {
        check_normalized(psi)?;
        Self::new(HermitianOperator2::projector(psi))
    }

    pub fn op(&self) -> &HermitianOperator2 {
        &self.op
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op)
    }
}

fn check_normalized(psi: &Ket2) -> Result<()> {
    let n = psi.norm_sqr();
    if !n.is_finite() {
        return Err(Error::NonFinite("state vector"));
    }
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

/// Eigenvalues of a 2×2 Hermitian matrix, largest first.
pub fn eig2(h: &HermitianOperator2) -> Result<(f64, f64)> {
    h.validate()?;
    Ok(h.eigenvalues())
}

/// `true` iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(h: &HermitianOperator2, tol: f64) -> Result<bool> {
    ensure_finite(tol, "tolerance")?;
    if tol < 0.0 {
        return Err(Error::InvalidArgument(format!("negative tolerance {tol}")));
    }
    h.validate()?;
    Ok(h.min_eigenvalue() >= -tol)
}

/// Physicality repair: clip negative eigenvalues to zero in the eigenbasis of
/// `h`, then rescale to unit trace.
pub fn nearest_density(h: &HermitianOperator2) -> Result<DensityMatrix2> {
    h.validate()?;
    let [c0, c1, c2, c3] = h.pauli_coords();
    if c0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "nearest_density needs positive trace, got {}",
            2.0 * c0
        )));
    }
    let radius = c1.hypot(c2).hypot(c3);
    // eigenvalues c0 ± radius; only the lower one can be negative
    let op = if radius <= c0 {
        HermitianOperator2::from_pauli([0.5, 0.5 * c1 / c0, 0.5 * c2 / c0, 0.5 * c3 / c0])
    } else {
        HermitianOperator2::from_pauli([
            0.5,
            0.5 * c1 / radius,
            0.5 * c2 / radius,
            0.5 * c3 / radius,
        ])
    };
    Ok(DensityMatrix2::new_unchecked(op))
}

/// `⟨ψ|ρ|ψ⟩` for a normalized pure state.
pub fn fidelity_pure(psi: &Ket2, rho: &DensityMatrix2) -> Result<f64> {
    check_normalized(psi)?;
    Ok(rho.op.expectation_in(psi).clamp(0.0, 1.0))
}
