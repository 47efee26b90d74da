//! The damping/rotation channel between Alice and Bob, plus the measured
//! setup imperfections.
//!
//! Time is dimensionless throughout (`t̃ = γ·t_B`). The inner map relaxes the
//! V population, `ρ11 → ρ11·e^{-t̃}`, `ρ01 → ρ01·e^{-t̃/2}`, and the result is
//! conjugated by `R(4t̃)` when the rotation is enabled.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{DensityMatrix2, HermitianOperator2, Unitary2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    /// Damping constant in s⁻¹; only used for unit conversion.
    pub gamma: f64,
    pub rotation_enabled: bool,
    /// Extra off-diagonal decay rate per unit of dimensionless time.
    pub extra_dephasing_rate: f64,
    /// Rotation about z at Bob's analyzer, degrees.
    pub analyzer_rotation_deg: f64,
    /// T(H)/T(V).
    pub pdl_ratio: f64,
    pub tech_transmissivity: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            gamma: 2e7,
            rotation_enabled: true,
            extra_dephasing_rate: 0.05,
            analyzer_rotation_deg: 7.0,
            pdl_ratio: 0.96,
            tech_transmissivity: 0.10,
        }
    }
}

impl ChannelParams {
    /// Bare relaxation, no rotation, no imperfection parameters in effect.
    pub fn ideal_without_rotation() -> Self {
        Self {
            rotation_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.gamma, "gamma")?;
        ensure_finite(self.extra_dephasing_rate, "extra dephasing rate")?;
        ensure_finite(self.analyzer_rotation_deg, "analyzer rotation")?;
        ensure_finite(self.pdl_ratio, "PDL ratio")?;
        ensure_finite(self.tech_transmissivity, "technical transmissivity")?;
        if self.gamma <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.extra_dephasing_rate < 0.0 {
            return Err(Error::InvalidArgument(
                "extra dephasing rate must be nonnegative".into(),
            ));
        }
        if !(self.pdl_ratio > 0.0 && self.pdl_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "PDL ratio {} outside (0, 1]",
                self.pdl_ratio
            )));
        }
        if !(self.tech_transmissivity > 0.0 && self.tech_transmissivity <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "technical transmissivity {} outside (0, 1]",
                self.tech_transmissivity
            )));
        }
        Ok(())
    }

    /// Overall transmissivity for a photon in state `rho`, relative to an
    /// unfiltered V photon. Only affects count rates.
    pub fn transmissivity(&self, rho: &HermitianOperator2) -> f64 {
        self.tech_transmissivity * (self.pdl_ratio * rho.m00 + rho.m11)
    }
}

/// `t̃ = γ·t_B`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DimensionlessTime(f64);

impl DimensionlessTime {
    pub const ZERO: Self = Self(0.0);

    pub fn new(t: f64) -> Result<Self> {
        ensure_finite(t, "time")?;
        if t < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time must be nonnegative, got {t}"
            )));
        }
        Ok(Self(t))
    }

    /// `t̃ = -ln τ` for filter transmittance `τ ∈ (0, 1]`.
    pub fn from_tau(tau: f64) -> Result<Self> {
        ensure_finite(tau, "transmittance")?;
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "transmittance {tau} outside (0, 1]"
            )));
        }
        // -ln(1) is -0.0; normalize the sign
        Ok(Self((-tau.ln()).max(0.0)))
    }

    pub fn from_seconds(t_b: f64, gamma: f64) -> Result<Self> {
        ensure_finite(gamma, "gamma")?;
        if gamma <= 0.0 {
            return Err(Error::InvalidArgument("gamma must be positive".into()));
        }
        Self::new(t_b * gamma)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `τ = e^{-t̃}`.
    pub fn tau(self) -> f64 {
        (-self.0).exp()
    }

    pub fn seconds(self, gamma: f64) -> f64 {
        self.0 / gamma
    }
}

/// `R(θ) = I cos θ + i σ2 sin θ = [[cos θ, sin θ], [-sin θ, cos θ]]`.
pub fn rotation_r(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, s], [-s, c]]
}

/// Linear, trace-preserving form of the inner relaxation map, valid for
/// subnormalized operators: `m00 → tr(h) - m11·e^{-t}`.
fn relax(h: &HermitianOperator2, t: f64, offdiag_extra: f64) -> HermitianOperator2 {
    let decay = (-t).exp();
    let m11 = h.m11 * decay;
    HermitianOperator2 {
        m00: h.trace() - m11,
        m11,
        m01: h.m01 * ((-0.5 * t).exp() * offdiag_extra),
    }
}

/// Unitary applied after the relaxation: `R(4t̃)`, then the analyzer rotation.
pub fn post_rotation(
    t: DimensionlessTime,
    params: &ChannelParams,
    imperfections: bool,
) -> Unitary2 {
    let mut u = Unitary2::identity();
    if params.rotation_enabled {
        u = Unitary2::from_real(rotation_r(4.0 * t.value()));
    }
    if imperfections {
        u = Unitary2::z_rotation(params.analyzer_rotation_deg.to_radians()).mul(&u);
    }
    u
}

fn extra_dephasing(t: DimensionlessTime, params: &ChannelParams, imperfections: bool) -> f64 {
    if imperfections {
        (-params.extra_dephasing_rate * t.value()).exp()
    } else {
        1.0
    }
}

/// Channel action on any Hermitian operator (linear, trace preserving).
pub fn evolve_operator(
    h: &HermitianOperator2,
    t: DimensionlessTime,
    params: &ChannelParams,
    imperfections: bool,
) -> HermitianOperator2 {
    let relaxed = relax(h, t.value(), extra_dephasing(t, params, imperfections));
    if !params.rotation_enabled && !imperfections {
        return relaxed;
    }
    relaxed.conjugate_by(&post_rotation(t, params, imperfections))
}

/// State Bob receives at time `t̃` for input `rho_in`.
pub fn evolve(
    rho_in: &DensityMatrix2,
    t: DimensionlessTime,
    params: &ChannelParams,
    imperfections: bool,
) -> Result<DensityMatrix2> {
    params.validate()?;
    DensityMatrix2::new(evolve_operator(rho_in.op(), t, params, imperfections))
}

/// Photon-level decomposition of the channel: the V component meets a filter
/// of transmittance `τ`; an erased photon is counted by Bob as `R(4t̃)|H⟩`.
/// The mixture `p_erase·erased + (1 - p_erase)·passed` equals [`evolve`].
#[derive(Clone, Copy, Debug)]
pub struct ChannelBranches {
    pub p_erase: f64,
    pub erased: DensityMatrix2,
    pub passed: DensityMatrix2,
}

pub fn branch_decomposition(
    rho_in: &DensityMatrix2,
    t: DimensionlessTime,
    params: &ChannelParams,
    imperfections: bool,
) -> Result<ChannelBranches> {
    params.validate()?;
    let tau = t.tau();
    let rho = rho_in.op();
    let p_erase = ((1.0 - tau) * rho.m11).clamp(0.0, 1.0);
    let u = post_rotation(t, params, imperfections);

    let erased = HermitianOperator2::diag(1.0, 0.0).conjugate_by(&u);

    let pass_norm = rho.m00 + tau * rho.m11;
    let passed = if pass_norm > 0.0 {
        let filtered = HermitianOperator2 {
            m00: rho.m00 / pass_norm,
            m11: tau * rho.m11 / pass_norm,
            m01: rho.m01 * (tau.sqrt() * extra_dephasing(t, params, imperfections) / pass_norm),
        };
        filtered.conjugate_by(&u)
    } else {
        // nothing passes; the branch has zero weight
        erased
    };

    Ok(ChannelBranches {
        p_erase,
        erased: DensityMatrix2::new(erased)?,
        passed: DensityMatrix2::new(passed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{density_from_bloch, pauli_eigenstate, BlochVector, Outcome, PauliAxis};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, LN_2};

    fn t(x: f64) -> DimensionlessTime {
        DimensionlessTime::new(x).unwrap()
    }

    fn close(a: &HermitianOperator2, b: &HermitianOperator2, tol: f64) -> bool {
        (*a - *b).frobenius_norm() <= tol
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_r(0.0), [[1.0, 0.0], [-0.0, 1.0]]);
        let r = rotation_r(FRAC_PI_2);
        assert_abs_diff_eq!(r[0][0], 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(r[0][1], 1.0);
        assert_abs_diff_eq!(r[1][0], -1.0);
        for th in [0.3, 1.7, -2.2] {
            let a = rotation_r(th);
            let b = rotation_r(-th);
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            assert_abs_diff_eq!(det, 1.0, epsilon = 1e-12);
            for i in 0..2 {
                for j in 0..2 {
                    let p = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                    assert_abs_diff_eq!(p, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn rotation_matches_identity_cos_plus_i_sigma2_sin() {
        // i·σ2 = [[0, 1], [-1, 0]]
        let th = 0.77;
        let r = rotation_r(th);
        assert_abs_diff_eq!(r[0][1], th.sin());
        assert_abs_diff_eq!(r[1][0], -th.sin());
    }

    #[test]
    fn evolve_examples() {
        let params = ChannelParams::ideal_without_rotation();
        let v = DensityMatrix2::pure(&pauli_eigenstate(PauliAxis::Z, Outcome::Minus)).unwrap();
        let out = evolve(&v, t(LN_2), &params, false).unwrap();
        assert!(close(out.op(), &HermitianOperator2::diag(0.5, 0.5), 1e-15));

        let plus = DensityMatrix2::pure(&pauli_eigenstate(PauliAxis::X, Outcome::Plus)).unwrap();
        let out = evolve(&plus, t(2.0 * LN_2), &params, false).unwrap();
        let expect = HermitianOperator2 {
            m00: 7.0 / 8.0,
            m11: 1.0 / 8.0,
            m01: Complex64::new(0.25, 0.0),
        };
        assert!(close(out.op(), &expect, 1e-15));

        let out = evolve(&plus, t(80.0), &params, false).unwrap();
        assert!(close(out.op(), &HermitianOperator2::diag(1.0, 0.0), 1e-12));
    }

    #[test]
    fn zero_time_is_identity() {
        let rho = density_from_bloch(&BlochVector::new(0.3, -0.4, 0.5)).unwrap();
        for (rot, imp) in [(false, false), (true, false), (true, true), (false, true)] {
            let params = ChannelParams {
                rotation_enabled: rot,
                analyzer_rotation_deg: 0.0,
                ..ChannelParams::default()
            };
            let out = evolve(&rho, DimensionlessTime::ZERO, &params, imp).unwrap();
            assert!(close(out.op(), rho.op(), 1e-15));
        }
    }

    #[test]
    fn rotation_at_quarter_turn_maps_h_to_v() {
        let params = ChannelParams {
            rotation_enabled: true,
            ..ChannelParams::default()
        };
        // 4t = π/2 with no damping visible on |H⟩ (fixed point of the inner map)
        let h = DensityMatrix2::pure(&pauli_eigenstate(PauliAxis::Z, Outcome::Plus)).unwrap();
        let out = evolve(&h, t(FRAC_PI_2 / 4.0), &params, false).unwrap();
        assert!(close(out.op(), &HermitianOperator2::diag(0.0, 1.0), 1e-15));
    }

    #[test]
    fn imperfections_dephase_and_rotate() {
        let params = ChannelParams {
            rotation_enabled: false,
            extra_dephasing_rate: 0.05,
            analyzer_rotation_deg: 90.0,
            ..ChannelParams::default()
        };
        let plus = DensityMatrix2::pure(&pauli_eigenstate(PauliAxis::X, Outcome::Plus)).unwrap();
        let out = evolve(&plus, t(1.0), &params, true).unwrap();
        let v = crate::states::bloch_vector(&out);
        let expected = (-0.5f64).exp() * (-0.05f64).exp();
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(v.z, 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn tau_conversion() {
        assert_eq!(DimensionlessTime::from_tau(1.0).unwrap().value(), 0.0);
        assert_abs_diff_eq!(
            DimensionlessTime::from_tau((-1.0f64).exp())
                .unwrap()
                .value(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(t(2.0).tau(), 0.1353352832366127, epsilon = 1e-15);
        assert!(DimensionlessTime::from_tau(0.0).is_err());
        assert!(DimensionlessTime::from_tau(-0.5).is_err());
        assert!(DimensionlessTime::from_tau(1.5).is_err());
        assert!(DimensionlessTime::new(-1.0).is_err());
        assert_abs_diff_eq!(
            DimensionlessTime::from_seconds(50e-9, 2e7).unwrap().value(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn branches_mix_back_to_evolved_state() {
        let rho = density_from_bloch(&BlochVector::new(0.2, -0.5, -0.6)).unwrap();
        for imp in [false, true] {
            for x in [0.0, 0.3, 1.1, 4.0] {
                let params = ChannelParams::default();
                let b = branch_decomposition(&rho, t(x), &params, imp).unwrap();
                let mix = *b.erased.op() * b.p_erase + *b.passed.op() * (1.0 - b.p_erase);
                let direct = evolve(&rho, t(x), &params, imp).unwrap();
                assert!(close(&mix, direct.op(), 1e-14), "t={x} imp={imp}");
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::default().validate().is_ok());
        assert!(ChannelParams {
            gamma: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChannelParams {
            pdl_ratio: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChannelParams {
            extra_dephasing_rate: f64::NAN,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
