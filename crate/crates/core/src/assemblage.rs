//! Temporal assemblages `{σ_{a|A_i}}` and deterministic response strategies.
//!
//! Members are stored subnormalized, `σ_{a|A_i} = P(a|A_i)·ρ_{a|A_i}`, in the
//! canonical order axis 1..N, outcome `+1` before `-1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{evolve_operator, ChannelParams, DimensionlessTime};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix2, HermitianOperator2, Unitary2, PSD_TOL};
use crate::states::{
    bloch_of, prepare_with_impurity, BlochVector, Outcome, PauliAxis, PreparationConfig,
};

/// Tolerance on `Σ_a tr σ_{a|A_i} = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Frobenius tolerance on equality of the reduced states.
pub const REDUCED_STATE_TOL: f64 = 1e-8;

pub(crate) fn check_setting_count(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "number of settings must be 2 or 3, got {n}"
        )))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assemblage {
    n: usize,
    members: Vec<HermitianOperator2>,
}

fn slot(axis: PauliAxis, a: Outcome) -> usize {
    2 * axis.slot() + a.slot()
}

impl Assemblage {
    /// Builds an assemblage from members in canonical order. Shape and
    /// finiteness are checked here; physical consistency is not (see
    /// [`check_consistency`]).
    pub fn from_members(n: usize, members: Vec<HermitianOperator2>) -> Result<Self> {
        check_setting_count(n)?;
        if members.len() != 2 * n {
            return Err(Error::InvalidArgument(format!(
                "{n} settings need {} members, got {}",
                2 * n,
                members.len()
            )));
        }
        for m in &members {
            m.validate()?;
        }
        Ok(Self { n, members })
    }

    /// Builds from a closure over `(axis, outcome)`.
    pub fn from_fn(
        n: usize,
        mut f: impl FnMut(PauliAxis, Outcome) -> HermitianOperator2,
    ) -> Result<Self> {
        check_setting_count(n)?;
        let members = Self::keys_for(n).map(|(i, a)| f(i, a)).collect();
        Self::from_members(n, members)
    }

    pub fn n_measurements(&self) -> usize {
        self.n
    }

    /// The sub-assemblage of the first `n` settings.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        check_setting_count(n)?;
        if n > self.n {
            return Err(Error::InvalidArgument(format!(
                "cannot extend {} settings to {n}",
                self.n
            )));
        }
        Ok(Self {
            n,
            members: self.members[..2 * n].to_vec(),
        })
    }

    pub fn axes(&self) -> &'static [PauliAxis] {
        PauliAxis::first(self.n)
    }

    fn keys_for(n: usize) -> impl Iterator<Item = (PauliAxis, Outcome)> {
        PauliAxis::first(n)
            .iter()
            .flat_map(|&i| Outcome::ALL.into_iter().map(move |a| (i, a)))
    }

    /// `(axis, outcome)` pairs in canonical order.
    pub fn keys(&self) -> impl Iterator<Item = (PauliAxis, Outcome)> {
        Self::keys_for(self.n)
    }

    pub fn members(&self) -> &[HermitianOperator2] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = ((PauliAxis, Outcome), &HermitianOperator2)> {
        self.keys().zip(self.members.iter())
    }

    /// `σ_{a|A_i}`. Panics if the axis is beyond `n_measurements`.
    pub fn member(&self, axis: PauliAxis, a: Outcome) -> &HermitianOperator2 {
        assert!(
            axis.slot() < self.n,
            "axis {axis} not in a {}-setting assemblage",
            self.n
        );
        &self.members[slot(axis, a)]
    }

    /// `P(a|A_i) = tr σ_{a|A_i}`.
    pub fn probability(&self, axis: PauliAxis, a: Outcome) -> f64 {
        self.member(axis, a).trace()
    }

    /// Normalized conditional state `ρ_{a|A_i}`; `None` when the outcome has
    /// zero probability.
    pub fn conditional_state(&self, axis: PauliAxis, a: Outcome) -> Option<HermitianOperator2> {
        let m = self.member(axis, a);
        let p = m.trace();
        (p > 0.0).then(|| *m * (1.0 / p))
    }

    pub fn conditional_bloch(&self, axis: PauliAxis, a: Outcome) -> Option<BlochVector> {
        self.conditional_state(axis, a).map(|r| bloch_of(&r))
    }

    /// `Σ_a σ_{a|A_i}`.
    pub fn reduced_state(&self, axis: PauliAxis) -> HermitianOperator2 {
        Outcome::ALL.iter().map(|&a| *self.member(axis, a)).sum()
    }

    pub fn map_members(
        &self,
        mut f: impl FnMut(&HermitianOperator2) -> HermitianOperator2,
    ) -> Self {
        Self {
            n: self.n,
            members: self.members.iter().map(&mut f).collect(),
        }
    }

    /// Every member conjugated by `u`.
    pub fn conjugated(&self, u: &Unitary2) -> Self {
        self.map_members(|m| m.conjugate_by(u))
    }

    /// `λ·self + (1 - λ)·other`.
    pub fn mix(&self, other: &Assemblage, lambda: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::InvalidArgument(
                "cannot mix assemblages of different sizes".into(),
            ));
        }
        let members = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| *a * lambda + *b * (1.0 - lambda))
            .collect();
        Ok(Self { n: self.n, members })
    }

    /// The trivially unsteerable assemblage `σ_{a|A_i} = P·ρ` with the same
    /// outcome probabilities and a common state `rho`.
    pub fn constant(n: usize, rho: &DensityMatrix2) -> Result<Self> {
        Self::from_fn(n, |_, _| *rho.op() * 0.5)
    }
}

/// `σ_{a|A_i} = ½·prepare_with_impurity(i, a, cfg)` for the first `n` axes.
pub fn initial_assemblage(n: usize, cfg: &PreparationConfig) -> Result<Assemblage> {
    check_setting_count(n)?;
    cfg.validate()?;
    let mut members = Vec::with_capacity(2 * n);
    for &axis in PauliAxis::first(n) {
        for a in Outcome::ALL {
            members.push(*prepare_with_impurity(axis, a, cfg)?.op() * 0.5);
        }
    }
    Assemblage::from_members(n, members)
}

/// Sends every member through the channel. The channel is linear and trace
/// preserving, so probabilities and consistency carry over.
pub fn evolve_assemblage(
    asm: &Assemblage,
    t: DimensionlessTime,
    params: &ChannelParams,
    imperfections: bool,
) -> Result<Assemblage> {
    params.validate()?;
    Ok(asm.map_members(|m| evolve_operator(m, t, params, imperfections)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationSite {
    Positivity { axis: PauliAxis, outcome: Outcome },
    Normalization { axis: PauliAxis },
    ReducedState { axis: PauliAxis },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub tolerance: f64,
    /// Largest violation divided by the tolerance that applies to it;
    /// values ≤ 1 pass.
    pub worst_ratio: f64,
    pub worst_violation: f64,
    pub worst_site: Option<ViolationSite>,
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.worst_site {
            Some(site) => write!(
                f,
                "worst violation {:.3e} at {:?} (tolerance {:.1e})",
                self.worst_violation, site, self.tolerance
            ),
            None => write!(f, "no violation"),
        }
    }
}

/// Checks positivity, per-setting normalization and equality of the reduced
/// states. With `tol = None` the per-invariant defaults apply (1e-9, 1e-9,
/// 1e-8); otherwise `tol` is used for all three.
pub fn check_consistency(asm: &Assemblage, tol: Option<f64>) -> Result<ConsistencyReport> {
    if let Some(t) = tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be finite and ≥ 0, got {t}"
            )));
        }
    }
    let (psd_tol, norm_tol, red_tol) = match tol {
        Some(t) => (t, t, t),
        None => (PSD_TOL, NORMALIZATION_TOL, REDUCED_STATE_TOL),
    };

    let mut worst = (0.0_f64, 0.0_f64, None);
    let mut record = |violation: f64, limit: f64, site: ViolationSite| {
        let ratio = if limit > 0.0 {
            violation / limit
        } else if violation > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > worst.0 || (worst.2.is_none() && violation > 0.0) {
            worst = (ratio, violation, Some(site));
        }
    };

    for ((axis, outcome), m) in asm.iter() {
        let neg = (-m.min_eigenvalue()).max(0.0);
        record(neg, psd_tol, ViolationSite::Positivity { axis, outcome });
    }
    let reference = asm.reduced_state(PauliAxis::X);
    for &axis in asm.axes() {
        let red = asm.reduced_state(axis);
        record(
            (red.trace() - 1.0).abs(),
            norm_tol,
            ViolationSite::Normalization { axis },
        );
        if axis != PauliAxis::X {
            record(
                (red - reference).frobenius_norm(),
                red_tol,
                ViolationSite::ReducedState { axis },
            );
        }
    }

    Ok(ConsistencyReport {
        consistent: worst.0 <= 1.0,
        tolerance: tol.unwrap_or(REDUCED_STATE_TOL),
        worst_ratio: worst.0,
        worst_violation: worst.1,
        worst_site: worst.2,
    })
}

pub(crate) fn require_consistent(asm: &Assemblage, tol: Option<f64>) -> Result<()> {
    let report = check_consistency(asm, tol)?;
    if report.consistent {
        Ok(())
    } else {
        Err(Error::InconsistentAssemblage(report))
    }
}

/// A deterministic response `D_γ(a|A_i)`: one fixed outcome per setting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    pub gamma_id: usize,
    pub assignment: Vec<Outcome>,
}

impl DeterministicStrategy {
    pub fn outcome_for(&self, axis: PauliAxis) -> Outcome {
        self.assignment[axis.slot()]
    }

    /// `D_γ(a|A_i) ∈ {0, 1}`.
    pub fn response(&self, axis: PauliAxis, a: Outcome) -> f64 {
        if self.outcome_for(axis) == a {
            1.0
        } else {
            0.0
        }
    }
}

/// All `2^N` strategies. Binary counting: bit `i-1` of `gamma_id` is the
/// outcome for axis `i`, with 0 ↦ `+1` and 1 ↦ `-1`.
pub fn deterministic_strategies(n: usize) -> Result<Vec<DeterministicStrategy>> {
    check_setting_count(n)?;
    Ok((0..1usize << n)
        .map(|gamma_id| DeterministicStrategy {
            gamma_id,
            assignment: (0..n)
                .map(|bit| {
                    if gamma_id >> bit & 1 == 0 {
                        Outcome::Plus
                    } else {
                        Outcome::Minus
                    }
                })
                .collect(),
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct MemberJson {
    axis: PauliAxis,
    outcome: Outcome,
    /// `[m00, m01, m10, m11]`, each `[re, im]`.
    matrix: [[f64; 2]; 4],
}

#[derive(Serialize, Deserialize)]
struct AssemblageJson {
    n_measurements: usize,
    members: Vec<MemberJson>,
}

impl Serialize for Assemblage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let members = self
            .iter()
            .map(|((axis, outcome), m)| MemberJson {
                axis,
                outcome,
                matrix: [
                    [m.m00, 0.0],
                    [m.m01.re, m.m01.im],
                    [m.m10().re, m.m10().im],
                    [m.m11, 0.0],
                ],
            })
            .collect();
        AssemblageJson {
            n_measurements: self.n,
            members,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Assemblage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = AssemblageJson::deserialize(d)?;
        check_setting_count(raw.n_measurements).map_err(D::Error::custom)?;
        let mut slots: Vec<Option<HermitianOperator2>> = vec![None; 2 * raw.n_measurements];
        for m in raw.members {
            if m.axis.slot() >= raw.n_measurements {
                return Err(D::Error::custom(format!(
                    "member axis {} out of range",
                    m.axis
                )));
            }
            let [a, b, c, e] = m.matrix;
            if a[1].abs() > 1e-12
                || e[1].abs() > 1e-12
                || (b[0] - c[0]).abs() > 1e-12
                || (b[1] + c[1]).abs() > 1e-12
            {
                return Err(D::Error::custom(format!(
                    "member ({}, {}) is not Hermitian",
                    m.axis, m.outcome
                )));
            }
            let op = HermitianOperator2::new(a[0], e[0], num_complex::Complex64::new(b[0], b[1]))
                .map_err(D::Error::custom)?;
            let k = slot(m.axis, m.outcome);
            if slots[k].replace(op).is_some() {
                return Err(D::Error::custom(format!(
                    "duplicate member ({}, {})",
                    m.axis, m.outcome
                )));
            }
        }
        let members = slots
            .into_iter()
            .enumerate()
            .map(|(k, m)| m.ok_or_else(|| D::Error::custom(format!("missing member #{k}"))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Assemblage::from_members(raw.n_measurements, members).map_err(D::Error::custom)
    }
}
