//! Temporal-steering parameter `S_N`, fidelities, QBER and QKD verdicts.

use serde::{Deserialize, Serialize};

use crate::assemblage::{evolve_assemblage, initial_assemblage, require_consistent, Assemblage};
use crate::channel::{ChannelParams, DimensionlessTime};
use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::states::{
    bloch_of, pauli_eigenstate, BlochVector, Outcome, PauliAxis, PreparationConfig,
};

/// Individual-attack QBER threshold for BB84, `(1 - 1/√2)/2`, correctly
/// rounded (both naive f64 evaluations are one ulp off).
pub const R2_BB84: f64 = 0.146_446_609_406_726_24;
/// Individual-attack QBER threshold for the six-state protocol.
pub const R3_B98: f64 = 1.0 / 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "BB84")]
    Bb84,
    #[serde(rename = "B98")]
    B98,
}

impl Protocol {
    pub fn for_settings(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Protocol::Bb84),
            3 => Ok(Protocol::B98),
            _ => Err(Error::InvalidArgument(format!(
                "no protocol uses {n} settings"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84 => "BB84",
            Protocol::B98 => "B98",
        }
    }

    pub fn n(self) -> usize {
        match self {
            Protocol::Bb84 => 2,
            Protocol::B98 => 3,
        }
    }

    /// `r_N`.
    pub fn qber_threshold(self) -> f64 {
        match self {
            Protocol::Bb84 => R2_BB84,
            Protocol::B98 => R3_B98,
        }
    }

    /// `N(1 - 2r_N)²`, which is exactly 1 for BB84 and 4/3 for B98.
    pub fn s_threshold(self) -> f64 {
        match self {
            Protocol::Bb84 => 1.0,
            Protocol::B98 => 4.0 / 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEntry {
    pub axis: PauliAxis,
    pub outcome: Outcome,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringReport {
    pub n: usize,
    pub s_param: f64,
    /// `E[⟨B_i⟩²]` for `i = 1..N`.
    pub per_axis_terms: Vec<f64>,
    pub qber: f64,
    pub fidelities: Vec<FidelityEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityVerdict {
    pub protocol: Protocol,
    pub qber_threshold: f64,
    pub s_threshold: f64,
    pub s_param: f64,
    pub qber: f64,
    /// `S_N > 1`.
    pub ts_violated: bool,
    /// `S_N > N(1 - 2r_N)²`.
    pub exceeds_s_threshold: bool,
    /// `QBER < r_N`.
    pub secure_individual: bool,
}

/// `S_N` with Bob measuring the lab-frame Pauli axes. The assemblage must be
/// consistent at the default tolerances.
pub fn ts_parameter(asm: &Assemblage) -> Result<SteeringReport> {
    ts_parameter_in_frame(asm, &Unitary2::identity(), None)
}

/// Same as [`ts_parameter`] with an explicit consistency tolerance, for
/// assemblages estimated from finite counts.
pub fn ts_parameter_with_tol(asm: &Assemblage, tol: f64) -> Result<SteeringReport> {
    ts_parameter_in_frame(asm, &Unitary2::identity(), Some(tol))
}

/// `S_N` with Bob's observables `B_i = U σ_i U†` and reference states
/// `U|a, A_i⟩`.
pub fn ts_parameter_in_frame(
    asm: &Assemblage,
    frame: &Unitary2,
    tol: Option<f64>,
) -> Result<SteeringReport> {
    require_consistent(asm, tol)?;
    let mut per_axis_terms = Vec::with_capacity(asm.n_measurements());
    let mut fidelities = Vec::with_capacity(2 * asm.n_measurements());
    for &axis in asm.axes() {
        let observable = axis.operator().conjugate_by(frame);
        let mut term = 0.0;
        for a in Outcome::ALL {
            let member = asm.member(axis, a);
            let p = member.trace();
            let reference = pauli_eigenstate(axis, a).apply(frame);
            let fidelity = if p > 0.0 {
                let expectation = member.trace_product(&observable) / p;
                term += p * expectation * expectation;
                (member.expectation_in(&reference) / p).clamp(0.0, 1.0)
            } else {
                // an outcome that never occurs carries no error information
                1.0
            };
            fidelities.push(FidelityEntry {
                axis,
                outcome: a,
                fidelity,
            });
        }
        per_axis_terms.push(term);
    }
    let s_param = per_axis_terms.iter().sum();
    let qber = 1.0 - fidelities.iter().map(|f| f.fidelity).sum::<f64>() / fidelities.len() as f64;
    Ok(SteeringReport {
        n: asm.n_measurements(),
        s_param,
        per_axis_terms,
        qber,
        fidelities,
    })
}

/// `S_N = ½ Σ_i Σ_a (2F_{i,a} - 1)²`, valid for equiprobable preparations.
/// The table must hold exactly one entry per `(axis, outcome)` for axes
/// `1..N`, `N` being the largest axis present.
pub fn ts_parameter_fidelity_form(fidelities: &[FidelityEntry]) -> Result<f64> {
    let n = fidelities
        .iter()
        .map(|f| f.axis.index() as usize)
        .max()
        .unwrap_or(0);
    let mut seen = [[false; 2]; 3];
    for f in fidelities {
        if !f.fidelity.is_finite() {
            return Err(Error::NonFinite("fidelity"));
        }
        let cell = &mut seen[f.axis.slot()][f.outcome.slot()];
        if *cell {
            return Err(Error::InvalidArgument(format!(
                "duplicate fidelity entry ({}, {})",
                f.axis, f.outcome
            )));
        }
        *cell = true;
    }
    let missing: Vec<String> = PauliAxis::first(n.max(2))
        .iter()
        .flat_map(|&i| Outcome::ALL.into_iter().map(move |a| (i, a)))
        .filter(|(i, a)| !seen[i.slot()][a.slot()])
        .map(|(i, a)| format!("({i}, {a})"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "missing fidelity entries {}",
            missing.join(", ")
        )));
    }
    Ok(0.5
        * fidelities
            .iter()
            .map(|f| (2.0 * f.fidelity - 1.0).powi(2))
            .sum::<f64>())
}

pub fn security_verdict(report: &SteeringReport, protocol: Protocol) -> Result<SecurityVerdict> {
    if report.n != protocol.n() {
        return Err(Error::ProtocolMismatch {
            protocol: protocol.name(),
            expected: protocol.n(),
            found: report.n,
        });
    }
    Ok(SecurityVerdict {
        protocol,
        qber_threshold: protocol.qber_threshold(),
        s_threshold: protocol.s_threshold(),
        s_param: report.s_param,
        qber: report.qber,
        ts_violated: report.s_param > 1.0,
        exceeds_s_threshold: report.s_param > protocol.s_threshold(),
        secure_individual: report.qber < protocol.qber_threshold(),
    })
}

/// Bob's Bloch vector for each of the six prepared eigenstates at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StokesEntry {
    pub axis: PauliAxis,
    pub outcome: Outcome,
    pub bloch: BlochVector,
}

pub fn stokes_evolution(
    t: DimensionlessTime,
    params: &ChannelParams,
    prep: &PreparationConfig,
    imperfections: bool,
) -> Result<Vec<StokesEntry>> {
    let asm = evolve_assemblage(&initial_assemblage(3, prep)?, t, params, imperfections)?;
    Ok(asm
        .iter()
        .map(|((axis, outcome), m)| StokesEntry {
            axis,
            outcome,
            bloch: bloch_of(&(*m * (1.0 / m.trace()))),
        })
        .collect())
}

/// Rotation-free reference curve `2s²e^{-t̃}` for `S_2`.
pub fn reference_s2_rotation_free(shrink_s: f64, t: DimensionlessTime) -> f64 {
    2.0 * shrink_s * shrink_s * (-t.value()).exp()
}

/// The approximate `S_3` reference curve `s²(2e^{-2t̃} + 1)`. Reported for
/// comparison only; `S_3` itself is always computed from the evolved states.
pub fn reference_s3_approx(shrink_s: f64, t: DimensionlessTime) -> f64 {
    shrink_s * shrink_s * (2.0 * (-2.0 * t.value()).exp() + 1.0)
}
