//! Small semidefinite programs over 2×2 Hermitian blocks, and the
//! steerable weight built on top of them.

mod cone;
pub mod oracle;
mod solver;
mod weight;

use serde::{Deserialize, Serialize};

pub use solver::{solve_sdp, LmiConstraint, SdpProblem, SdpSettings, SdpSolution};
pub use weight::{
    steerable_weight, unsteerability_onset, OnsetSettings, WeightResult, WeightSettings,
};

/// Termination status of the interior-point solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    /// The solver converged but the recovered point misses the tolerances
    /// when checked against the original, unscaled constraints.
    Inaccurate,
}

impl SdpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::Unbounded => "unbounded",
            SdpStatus::MaxIterations => "max_iterations",
            SdpStatus::Inaccurate => "inaccurate",
        }
    }
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
