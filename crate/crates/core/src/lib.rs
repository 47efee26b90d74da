//! Temporal steering of a single qubit sent through a damping and rotation
//! channel: assemblages, the steering parameter `S_N`, the steerable weight,
//! QKD security verdicts and a photon-count simulator with tomography.

pub mod assemblage;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod montecarlo;
pub mod sdp;
pub mod states;

pub use assemblage::{check_consistency, evolve_assemblage, initial_assemblage, Assemblage};
pub use channel::{evolve, ChannelParams, DimensionlessTime};
pub use error::{Error, Result};
pub use linalg::{DensityMatrix2, HermitianOperator2, Ket2, Unitary2};
pub use metrics::{security_verdict, ts_parameter, Protocol, SecurityVerdict, SteeringReport};
pub use sdp::{steerable_weight, SdpStatus, WeightResult, WeightSettings};
pub use states::{Outcome, PauliAxis, PreparationConfig};
