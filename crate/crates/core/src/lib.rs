//! Exact and simulated probabilities that a receiver of random linear
//! network coded packets recovers at least `x` of the `k` source packets
//! before it could decode the whole generation.
//!
//! The analytic side works in exact rationals throughout; floats appear only
//! when a value is rendered for output.

pub mod channel;
pub mod cli;
pub mod gf;
pub mod partial;
pub mod prob;
pub mod qcombin;
pub mod rankstats;
pub mod simulator;

pub use channel::{erasure_curve, p_erasure_atleast, ChannelError, CurvePoint, Epsilon, ErasureScenario};
pub use gf::{FieldElement, FieldSpec, GfError, Modulus};
pub use partial::{
    decode_profile, p_ns_atleast, p_sys_atleast, DecodeProfile, Mode, PartialError, Provenance, RecoveryTables,
    Scenario, ScenarioNs, ScenarioSys,
};
pub use prob::ProbExact;
pub use rankstats::{rank_pmf, RankPmf};
pub use simulator::{SimError, TrialReport};
