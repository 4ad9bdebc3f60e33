//! Statistics, checks of the security argument's building blocks, and the
//! distinguisher harness comparing the real line with the ideal key plus
//! simulator.

mod abort;
mod distinguish;
mod invariants;
mod stats;
mod verify;

pub use abort::{abort_equivalence, aborted, action_lattice, psk_partitions, AbortComparison, ActionPoint};
pub use distinguish::{
    advantage_from_counts, estimate_advantage, estimate_advantages, run_interaction, AdvantageEstimate, Distinguisher,
    Factory, Interaction, MIN_SAMPLES,
};
pub use invariants::{verify_resources, LATTICE_ROUNDS};
pub use stats::{
    monobit_within, mutual_information, newcombe_difference, qber, uniformity_test, wilson, UniformityReport,
    MIN_UNIFORMITY_LEN, UNIFORMITY_ALPHA, Z95,
};
pub use verify::{
    inconclusive_condition_residual, line_joint_distribution, qkd_joint_distribution, state_dependent_loss_povm,
    total_variation, verify_alice_assumption, verify_charlie_is_alice, verify_charlie_is_bob, verify_lemmas, Check,
    JointDistribution, Mutation, Outcome, Preparation, Report, EXACT_TOL,
};

use crate::resources::ResourceError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("input too short: {len} < {min}")]
    TooShort { len: usize, min: usize },
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("{0}")]
    InterfaceMismatch(String),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}
