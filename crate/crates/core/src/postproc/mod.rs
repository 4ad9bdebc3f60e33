//! Post-processing of the keepers' combined keys: error estimation on a
//! disclosed sample, block parity reconciliation, an equality check by
//! hashing and Toeplitz privacy amplification.

mod reconcile;
mod sampling;
mod session;
mod toeplitz;

pub use reconcile::{parities, permutation, reconcile, Bisection, DriverStep, Reconciled, BLOCK_SIZE, MAX_PASSES};
pub use sampling::{estimate_qber, remove_positions, sample_positions, QberSample, MIN_SAMPLED_LEN};
pub use session::{run_pair, Endpoint, PairRun, PublicMsg, Side, Step};
pub use toeplitz::privacy_amplify;

pub(crate) use session::bit_string;

use crate::Bits;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostprocError {
    #[error("key of length {len} is shorter than the minimum {min}")]
    TooShort { len: usize, min: usize },
    #[error("key lengths differ ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("estimated QBER {qber:.4} exceeds threshold {threshold}")]
    QberAboveThreshold { qber: f64, threshold: f64 },
    #[error("reconciliation failed after {passes} passes")]
    ReconcileFailed { passes: u32 },
    #[error("keys differ after reconciliation")]
    VerificationFailed,
    #[error("only {available} secret bits available, {needed} needed")]
    InsufficientKey { available: usize, needed: usize },
    #[error("bad length: {0}")]
    BadLength(String),
    #[error("invalid post-processing configuration: {0}")]
    InvalidConfig(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocConfig {
    /// Fraction of the combined key disclosed for QBER estimation.
    pub sample_fraction: f64,
    pub qber_abort_threshold: f64,
    /// Output length as a fraction of the key left after sampling, before
    /// deducting disclosed parities and the verification tag.
    pub pa_output_ratio: f64,
    /// Hash seed length; `None` uses the minimum the key needs.
    pub pa_seed_length: Option<usize>,
    /// Length of the hash tag comparing keys after reconciliation.
    pub verify_tag_bits: usize,
    /// Fixed output length; the epoch aborts if the budget does not cover it.
    pub final_key_len: Option<usize>,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        PostprocConfig {
            sample_fraction: 0.25,
            qber_abort_threshold: 0.11,
            pa_output_ratio: 0.5,
            pa_seed_length: None,
            verify_tag_bits: 32,
            final_key_len: None,
        }
    }
}

impl PostprocConfig {
    pub fn validate(&self) -> Result<(), PostprocError> {
        let bad = |what: &str| Err(PostprocError::InvalidConfig(what.to_string()));
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return bad("sample_fraction must lie in (0, 1)");
        }
        if !(self.qber_abort_threshold > 0.0 && self.qber_abort_threshold < 0.5) {
            return bad("qber_abort_threshold must lie in (0, 0.5)");
        }
        if !(self.pa_output_ratio > 0.0 && self.pa_output_ratio <= 1.0) {
            return bad("pa_output_ratio must lie in (0, 1]");
        }
        if self.final_key_len == Some(0) {
            return bad("final_key_len must be at least 1");
        }
        Ok(())
    }
}

/// A keeper's post-processed key.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalKey {
    pub bits: Bits,
    pub epoch: u64,
    pub qber_estimate: f64,
}
