//! The record of a run: every event on the channels' outer interfaces, the
//! per-epoch results and the adversary's memory.

use crate::adversary::Observation;
use crate::postproc::{FinalKey, PostprocError};
use crate::protocol::{NodeRole, PairKey, SiftedKey};
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interface {
    /// Outer interface of the quantum channel on a hop.
    Quantum(usize),
    /// Outer interface of the authenticated channel on a hop.
    Classical(usize),
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interface::Quantum(h) => write!(f, "q{h}"),
            Interface::Classical(h) => write!(f, "a{h}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// A qubit left the sender (`leak`) or reached the receiver (`inject`).
    Leak {
        round: usize,
        present: bool,
    },
    Inject {
        round: usize,
        present: bool,
    },
    Lever {
        pulled: bool,
    },
    /// Copy of a classical message.
    Copy(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub time: u64,
    pub epoch: u64,
    pub interface: Interface,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} e{} {}.", self.time, self.epoch, self.interface)?;
        match &self.kind {
            EventKind::Leak { round, present: true } => write!(f, "leak r{round}"),
            EventKind::Leak { round, present: false } => write!(f, "leak r{round} none"),
            EventKind::Inject { round, present: true } => write!(f, "inject r{round}"),
            EventKind::Inject { round, present: false } => write!(f, "inject r{round} none"),
            EventKind::Lever { pulled } => write!(f, "lever {}", *pulled as u8),
            EventKind::Copy(m) => write!(f, "copy {m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AbortReason {
    Blocked { hop: usize },
    AuthFailed { hop: usize },
    Postproc(PostprocError),
}

impl AbortReason {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AbortReason::Blocked { .. } => "blocked",
            AbortReason::AuthFailed { .. } => "psk_mismatch",
            AbortReason::Postproc(e) => match e {
                PostprocError::TooShort { .. } => "too_short",
                PostprocError::LengthMismatch { .. } => "length_mismatch",
                PostprocError::QberAboveThreshold { .. } => "qber_above_threshold",
                PostprocError::ReconcileFailed { .. } => "reconcile_failed",
                PostprocError::VerificationFailed => "verification_failed",
                PostprocError::InsufficientKey { .. } => "insufficient_key",
                PostprocError::BadLength(_) => "bad_length",
                PostprocError::InvalidConfig(_) => "invalid_config",
                PostprocError::Protocol(_) => "protocol",
            },
        }
    }
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::Blocked { hop } => write!(f, "authenticated channel on hop {hop} blocked"),
            AbortReason::AuthFailed { hop } => write!(f, "authentication failed on hop {hop}"),
            AbortReason::Postproc(e) => write!(f, "{e}"),
        }
    }
}

/// Result of one scheduled epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochOutcome {
    pub epoch: u64,
    pub keepers: (NodeRole, NodeRole),
    pub pair_label: String,
    pub rounds: usize,
    pub conclusive: usize,
    /// Every party's sifted key; empty if the epoch aborted before sifting.
    pub sifted: BTreeMap<NodeRole, SiftedKey>,
    /// Keepers' keys after the reveal, before post-processing.
    pub combined: Option<PairKey>,
    pub qber_estimate: Option<f64>,
    /// Both keepers' final keys, present only on success.
    pub final_keys: Option<[FinalKey; 2]>,
    pub abort: Option<AbortReason>,
}

impl EpochOutcome {
    pub fn sift_count(&self) -> usize {
        self.sifted.values().next().map_or(0, |k| k.bits.len())
    }

    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    pub fn final_key_len(&self) -> usize {
        self.final_keys.as_ref().map_or(0, |k| k[0].bits.len())
    }

    /// Exact error rate between the keepers' combined keys.
    pub fn combined_qber(&self) -> Option<f64> {
        let k = self.combined.as_ref()?;
        if k.is_empty() {
            return None;
        }
        let errs = k.bits[0].iter().zip(&k.bits[1]).filter(|(a, b)| a != b).count();
        Some(errs as f64 / k.len() as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub events: Vec<Event>,
    pub epochs: Vec<EpochOutcome>,
    pub adversary_memory: Vec<Observation>,
}

impl Transcript {
    /// Line-per-event rendering used for replay comparisons.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            let _ = writeln!(s, "{e}");
        }
        for o in &self.adversary_memory {
            let _ = writeln!(s, "memory {o}");
        }
        for e in &self.epochs {
            let keys = match &e.final_keys {
                Some(k) => crate::postproc::bit_string(&k[0].bits),
                None => "⊥".into(),
            };
            let _ = writeln!(s, "epoch {} pair={} sifted={} key={keys}", e.epoch, e.pair_label, e.sift_count());
        }
        s
    }

    pub fn all_aborted(&self) -> bool {
        !self.epochs.is_empty() && self.epochs.iter().all(EpochOutcome::aborted)
    }
}
