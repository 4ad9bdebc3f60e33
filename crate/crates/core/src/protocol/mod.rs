//! The line protocol: node operations, sifting, the correction term, key
//! combination, scheduling and a direct executor.

mod line;
mod nodes;
mod schedule;
mod sifting;

pub(crate) use line::{adversary_rng, node_rng, postproc_rng};
pub use line::{run_epoch, run_line, EpochRun};
pub use nodes::{alice_prepare, bob_measure, charlie_transform, Detector};
pub use schedule::{round_robin, Schedule, ScheduleEntry};
pub use sifting::{
    build_sifted_keys, correction_term, reveal_and_combine, sift, PairKey, Reveal, RoundRecord, SiftedKey,
};

use crate::adversary::AdversaryError;
use crate::qmath::QmathError;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("a line needs at least two parties, got {0}")]
    InvalidLine(usize),
    #[error("announcement of {got} bits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bases of round {round} have odd parity")]
    OddParity { round: usize },
    #[error("no pairs to schedule")]
    EmptyPairs,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid keepers: {0}")]
    InvalidKeepers(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Qmath(#[from] QmathError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Alice,
    /// Intermediate node, numbered from 1.
    Charlie(usize),
    Bob,
}

/// A party and its position on the line. Orders by position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRole {
    position: usize,
    kind: NodeKind,
}

impl NodeRole {
    pub fn position(self) -> usize {
        self.position
    }

    pub fn kind(self) -> NodeKind {
        self.kind
    }
}

/// A line of `parties ≥ 2` nodes: Alice at 0, Charlies in between, Bob last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Line {
    parties: usize,
}

impl Line {
    pub fn new(parties: usize) -> Result<Self, ProtocolError> {
        if parties < 2 {
            return Err(ProtocolError::InvalidLine(parties));
        }
        Ok(Line { parties })
    }

    pub fn parties(self) -> usize {
        self.parties
    }

    pub fn hops(self) -> usize {
        self.parties - 1
    }

    pub fn role(self, position: usize) -> Option<NodeRole> {
        let kind = match position {
            0 => NodeKind::Alice,
            p if p + 1 == self.parties => NodeKind::Bob,
            p if p < self.parties => NodeKind::Charlie(p),
            _ => return None,
        };
        Some(NodeRole { position, kind })
    }

    pub fn roles(self) -> impl Iterator<Item = NodeRole> {
        (0..self.parties).filter_map(move |p| self.role(p))
    }

    pub fn alice(self) -> NodeRole {
        NodeRole { position: 0, kind: NodeKind::Alice }
    }

    pub fn bob(self) -> NodeRole {
        NodeRole { position: self.parties - 1, kind: NodeKind::Bob }
    }

    /// The party whose key absorbs the correction term: Charlie 1 when there
    /// is one, otherwise Bob.
    pub fn corrector(self) -> NodeRole {
        self.role(1).expect("line has at least two parties")
    }

    /// `A`, `B`, `C` for a single intermediate node, `C1`, `C2`, … otherwise.
    pub fn label(self, role: NodeRole) -> String {
        match role.kind {
            NodeKind::Alice => "A".into(),
            NodeKind::Bob => "B".into(),
            NodeKind::Charlie(_) if self.parties == 3 => "C".into(),
            NodeKind::Charlie(i) => format!("C{i}"),
        }
    }

    pub fn pair_label(self, pair: (NodeRole, NodeRole)) -> String {
        format!("{}{}", self.label(pair.0), self.label(pair.1))
    }

    /// All unordered pairs `(lo, hi)`, nearest neighbours first; for three
    /// parties this is `AC, CB, AB`.
    pub fn pairs(self) -> Vec<(NodeRole, NodeRole)> {
        let mut v = Vec::new();
        for d in 1..self.parties {
            for lo in 0..self.parties - d {
                v.push((self.role(lo).unwrap(), self.role(lo + d).unwrap()));
            }
        }
        v
    }

    pub fn pair_by_label(self, label: &str) -> Option<(NodeRole, NodeRole)> {
        self.pairs().into_iter().find(|p| self.pair_label(*p) == label)
    }

    /// Everyone except the keepers.
    pub fn revealers(self, keepers: (NodeRole, NodeRole)) -> Vec<NodeRole> {
        self.roles().filter(|r| *r != keepers.0 && *r != keepers.1).collect()
    }

    pub(crate) fn check_keepers(self, keepers: (NodeRole, NodeRole)) -> Result<(), ProtocolError> {
        let (a, b) = keepers;
        if a.position >= b.position || self.role(b.position) != Some(b) || self.role(a.position) != Some(a) {
            return Err(ProtocolError::InvalidKeepers(format!("{a:?}, {b:?}")));
        }
        Ok(())
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.roles().map(|r| self.label(r)).collect();
        f.write_str(&labels.join("-"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_and_labels() {
        let l = Line::new(3).unwrap();
        assert_eq!(l.to_string(), "A-C-B");
        assert_eq!(Line::new(5).unwrap().to_string(), "A-C1-C2-C3-B");
        assert_eq!(Line::new(2).unwrap().to_string(), "A-B");
        assert!(Line::new(1).is_err());
        assert_eq!(l.corrector().kind(), NodeKind::Charlie(1));
        assert_eq!(Line::new(2).unwrap().corrector().kind(), NodeKind::Bob);
    }

    #[test]
    fn pairs_in_canonical_order() {
        let l = Line::new(3).unwrap();
        let labels: Vec<String> = l.pairs().into_iter().map(|p| l.pair_label(p)).collect();
        assert_eq!(labels, ["AC", "CB", "AB"]);
        assert_eq!(Line::new(5).unwrap().pairs().len(), 10);
        let ac = l.pair_by_label("AC").unwrap();
        assert_eq!(l.revealers(ac), vec![l.bob()]);
    }
}
