use super::{Line, NodeRole, ProtocolError};
use crate::qmath::MeasureOutcome;
use crate::Bits;
use std::collections::BTreeMap;

/// Everything the parties chose or observed in one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: usize,
    /// Basis bit of every node, by position.
    pub bases: Vec<bool>,
    /// Value bit of every node except Bob, by position.
    pub values: Vec<bool>,
    /// Bob's outcome.
    pub outcome: MeasureOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiftedKey {
    pub owner: NodeRole,
    pub bits: Bits,
    pub kept_indices: Vec<usize>,
}

/// The two keepers' keys after the others revealed theirs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairKey {
    pub pair: (NodeRole, NodeRole),
    pub bits: [Bits; 2],
    pub epoch: u64,
}

impl PairKey {
    pub fn agree(&self) -> bool {
        self.bits[0] == self.bits[1]
    }

    pub fn len(&self) -> usize {
        self.bits[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits[0].is_empty()
    }
}

/// Result of the reveal step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reveal {
    pub key: PairKey,
    /// Published keys, by revealer position.
    pub disclosed: Vec<(NodeRole, Bits)>,
}

/// Rounds whose basis bits XOR to zero and whose outcome was conclusive.
pub fn sift(announcements: &[Bits], conclusive: &[bool]) -> Result<Vec<usize>, ProtocolError> {
    let n = conclusive.len();
    if let Some(a) = announcements.iter().find(|a| a.len() != n) {
        return Err(ProtocolError::LengthMismatch { expected: n, got: a.len() });
    }
    Ok((0..n).filter(|&i| conclusive[i] && !announcements.iter().fold(false, |acc, a| acc ^ a[i])).collect())
}

/// `((Σ b) mod 4) / 2` for a round with even basis parity.
pub fn correction_term(bases: &[bool]) -> Result<bool, ProtocolError> {
    let sum = bases.iter().filter(|&&b| b).count();
    if sum % 2 == 1 {
        return Err(ProtocolError::OddParity { round: 0 });
    }
    Ok(sum % 4 == 2)
}

/// Sifted keys of every party. The corrector XORs the correction term into
/// its bits so that the XOR over all parties is zero.
pub fn build_sifted_keys(
    line: Line,
    records: &[RoundRecord],
    kept: &[usize],
) -> Result<BTreeMap<NodeRole, SiftedKey>, ProtocolError> {
    let corrector = line.corrector();
    let bob = line.bob();
    let mut keys: BTreeMap<NodeRole, SiftedKey> = line
        .roles()
        .map(|r| (r, SiftedKey { owner: r, bits: Vec::with_capacity(kept.len()), kept_indices: kept.to_vec() }))
        .collect();
    for &i in kept {
        let rec = records
            .get(i)
            .filter(|r| r.round == i)
            .ok_or_else(|| ProtocolError::Config(format!("no record for round {i}")))?;
        if rec.bases.len() != line.parties() || rec.values.len() + 1 != line.parties() {
            return Err(ProtocolError::LengthMismatch { expected: line.parties(), got: rec.bases.len() });
        }
        let corr = correction_term(&rec.bases).map_err(|_| ProtocolError::OddParity { round: i })?;
        let bob_bit = rec.outcome.bit().ok_or_else(|| ProtocolError::Config(format!("round {i} is inconclusive")))?;
        for (role, key) in keys.iter_mut() {
            let raw = if *role == bob { bob_bit } else { rec.values[role.position()] };
            key.bits.push(raw ^ (corr && *role == corrector));
        }
    }
    Ok(keys)
}

/// Every party but the keepers publishes its sifted key; the lower keeper
/// XORs the published keys into its own. The two results are equal when the
/// XOR of all sifted keys is zero.
pub fn reveal_and_combine(
    line: Line,
    keys: &BTreeMap<NodeRole, SiftedKey>,
    keepers: (NodeRole, NodeRole),
    epoch: u64,
) -> Result<Reveal, ProtocolError> {
    line.check_keepers(keepers)?;
    let get = |r: NodeRole| keys.get(&r).ok_or_else(|| ProtocolError::InvalidKeepers(format!("no key for {r:?}")));
    let mut lo = get(keepers.0)?.bits.clone();
    let hi = get(keepers.1)?.bits.clone();
    let mut disclosed = Vec::new();
    for r in line.revealers(keepers) {
        let k = &get(r)?.bits;
        if k.len() != lo.len() {
            return Err(ProtocolError::LengthMismatch { expected: lo.len(), got: k.len() });
        }
        lo.iter_mut().zip(k).for_each(|(a, b)| *a ^= b);
        disclosed.push((r, k.clone()));
    }
    Ok(Reveal { key: PairKey { pair: keepers, bits: [lo, hi], epoch }, disclosed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sift_examples() {
        let ann = vec![vec![false, true, true], vec![false, false, true], vec![false, false, false]];
        assert_eq!(sift(&ann, &[true; 3]).unwrap(), vec![0, 2]);
        assert_eq!(sift(&ann, &[false, true, true]).unwrap(), vec![2]);
        let zeros = vec![vec![false; 4]; 3];
        assert_eq!(sift(&zeros, &[true, false, true, true]).unwrap(), vec![0, 2, 3]);
        assert!(matches!(sift(&[vec![false; 2]], &[true; 3]), Err(ProtocolError::LengthMismatch { .. })));
    }

    #[test]
    fn correction_examples() {
        assert!(!correction_term(&[false, false, false]).unwrap());
        assert!(correction_term(&[true, true, false]).unwrap());
        assert!(!correction_term(&[true, true, true, true, false]).unwrap());
        assert!(correction_term(&[true, false, false]).is_err());
    }

    #[test]
    fn empty_kept_gives_empty_keys() {
        let line = Line::new(4).unwrap();
        let keys = build_sifted_keys(line, &[], &[]).unwrap();
        assert_eq!(keys.len(), 4);
        assert!(keys.values().all(|k| k.bits.is_empty()));
    }

    #[test]
    fn keepers_are_validated() {
        let line = Line::new(3).unwrap();
        let keys = build_sifted_keys(line, &[], &[]).unwrap();
        let (a, b) = (line.alice(), line.bob());
        assert!(reveal_and_combine(line, &keys, (b, a), 0).is_err());
        assert!(reveal_and_combine(line, &keys, (a, a), 0).is_err());
        assert!(reveal_and_combine(line, &keys, (a, b), 0).is_ok());
    }
}
