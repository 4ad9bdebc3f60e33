use super::{Line, NodeRole, ProtocolError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub epoch: u64,
    pub keepers: (NodeRole, NodeRole),
    pub revealers: Vec<NodeRole>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn count(&self, pair: (NodeRole, NodeRole)) -> usize {
        self.entries.iter().filter(|e| e.keepers == pair).count()
    }
}

/// Assigns one keeper pair per epoch. Without weights pair `i` serves the
/// epochs `e ≡ i (mod P)`. With weights, smooth weighted round robin gives
/// each pair a share proportional to its weight in a fixed order.
pub fn round_robin(
    line: Line,
    pairs: &[(NodeRole, NodeRole)],
    epochs: u64,
    weights: Option<&[u32]>,
) -> Result<Schedule, ProtocolError> {
    if pairs.is_empty() {
        return Err(ProtocolError::EmptyPairs);
    }
    if epochs == 0 {
        return Err(ProtocolError::InvalidSchedule("at least one epoch is required".into()));
    }
    for p in pairs {
        line.check_keepers(*p)?;
    }
    let entry = |epoch: u64, keepers: (NodeRole, NodeRole)| ScheduleEntry {
        epoch,
        keepers,
        revealers: line.revealers(keepers),
    };
    let entries = match weights {
        None => (0..epochs).map(|e| entry(e, pairs[(e % pairs.len() as u64) as usize])).collect(),
        Some(w) => {
            if w.len() != pairs.len() || w.contains(&0) {
                return Err(ProtocolError::InvalidSchedule("one positive weight per pair is required".into()));
            }
            let total: i64 = w.iter().map(|&x| x as i64).sum();
            let mut current = vec![0i64; w.len()];
            (0..epochs)
                .map(|e| {
                    current.iter_mut().zip(w).for_each(|(c, &x)| *c += x as i64);
                    let pick = (0..w.len()).fold(0, |best, i| if current[i] > current[best] { i } else { best });
                    current[pick] -= total;
                    entry(e, pairs[pick])
                })
                .collect()
        }
    };
    Ok(Schedule { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unweighted_cycles() {
        let line = Line::new(3).unwrap();
        let pairs = line.pairs();
        let s = round_robin(line, &pairs, 6, None).unwrap();
        assert!(pairs.iter().all(|p| s.count(*p) == 2));
        assert_eq!(s.entries[4].keepers, pairs[1]);
        let one = round_robin(line, &pairs[..1], 5, None).unwrap();
        assert_eq!(one.count(pairs[0]), 5);
    }

    #[test]
    fn weighted_proportions() {
        let line = Line::new(3).unwrap();
        let pairs = line.pairs(); // AC, CB, AB
        let s = round_robin(line, &pairs, 8, Some(&[1, 1, 2])).unwrap();
        assert_eq!([s.count(pairs[0]), s.count(pairs[1]), s.count(pairs[2])], [2, 2, 4]);
    }

    #[test]
    fn rejects_degenerate_input() {
        let line = Line::new(3).unwrap();
        assert!(matches!(round_robin(line, &[], 3, None), Err(ProtocolError::EmptyPairs)));
        assert!(round_robin(line, &line.pairs(), 0, None).is_err());
        assert!(round_robin(line, &line.pairs(), 3, Some(&[1, 0, 1])).is_err());
    }
}
