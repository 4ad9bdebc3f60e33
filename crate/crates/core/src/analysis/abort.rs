use super::distinguish::Factory;
use super::AnalysisError;
use crate::adversary::passive;
use crate::resources::{run_system, ProtocolEnvironment, Psk, QlineSpec, View, MAX_STEPS};

/// One combination of outer levers and PSK inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionPoint {
    pub levers: Vec<bool>,
    /// PSK token per user, in position order.
    pub psks: Vec<u64>,
}

/// Every set partition of `n` users, as restricted growth strings.
pub fn psk_partitions(n: usize) -> Vec<Vec<u64>> {
    fn grow(prefix: &mut Vec<u64>, max: u64, n: usize, out: &mut Vec<Vec<u64>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=max + 1 {
            prefix.push(v);
            grow(prefix, max.max(v), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        grow(&mut vec![0], 0, n, &mut out);
    }
    out
}

/// All lever settings times all PSK equality patterns.
pub fn action_lattice(parties: usize) -> Vec<ActionPoint> {
    let hops = parties - 1;
    let mut v = Vec::new();
    for mask in 0..1u32 << hops {
        for psks in psk_partitions(parties) {
            v.push(ActionPoint { levers: (0..hops).map(|h| mask >> h & 1 == 1).collect(), psks });
        }
    }
    v
}

/// A keeper output ⊥ or nothing at all.
pub fn aborted(view: &View, spec: &QlineSpec) -> bool {
    [spec.keepers.0, spec.keepers.1].iter().any(|k| !matches!(view.key(&spec.line.label(*k)), Some(Some(_))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbortComparison {
    pub point: ActionPoint,
    pub seed: u64,
    pub real_aborted: bool,
    pub ideal_aborted: bool,
}

/// Runs both systems at every lattice point for every seed.
pub fn abort_equivalence(
    real: Factory,
    ideal: Factory,
    spec: &QlineSpec,
    seeds: &[u64],
) -> Result<Vec<AbortComparison>, AnalysisError> {
    let adv = passive();
    let users = spec.users();
    let mut out = Vec::new();
    for point in action_lattice(spec.line.parties()) {
        for &seed in seeds {
            let run = |f: Factory| -> Result<bool, AnalysisError> {
                let psks = users.iter().zip(&point.psks).map(|(u, p)| (u.clone(), Psk(*p))).collect();
                let mut env = ProtocolEnvironment::new(&adv, seed, spec.epoch, spec.line.hops(), psks)
                    .with_levers(point.levers.clone());
                Ok(aborted(&run_system(&mut f(seed)?, &mut env, MAX_STEPS)?, spec))
            };
            let real_aborted = run(real)?;
            let ideal_aborted = run(ideal)?;
            out.push(AbortComparison { point: point.clone(), seed, real_aborted, ideal_aborted });
        }
    }
    Ok(out)
}
