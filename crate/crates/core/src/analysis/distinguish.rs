use super::stats::{newcombe_difference, Z95};
use super::AnalysisError;
use crate::adversary::passive;
use crate::postproc::PublicMsg;
use crate::resources::{
    run_system, MsgBody, ProtocolEnvironment, Psk, QlineSpec, ResourceError, System, View, MAX_STEPS,
};
use crate::rng::{derive_rng, derive_seed, stream};
use rand::Rng;
use rayon::prelude::*;
use std::fmt;

pub const MIN_SAMPLES: usize = 100;

/// How a distinguisher drives the honest users and the outer interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interaction {
    /// Equal PSKs, levers released, qubits forwarded untouched.
    Honest,
    /// Every user gets a different PSK.
    MismatchedPsks,
    /// Lever of the given hop pulled from the start.
    Lever(usize),
}

/// The shipped distinguishers. Each outputs a guess, `true` meaning "real".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distinguisher {
    CoinFlip,
    /// Mismatched PSKs: guess real iff an abort is visible on the channels
    /// exactly when the keepers output ⊥.
    AbortPattern,
    /// First lever pulled: guess real iff both keepers output ⊥ and the abort
    /// is visible.
    LeverPattern,
    /// Parity of Bob's announced bases.
    TranscriptParity,
    /// Guess real iff the two keepers' outputs agree.
    KeyAgreement,
    /// Compares the first key bit with a public bit of the transcript.
    KeyCorrelation,
}

impl Distinguisher {
    pub const ALL: [Distinguisher; 6] = [
        Distinguisher::CoinFlip,
        Distinguisher::AbortPattern,
        Distinguisher::LeverPattern,
        Distinguisher::TranscriptParity,
        Distinguisher::KeyAgreement,
        Distinguisher::KeyCorrelation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Distinguisher::CoinFlip => "coin-flip",
            Distinguisher::AbortPattern => "abort-pattern",
            Distinguisher::LeverPattern => "lever-pattern",
            Distinguisher::TranscriptParity => "transcript-parity",
            Distinguisher::KeyAgreement => "key-agreement",
            Distinguisher::KeyCorrelation => "key-correlation",
        }
    }

    pub fn interaction(self) -> Interaction {
        match self {
            Distinguisher::AbortPattern => Interaction::MismatchedPsks,
            Distinguisher::LeverPattern => Interaction::Lever(0),
            _ => Interaction::Honest,
        }
    }

    pub fn guess(self, view: &View, spec: &QlineSpec, coin: bool) -> bool {
        let keys = keeper_keys(view, spec);
        let bottom = keys.iter().all(|k| matches!(k, Some(None)));
        match self {
            Distinguisher::CoinFlip => coin,
            Distinguisher::AbortPattern => view.abort_visible() == bottom,
            Distinguisher::LeverPattern => bottom && view.abort_visible(),
            Distinguisher::TranscriptParity => transcript_parity(view),
            Distinguisher::KeyAgreement => keys[0] == keys[1],
            Distinguisher::KeyCorrelation => match keys[0] {
                Some(Some(k)) if !k.is_empty() => k[0] == public_bit(view),
                _ => transcript_parity(view),
            },
        }
    }
}

impl fmt::Display for Distinguisher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

fn keeper_keys<'v>(view: &'v View, spec: &QlineSpec) -> [Option<Option<&'v crate::Bits>>; 2] {
    [view.key(&spec.line.label(spec.keepers.0)), view.key(&spec.line.label(spec.keepers.1))]
}

fn transcript_parity(view: &View) -> bool {
    let ones: usize = view
        .copies()
        .filter_map(|(_, m)| match &m.body {
            MsgBody::Announce { bases, conclusive: Some(_) } => Some(bases.iter().filter(|&&b| b).count()),
            _ => None,
        })
        .next()
        .unwrap_or(0);
    ones.is_multiple_of(2)
}

/// Parity of the first hash seed published during post-processing.
fn public_bit(view: &View) -> bool {
    view.copies()
        .find_map(|(_, m)| match &m.body {
            MsgBody::Postproc(PublicMsg::PaSeed { seed, .. }) => Some(seed.iter().filter(|&&b| b).count() % 2 == 1),
            _ => None,
        })
        .unwrap_or(false)
}

/// Empirical advantage of one distinguisher on one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct AdvantageEstimate {
    pub distinguisher: String,
    pub variant: String,
    pub point: f64,
    pub ci_95: (f64, f64),
    pub n_samples: usize,
    /// Samples guessed "real" when facing the real / the ideal system.
    pub guessed_real: (u64, u64),
}

impl AdvantageEstimate {
    pub fn ci_contains_zero(&self) -> bool {
        self.ci_95.0 <= 0.0
    }
}

/// `|p_real − p_ideal|` and a 95% interval for it, from the Newcombe
/// interval of the signed difference.
pub fn advantage_from_counts(k_real: u64, k_ideal: u64, n: u64) -> (f64, (f64, f64)) {
    let point = (k_real as f64 - k_ideal as f64).abs() / n as f64;
    let (lo, hi) = newcombe_difference(k_real, n, k_ideal, n, Z95);
    let (lo, hi) = if lo > 0.0 {
        (lo, hi)
    } else if hi < 0.0 {
        (-hi, -lo)
    } else {
        (0.0, lo.abs().max(hi.abs()))
    };
    (point, (lo.clamp(0.0, point), hi.clamp(point, 1.0)))
}

/// Builds a fresh system for a sample seed.
pub type Factory<'a> = &'a (dyn Fn(u64) -> Result<System, ResourceError> + Sync);

pub(crate) fn signature(sys: &System) -> Vec<(String, Vec<crate::resources::PortSpec>)> {
    let mut v: Vec<_> = sys.interfaces().iter().map(|i| (i.name.clone(), i.ports.clone())).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

pub fn run_interaction(
    sys: &mut System,
    spec: &QlineSpec,
    interaction: Interaction,
    seed: u64,
) -> Result<View, ResourceError> {
    let adv = passive();
    let users = spec.users();
    let psks = match interaction {
        Interaction::MismatchedPsks => users.iter().enumerate().map(|(i, u)| (u.clone(), Psk(i as u64 + 1))).collect(),
        _ => ProtocolEnvironment::equal_psks(&users),
    };
    let mut env = ProtocolEnvironment::new(&adv, seed, spec.epoch, spec.line.hops(), psks);
    if let Interaction::Lever(h) = interaction {
        env = env.with_levers((0..spec.line.hops()).map(|i| i == h).collect());
    }
    run_system(sys, &mut env, MAX_STEPS)
}

/// Runs every distinguisher in `ds` against `real` and `ideal`, `n` samples
/// each. Sample `i` builds both systems from the same derived seed, so the
/// two worlds share their randomness; distinguishers with the same
/// interaction share the runs.
pub fn estimate_advantages(
    real: Factory,
    ideal: Factory,
    spec: &QlineSpec,
    ds: &[Distinguisher],
    n: usize,
    seed: u64,
    parallel: bool,
) -> Result<Vec<AdvantageEstimate>, AnalysisError> {
    if n < MIN_SAMPLES {
        return Err(AnalysisError::TooFewSamples { n, min: MIN_SAMPLES });
    }
    if signature(&real(seed)?) != signature(&ideal(seed)?) {
        return Err(AnalysisError::InterfaceMismatch("real and ideal systems expose different interfaces".into()));
    }
    let mut groups: Vec<Interaction> = ds.iter().map(|d| d.interaction()).collect();
    groups.sort();
    groups.dedup();
    let mut counts = vec![(0u64, 0u64); ds.len()];
    for g in groups {
        let members: Vec<usize> = (0..ds.len()).filter(|&i| ds[i].interaction() == g).collect();
        let sample = |i: usize| -> Result<Vec<(u64, u64)>, AnalysisError> {
            let s = derive_seed(seed, &[stream::MONTE_CARLO, i as u64]);
            let coin = derive_rng(seed, &[stream::DISTINGUISHER, i as u64]).random::<bool>();
            let rv = run_interaction(&mut real(s)?, spec, g, s)?;
            let iv = run_interaction(&mut ideal(s)?, spec, g, s)?;
            Ok(members
                .iter()
                .map(|&m| (ds[m].guess(&rv, spec, coin) as u64, ds[m].guess(&iv, spec, coin) as u64))
                .collect())
        };
        let add = |mut a: Vec<(u64, u64)>, b: Vec<(u64, u64)>| {
            a.iter_mut().zip(b).for_each(|(x, y)| {
                x.0 += y.0;
                x.1 += y.1;
            });
            a
        };
        let zero = || vec![(0u64, 0u64); members.len()];
        let total = if parallel {
            (0..n).into_par_iter().map(sample).try_reduce(zero, |a, b| Ok(add(a, b)))?
        } else {
            (0..n).map(sample).try_fold(zero(), |a, b| b.map(|b| add(a, b)))?
        };
        for (&m, c) in members.iter().zip(total) {
            counts[m] = c;
        }
    }
    Ok(ds
        .iter()
        .zip(counts)
        .map(|(d, (kr, ki))| {
            let (point, ci_95) = advantage_from_counts(kr, ki, n as u64);
            AdvantageEstimate {
                distinguisher: d.id().into(),
                variant: spec.pair_label(),
                point,
                ci_95,
                n_samples: n,
                guessed_real: (kr, ki),
            }
        })
        .collect())
}

pub fn estimate_advantage(
    real: Factory,
    ideal: Factory,
    spec: &QlineSpec,
    d: Distinguisher,
    n: usize,
    seed: u64,
) -> Result<AdvantageEstimate, AnalysisError> {
    Ok(estimate_advantages(real, ideal, spec, &[d], n, seed, true)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_interval_contains_point_and_is_symmetric() {
        for (a, b) in [(500, 500), (900, 100), (100, 900), (510, 490), (1000, 0)] {
            let (p, (lo, hi)) = advantage_from_counts(a, b, 1000);
            assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0, "{a} {b}: {lo} {p} {hi}");
            assert_eq!(advantage_from_counts(b, a, 1000), (p, (lo, hi)));
        }
        let (p, (lo, _)) = advantage_from_counts(500, 500, 1000);
        assert_eq!((p, lo), (0.0, 0.0));
        let (_, (lo, _)) = advantage_from_counts(1000, 0, 1000);
        assert!(lo > 0.99);
    }
}
