//! Strategies occupying the outer interfaces of the channels.
//!
//! A strategy sees each qubit as an opaque [`Qubit`]: it can measure it,
//! forward it, replace it with a state of its own, or drop it. It can pull the
//! blocking lever of an authenticated channel but has no way to alter a
//! classical message.

use crate::qmath::{self, apply, Povm, QmathError, QubitState, Unitary2};
use crate::rng::SeededRng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("invalid noise parameters: loss {loss_prob}, dark count {dark_count_prob}")]
    InvalidNoise { loss_prob: f64, dark_count_prob: f64 },
    #[error("strategy targets hop {hop} but the line has {hops} hops")]
    HopOutOfRange { hop: usize, hops: usize },
}

/// Loss and dark-count probabilities of a detector or a lossy channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    #[serde(default)]
    pub loss_prob: f64,
    #[serde(default)]
    pub dark_count_prob: f64,
}

impl NoiseParams {
    pub const NONE: NoiseParams = NoiseParams { loss_prob: 0.0, dark_count_prob: 0.0 };

    pub fn new(loss_prob: f64, dark_count_prob: f64) -> Result<Self, AdversaryError> {
        let p = NoiseParams { loss_prob, dark_count_prob };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AdversaryError> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if ok(self.loss_prob) && ok(self.dark_count_prob) && self.loss_prob + self.dark_count_prob <= 1.0 {
            Ok(())
        } else {
            Err(AdversaryError::InvalidNoise { loss_prob: self.loss_prob, dark_count_prob: self.dark_count_prob })
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.loss_prob == 0.0 && self.dark_count_prob == 0.0
    }

    /// Lossy computational-basis detector.
    pub fn povm(&self) -> Result<Povm, QmathError> {
        Povm::lossy(self.loss_prob, self.dark_count_prob)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    Hadamard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisPolicy {
    Computational,
    Hadamard,
    Random,
}

impl BasisPolicy {
    pub const ALL: [BasisPolicy; 3] = [BasisPolicy::Computational, BasisPolicy::Hadamard, BasisPolicy::Random];

    pub fn pick(self, rng: &mut SeededRng) -> Basis {
        match self {
            BasisPolicy::Computational => Basis::Computational,
            BasisPolicy::Hadamard => Basis::Hadamard,
            BasisPolicy::Random => {
                if rng.random::<bool>() {
                    Basis::Hadamard
                } else {
                    Basis::Computational
                }
            }
        }
    }
}

impl fmt::Display for BasisPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisPolicy::Computational => "computational",
            BasisPolicy::Hadamard => "hadamard",
            BasisPolicy::Random => "random",
        })
    }
}

/// One qubit in flight. The amplitudes are not readable from outside the
/// crate; the only information channel is measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Qubit(QubitState);

impl Qubit {
    /// A fresh qubit in `basis` encoding `bit`.
    pub fn prepare(basis: Basis, bit: bool) -> Self {
        let s = QubitState::basis(bit);
        match basis {
            Basis::Computational => Qubit(s),
            Basis::Hadamard => Qubit(apply(&Unitary2::hadamard(), &s)),
        }
    }

    /// A qubit in an arbitrary state chosen by whoever emits it.
    pub fn from_state(s: QubitState) -> Self {
        Qubit(s)
    }

    /// Projective measurement in `basis`; returns the bit and the collapsed qubit.
    pub fn measure(self, basis: Basis, rng: &mut SeededRng) -> (bool, Qubit) {
        let s = match basis {
            Basis::Computational => self.0,
            Basis::Hadamard => apply(&Unitary2::hadamard(), &self.0),
        };
        let (bit, _) = qmath::measure_computational(&s, rng);
        (bit, Qubit::prepare(basis, bit))
    }

    pub(crate) fn state(&self) -> &QubitState {
        &self.0
    }
}

/// Where a qubit is when the adversary sees it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QubitContext {
    pub epoch: u64,
    /// Hop index, 0-based: hop `h` runs from position `h` to `h + 1`.
    pub hop: usize,
    pub round: usize,
}

/// An entry in the adversary's classical memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observation {
    Measured { epoch: u64, hop: usize, round: usize, basis: Basis, bit: bool },
    Dropped { epoch: u64, hop: usize, round: usize },
    Scrambled { epoch: u64, hop: usize, round: usize },
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Measured { epoch, hop, round, basis, bit } => {
                let b = if *basis == Basis::Computational { "z" } else { "x" };
                write!(f, "e{epoch} h{hop} r{round} measured {b}={}", *bit as u8)
            }
            Observation::Dropped { epoch, hop, round } => write!(f, "e{epoch} h{hop} r{round} dropped"),
            Observation::Scrambled { epoch, hop, round } => write!(f, "e{epoch} h{hop} r{round} scrambled"),
        }
    }
}

/// What the adversary does with one qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct Interception {
    /// `None` drops the qubit; the receiver sees `∅`.
    pub qubit: Option<Qubit>,
    pub observation: Option<Observation>,
}

impl Interception {
    pub fn forward(q: Qubit) -> Self {
        Interception { qubit: Some(q), observation: None }
    }
}

pub trait AdversaryStrategy: Send + Sync {
    fn name(&self) -> String;

    /// Checks the strategy against a line with `hops` quantum hops.
    fn validate(&self, _hops: usize) -> Result<(), AdversaryError> {
        Ok(())
    }

    fn on_qubit(&self, ctx: QubitContext, qubit: Qubit, rng: &mut SeededRng) -> Interception;

    /// Whether `on_qubit` draws randomness on `hop`. Executors skip deriving
    /// a generator when it does not.
    fn uses_randomness(&self, _hop: usize) -> bool {
        true
    }

    /// Lever setting for the authenticated channel of `hop` in `epoch`.
    fn lever(&self, _epoch: u64, _hop: usize) -> bool {
        false
    }
}

/// Forwards everything and never pulls a lever. Classical copies are still
/// collected by the channel into the transcript.
#[derive(Clone, Copy, Debug, Default)]
pub struct Passive;

pub fn passive() -> Passive {
    Passive
}

impl AdversaryStrategy for Passive {
    fn name(&self) -> String {
        "passive".into()
    }

    fn uses_randomness(&self, _hop: usize) -> bool {
        false
    }

    fn on_qubit(&self, _ctx: QubitContext, qubit: Qubit, _rng: &mut SeededRng) -> Interception {
        Interception::forward(qubit)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct InterceptResend {
    pub hop: usize,
    pub policy: BasisPolicy,
}

pub fn intercept_resend(hop: usize, policy: BasisPolicy) -> InterceptResend {
    InterceptResend { hop, policy }
}

impl AdversaryStrategy for InterceptResend {
    fn name(&self) -> String {
        format!("intercept_resend(hop={}, basis={})", self.hop, self.policy)
    }

    fn validate(&self, hops: usize) -> Result<(), AdversaryError> {
        if self.hop < hops {
            Ok(())
        } else {
            Err(AdversaryError::HopOutOfRange { hop: self.hop, hops })
        }
    }

    fn uses_randomness(&self, hop: usize) -> bool {
        hop == self.hop
    }

    fn on_qubit(&self, ctx: QubitContext, qubit: Qubit, rng: &mut SeededRng) -> Interception {
        if ctx.hop != self.hop {
            return Interception::forward(qubit);
        }
        let basis = self.policy.pick(rng);
        let (bit, resent) = qubit.measure(basis, rng);
        Interception {
            qubit: Some(resent),
            observation: Some(Observation::Measured { epoch: ctx.epoch, hop: ctx.hop, round: ctx.round, basis, bit }),
        }
    }
}

/// A lossy channel on one hop: drops a qubit with `loss_prob` and replaces it
/// by the maximally mixed state with `dark_count_prob`, which yields a uniform
/// random conclusive outcome downstream.
#[derive(Clone, Copy, Debug)]
pub struct Lossy {
    pub params: NoiseParams,
    pub hop: usize,
}

/// Lossy channel on hop 0.
pub fn lossy(params: NoiseParams) -> Lossy {
    Lossy { params, hop: 0 }
}

impl AdversaryStrategy for Lossy {
    fn name(&self) -> String {
        format!("lossy(loss={}, dark={})", self.params.loss_prob, self.params.dark_count_prob)
    }

    fn validate(&self, hops: usize) -> Result<(), AdversaryError> {
        self.params.validate()?;
        if self.hop < hops {
            Ok(())
        } else {
            Err(AdversaryError::HopOutOfRange { hop: self.hop, hops })
        }
    }

    fn uses_randomness(&self, hop: usize) -> bool {
        hop == self.hop && !self.params.is_noiseless()
    }

    fn on_qubit(&self, ctx: QubitContext, qubit: Qubit, rng: &mut SeededRng) -> Interception {
        if ctx.hop != self.hop || self.params.is_noiseless() {
            return Interception::forward(qubit);
        }
        let u = rng.random::<f64>();
        let (epoch, hop, round) = (ctx.epoch, ctx.hop, ctx.round);
        if u < self.params.loss_prob {
            Interception { qubit: None, observation: Some(Observation::Dropped { epoch, hop, round }) }
        } else if u < self.params.loss_prob + self.params.dark_count_prob {
            Interception {
                qubit: Some(Qubit(QubitState::maximally_mixed())),
                observation: Some(Observation::Scrambled { epoch, hop, round }),
            }
        } else {
            Interception::forward(qubit)
        }
    }
}

/// Passive on the quantum channels; pulls levers according to a script
/// mapping epoch to one lever bit per hop. Missing entries mean "not pulled".
#[derive(Clone, Debug, Default)]
pub struct ScriptedLevers {
    pub script: BTreeMap<u64, Vec<bool>>,
}

pub fn scripted_levers(script: BTreeMap<u64, Vec<bool>>) -> ScriptedLevers {
    ScriptedLevers { script }
}

impl AdversaryStrategy for ScriptedLevers {
    fn name(&self) -> String {
        format!("scripted_levers({} epochs)", self.script.len())
    }

    fn uses_randomness(&self, _hop: usize) -> bool {
        false
    }

    fn on_qubit(&self, _ctx: QubitContext, qubit: Qubit, _rng: &mut SeededRng) -> Interception {
        Interception::forward(qubit)
    }

    fn lever(&self, epoch: u64, hop: usize) -> bool {
        self.script.get(&epoch).and_then(|v| v.get(hop)).copied().unwrap_or(false)
    }
}

/// Several strategies applied in sequence to every qubit; a lever is pulled
/// if any member pulls it. Used for coordinated multi-hop attacks.
pub struct Chain(pub Vec<Box<dyn AdversaryStrategy>>);

impl AdversaryStrategy for Chain {
    fn name(&self) -> String {
        let names: Vec<String> = self.0.iter().map(|s| s.name()).collect();
        format!("chain[{}]", names.join(", "))
    }

    fn validate(&self, hops: usize) -> Result<(), AdversaryError> {
        self.0.iter().try_for_each(|s| s.validate(hops))
    }

    fn uses_randomness(&self, hop: usize) -> bool {
        self.0.iter().any(|s| s.uses_randomness(hop))
    }

    fn on_qubit(&self, ctx: QubitContext, qubit: Qubit, rng: &mut SeededRng) -> Interception {
        let mut current = Some(qubit);
        let mut observation = None;
        for s in &self.0 {
            let Some(q) = current.take() else { break };
            let step = s.on_qubit(ctx, q, rng);
            current = step.qubit;
            observation = step.observation.or(observation);
        }
        Interception { qubit: current, observation }
    }

    fn lever(&self, epoch: u64, hop: usize) -> bool {
        self.0.iter().any(|s| s.lever(epoch, hop))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn ctx(hop: usize) -> QubitContext {
        QubitContext { epoch: 0, hop, round: 0 }
    }

    #[test]
    fn noise_params_validate() {
        assert!(NoiseParams::new(0.5, 0.5).is_ok());
        assert!(NoiseParams::new(0.6, 0.5).is_err());
        assert!(NoiseParams::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn intercept_resend_only_touches_its_hop() {
        let s = intercept_resend(1, BasisPolicy::Computational);
        let mut rng = rng_from_seed(0);
        let q = Qubit::prepare(Basis::Hadamard, false);
        let out = s.on_qubit(ctx(0), q.clone(), &mut rng);
        assert_eq!(out.qubit, Some(q.clone()));
        assert!(out.observation.is_none());
        let out = s.on_qubit(ctx(1), q, &mut rng);
        assert!(matches!(out.observation, Some(Observation::Measured { basis: Basis::Computational, .. })));
        assert!(s.validate(1).is_err());
        assert!(s.validate(2).is_ok());
    }

    #[test]
    fn measuring_in_the_encoding_basis_is_faithful() {
        let mut rng = rng_from_seed(5);
        for basis in [Basis::Computational, Basis::Hadamard] {
            for bit in [false, true] {
                let (got, post) = Qubit::prepare(basis, bit).measure(basis, &mut rng);
                assert_eq!(got, bit);
                assert_eq!(post, Qubit::prepare(basis, bit));
            }
        }
    }

    #[test]
    fn lossy_drop_rate() {
        let s = lossy(NoiseParams::new(0.3, 0.0).unwrap());
        let mut rng = rng_from_seed(9);
        let n = 100_000;
        let kept = (0..n)
            .filter(|_| s.on_qubit(ctx(0), Qubit::prepare(Basis::Computational, false), &mut rng).qubit.is_some())
            .count();
        assert!((kept as f64 / n as f64 - 0.7).abs() < 0.01);
    }

    #[test]
    fn scripted_levers_follow_script() {
        let s = scripted_levers(BTreeMap::from([(0, vec![false, true])]));
        assert!(!s.lever(0, 0));
        assert!(s.lever(0, 1));
        assert!(!s.lever(1, 1));
        assert!(!scripted_levers(BTreeMap::new()).lever(0, 0));
    }
}
