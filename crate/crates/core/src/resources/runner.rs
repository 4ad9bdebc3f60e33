use super::channels::{Delivery, LineMessage, MsgBody, Psk};
use super::system::{Payload, ResourceError, System};
use crate::adversary::{AdversaryStrategy, Observation, QubitContext};
use crate::protocol::adversary_rng;
use crate::rng::SeededRng;
use crate::Bits;
use rand::SeedableRng;

/// One port event seen by the environment.
#[derive(Clone, Debug, PartialEq)]
pub struct Observed {
    pub step: usize,
    pub iface: String,
    pub port: String,
    pub payload: Payload,
}

/// Everything that crossed the system boundary during a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct View {
    pub inputs: Vec<Observed>,
    pub outputs: Vec<Observed>,
    pub steps: usize,
}

impl View {
    /// Key output of user `label`: `None` if nothing was output, `Some(None)`
    /// for ⊥.
    pub fn key(&self, label: &str) -> Option<Option<&Bits>> {
        self.outputs.iter().find_map(|o| match &o.payload {
            Payload::Key(k) if o.iface == label && o.port == "key" => Some(k.as_ref()),
            _ => None,
        })
    }

    /// Message copies leaked by the authenticated channels.
    pub fn copies(&self) -> impl Iterator<Item = (&str, &LineMessage)> {
        self.outputs.iter().filter_map(|o| match &o.payload {
            Payload::Classical(m) => Some((o.iface.as_str(), m)),
            _ => None,
        })
    }

    pub fn abort_visible(&self) -> bool {
        self.copies().any(|(_, m)| m.is_abort())
    }

    /// Number of qubit slots that left hop `iface` at its leak port.
    pub fn leaks(&self, iface: &str) -> usize {
        self.outputs.iter().filter(|o| o.iface == iface && o.port == "leak").count()
    }

    pub fn contains_body(&self, pred: impl Fn(&MsgBody) -> bool) -> bool {
        self.copies().any(|(_, m)| pred(&m.body))
    }
}

/// Drives a system: decides the inputs of each step from the outputs of the
/// previous one. Returning no inputs ends the run.
pub trait Environment {
    fn step(&mut self, step: usize, outputs: &[Observed]) -> Vec<(String, String, Payload)>;
}

/// Runs `sys` under `env`. Inputs of a step are fed in the order given;
/// the outputs they cause are sorted by interface and port name, keeping
/// causal order within a port.
pub fn run_system(sys: &mut System, env: &mut dyn Environment, max_steps: usize) -> Result<View, ResourceError> {
    let mut view = View::default();
    let mut last: Vec<Observed> = Vec::new();
    let mut raw = Vec::new();
    for step in 0..max_steps {
        let inputs = env.step(step, &last);
        if inputs.is_empty() {
            view.steps = step;
            return Ok(view);
        }
        raw.clear();
        for (iface, port, payload) in inputs {
            let at = sys.port_addr(&iface, &port)?;
            view.inputs.push(Observed { step, iface, port, payload: payload.clone() });
            sys.input_into(at, payload, &mut raw)?;
        }
        raw.sort_by(|(a, _), (b, _)| sys.port_name(*a).cmp(&sys.port_name(*b)));
        last = raw
            .drain(..)
            .map(|(addr, payload)| {
                let (i, p) = sys.port_name(addr);
                Observed { step, iface: i.to_string(), port: p.to_string(), payload }
            })
            .collect();
        view.outputs.extend(last.iter().cloned());
    }
    Err(ResourceError::EventLimit)
}

/// Honest users plus an adversary on the outer interfaces: step 0 sets the
/// levers and hands out the PSKs, later steps pass every leaked qubit
/// through the adversary and inject the result.
pub struct ProtocolEnvironment<'a> {
    adversary: &'a dyn AdversaryStrategy,
    seed: u64,
    epoch: u64,
    psks: Vec<(String, Psk)>,
    levers: Vec<bool>,
    rounds_seen: Vec<usize>,
    pub observations: Vec<Observation>,
}

impl<'a> ProtocolEnvironment<'a> {
    /// Levers default to what the adversary chooses for `epoch`.
    pub fn new(
        adversary: &'a dyn AdversaryStrategy,
        seed: u64,
        epoch: u64,
        hops: usize,
        psks: Vec<(String, Psk)>,
    ) -> Self {
        let levers = (0..hops).map(|h| adversary.lever(epoch, h)).collect();
        ProtocolEnvironment {
            adversary,
            seed,
            epoch,
            psks,
            levers,
            rounds_seen: vec![0; hops],
            observations: Vec::new(),
        }
    }

    pub fn with_levers(mut self, levers: Vec<bool>) -> Self {
        self.levers = levers;
        self
    }

    /// Equal PSKs for all `users`.
    pub fn equal_psks(users: &[String]) -> Vec<(String, Psk)> {
        users.iter().map(|u| (u.clone(), Psk(0))).collect()
    }
}

impl Environment for ProtocolEnvironment<'_> {
    fn step(&mut self, step: usize, outputs: &[Observed]) -> Vec<(String, String, Payload)> {
        if step == 0 {
            let mut v: Vec<_> = self
                .levers
                .iter()
                .enumerate()
                .map(|(h, &l)| (format!("a{h}"), "lever".to_string(), Payload::Lever(l)))
                .collect();
            v.extend(self.psks.iter().map(|(u, p)| (u.clone(), "psk".to_string(), Payload::Psk(*p))));
            return v;
        }
        let mut v = Vec::new();
        for o in outputs {
            let (Payload::Qubit(q), "leak") = (&o.payload, o.port.as_str()) else { continue };
            let Some(hop) = o.iface.strip_prefix('q').and_then(|h| h.parse::<usize>().ok()) else { continue };
            let round = self.rounds_seen[hop];
            self.rounds_seen[hop] += 1;
            let injected = q.clone().and_then(|q| {
                let ctx = QubitContext { epoch: self.epoch, hop, round };
                let step = if self.adversary.uses_randomness(hop) {
                    self.adversary.on_qubit(ctx, q, &mut adversary_rng(self.seed, self.epoch, hop, round))
                } else {
                    self.adversary.on_qubit(ctx, q, &mut SeededRng::seed_from_u64(0))
                };
                self.observations.extend(step.observation);
                step.qubit
            });
            v.push((o.iface.clone(), "inject".to_string(), Payload::Qubit(injected)));
        }
        v
    }
}

/// Convenience: was a message delivered as opposed to blocked or rejected?
pub fn delivered(d: &Delivery) -> bool {
    matches!(d, Delivery::Delivered(_))
}
