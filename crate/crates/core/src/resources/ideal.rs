use super::channels::Psk;
use super::system::{
    Behavior, InterfaceLabel, InterfaceSpec, Payload, PortAddr, PortKind, PortSpec, ResourceError, System,
};
use crate::rng::{derive_rng, stream, SeededRng};
use rand::Rng;

/// Parameters of the ideal key resource K.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealKeyConfig {
    /// Key length S in bits.
    pub key_len: usize,
    /// User interface names in order.
    pub users: Vec<String>,
    /// Indices into `users` of the two parties that receive the key.
    pub keepers: (usize, usize),
}

impl IdealKeyConfig {
    pub fn validate(&self) -> Result<(), ResourceError> {
        let (a, b) = self.keepers;
        if self.key_len == 0 {
            return Err(ResourceError::Setup("ideal key length must be at least 1".into()));
        }
        if a == b || a >= self.users.len() || b >= self.users.len() {
            return Err(ResourceError::Setup(format!("bad keepers {:?} for {} users", self.keepers, self.users.len())));
        }
        Ok(())
    }
}

struct IdealKey {
    cfg: IdealKeyConfig,
    outer: usize,
    psks: Vec<Option<Psk>>,
    lever: Option<bool>,
    size_sent: bool,
    done: bool,
    rng: SeededRng,
}

const OUTER_SIZE: usize = 0;
const USER_KEY: usize = 1;

impl IdealKey {
    fn all_psks(&self) -> Option<bool> {
        let first = self.psks[0]?;
        let mut equal = true;
        for p in &self.psks {
            equal &= (*p)? == first;
        }
        Some(equal)
    }

    fn emit_keys(&self, key: Option<crate::Bits>, out: &mut Vec<(PortAddr, Payload)>) {
        for u in [self.cfg.keepers.0, self.cfg.keepers.1] {
            out.push((PortAddr::new(u, USER_KEY), Payload::Key(key.clone())));
        }
    }
}

impl Behavior for IdealKey {
    fn input(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError> {
        match payload {
            Payload::Psk(p) if at.iface < self.outer => {
                if self.psks[at.iface].is_none() {
                    self.psks[at.iface] = Some(p);
                }
                if !self.size_sent {
                    if let Some(equal) = self.all_psks() {
                        self.size_sent = true;
                        let s = if equal { self.cfg.key_len } else { 0 };
                        out.push((PortAddr::new(self.outer, OUTER_SIZE), Payload::Size(s)));
                    }
                }
            }
            Payload::Lever(l) => self.lever = Some(l),
            other => return Err(ResourceError::Setup(format!("K cannot handle {}", other.kind()))),
        }
        if self.done {
            return Ok(());
        }
        match (self.lever, self.all_psks()) {
            (Some(true), _) | (Some(false), Some(false)) => {
                self.done = true;
                self.emit_keys(None, out);
            }
            (Some(false), Some(true)) => {
                self.done = true;
                let key = (0..self.cfg.key_len).map(|_| self.rng.random::<bool>()).collect();
                self.emit_keys(Some(key), out);
            }
            _ => {}
        }
        Ok(())
    }
}

/// Resource K. Each user interface takes a PSK; the keepers' interfaces also
/// emit the key. Once all PSKs are in, the outer port reports the key size
/// (0 on mismatch). The outer lever decides the outcome: 1 gives ⊥ to both
/// keepers at once, 0 gives them the same uniform S-bit key if all PSKs
/// agree and ⊥ otherwise.
pub fn ideal_key(cfg: &IdealKeyConfig, seed: u64) -> Result<System, ResourceError> {
    cfg.validate()?;
    let mut ifaces: Vec<InterfaceSpec> = cfg
        .users
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut ports = vec![PortSpec::input("psk", PortKind::Psk)];
            if i == cfg.keepers.0 || i == cfg.keepers.1 {
                ports.push(PortSpec::output("key", PortKind::Key));
            }
            InterfaceSpec::new(u, InterfaceLabel::User, ports)
        })
        .collect();
    let outer = ifaces.len();
    ifaces.push(InterfaceSpec::new(
        "outer",
        InterfaceLabel::Outer,
        vec![PortSpec::output("size", PortKind::Size), PortSpec::input("lever", PortKind::Lever)],
    ));
    let k = IdealKey {
        cfg: cfg.clone(),
        outer,
        psks: vec![None; cfg.users.len()],
        lever: None,
        size_sent: false,
        done: false,
        rng: derive_rng(seed, &[stream::IDEAL_KEY]),
    };
    System::new("K", ifaces, Box::new(k))
}
