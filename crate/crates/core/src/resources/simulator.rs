use super::channels::Psk;
use super::ideal::{ideal_key, IdealKeyConfig};
use super::qline::{outer_interfaces, qline_system, QlineSpec};
use super::system::{
    compose_sequential, Behavior, InterfaceLabel, InterfaceSpec, Payload, PortAddr, PortKind, PortSpec, ResourceError,
    System,
};

/// How σ reacts to a zero key size from K.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SigmaVariant {
    Faithful,
    /// Ignores s = 0 and always runs with equal PSKs. Only useful as a
    /// negative control.
    IgnoresMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PskMode {
    Equal,
    Mismatched,
}

/// Observable state of σ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulatorState {
    /// Whether the lever of K was pulled; set once the internal run is over.
    pub lever_forwarded: Option<bool>,
    pub psk_mode: Option<PskMode>,
}

struct Sigma {
    ql: System,
    variant: SigmaVariant,
    /// σ interface index (≥ 1) → internal QL interface index.
    to_ql: Vec<usize>,
    /// internal QL interface index → σ interface index, outer ones only.
    from_ql: Vec<Option<usize>>,
    users: Vec<PortAddr>,
    keeper_ifaces: [usize; 2],
    results: [Option<bool>; 2],
    state: SimulatorState,
}

const INNER: usize = 0;
const INNER_LEVER: usize = 1;

impl Sigma {
    fn relay(&mut self, outs: Vec<(PortAddr, Payload)>, out: &mut Vec<(PortAddr, Payload)>) {
        for (addr, p) in outs {
            if let Some(i) = self.from_ql[addr.iface] {
                out.push((PortAddr::new(i, addr.port), p));
            } else if let Some(k) = self.keeper_ifaces.iter().position(|&i| i == addr.iface) {
                // Key outputs of the internal run are dropped; only success matters.
                if let Payload::Key(key) = p {
                    self.results[k].get_or_insert(key.is_some());
                }
            }
        }
        if self.state.lever_forwarded.is_none() && self.results.iter().all(Option::is_some) {
            let pulled = self.results.contains(&Some(false));
            self.state.lever_forwarded = Some(pulled);
            out.push((PortAddr::new(INNER, INNER_LEVER), Payload::Lever(pulled)));
        }
    }
}

impl Behavior for Sigma {
    fn input(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError> {
        let mut outs = Vec::new();
        if at.iface == INNER {
            let Payload::Size(s) = payload else { unreachable!("validated by System") };
            if self.state.psk_mode.is_some() {
                return Ok(());
            }
            let mode =
                if s == 0 && self.variant == SigmaVariant::Faithful { PskMode::Mismatched } else { PskMode::Equal };
            self.state.psk_mode = Some(mode);
            for (i, addr) in self.users.clone().into_iter().enumerate() {
                let psk = match mode {
                    PskMode::Equal => Psk(0),
                    PskMode::Mismatched => Psk(i as u64 + 1),
                };
                self.ql.input_into(addr, Payload::Psk(psk), &mut outs)?;
            }
        } else {
            let target = PortAddr::new(self.to_ql[at.iface], at.port);
            self.ql.input_into(target, payload, &mut outs)?;
        }
        self.relay(outs, out);
        Ok(())
    }
}

/// σ for the QL variant `spec`. Its `inner` interface plugs into K's outer
/// interface; the rest mirror the QL outer interfaces one to one (`q{h}`:
/// qubit leak and inject of hop h, `a{h}`: message copies and lever of hop
/// h). It runs the protocol internally with seed `seed` and pulls K's lever
/// iff that run aborts.
pub fn simulator_sigma(spec: &QlineSpec, seed: u64, variant: SigmaVariant) -> Result<System, ResourceError> {
    let ql = qline_system(spec, seed)?;
    let mut ifaces = vec![InterfaceSpec::new(
        "inner",
        InterfaceLabel::Inner,
        vec![PortSpec::input("size", PortKind::Size), PortSpec::output("lever", PortKind::Lever)],
    )];
    let mut to_ql = vec![usize::MAX];
    let mut from_ql = vec![None; ql.interfaces().len()];
    for name in outer_interfaces(spec.line) {
        let i = ql.interface_index(&name)?;
        from_ql[i] = Some(ifaces.len());
        to_ql.push(i);
        ifaces.push(ql.interfaces()[i].clone());
    }
    let users = spec.users().iter().map(|u| ql.port_addr(u, "psk")).collect::<Result<Vec<_>, _>>()?;
    let keeper_ifaces =
        [ql.interface_index(&spec.line.label(spec.keepers.0))?, ql.interface_index(&spec.line.label(spec.keepers.1))?];
    let sigma = Sigma {
        ql,
        variant,
        to_ql,
        from_ql,
        users,
        keeper_ifaces,
        results: [None; 2],
        state: SimulatorState { lever_forwarded: None, psk_mode: None },
    };
    System::new(&format!("sigma_{}", spec.pair_label()), ifaces, Box::new(sigma))
}

/// Configuration of K matching `spec`. The key length is the fixed final
/// key length of the post-processing configuration.
pub fn ideal_key_config(spec: &QlineSpec) -> Result<IdealKeyConfig, ResourceError> {
    let key_len = spec
        .postproc
        .final_key_len
        .ok_or_else(|| ResourceError::Setup("the ideal key needs a fixed final key length".into()))?;
    Ok(IdealKeyConfig { key_len, users: spec.users(), keepers: (spec.keepers.0.position(), spec.keepers.1.position()) })
}

/// `K ∘ σ`.
pub fn ideal_system(spec: &QlineSpec, seed: u64, variant: SigmaVariant) -> Result<System, ResourceError> {
    let k = ideal_key(&ideal_key_config(spec)?, seed)?;
    let sigma = simulator_sigma(spec, seed, variant)?;
    Ok(compose_sequential(k, sigma, ("outer", "inner"))?.rename(&format!("K∘sigma_{}", spec.pair_label())))
}
