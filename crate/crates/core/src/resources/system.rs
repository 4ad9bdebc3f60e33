use super::channels::{Delivery, LineMessage, Psk};
use crate::adversary::Qubit;
use crate::Bits;
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResourceError {
    #[error("unknown interface `{0}`")]
    UnknownInterface(String),
    #[error("unknown port `{iface}.{port}`")]
    UnknownPort { iface: String, port: String },
    #[error("port `{iface}.{port}` is not an input")]
    NotAnInput { iface: String, port: String },
    #[error("port `{iface}.{port}` carries {expected}, got {got}")]
    PayloadViolation { iface: String, port: String, expected: PortKind, got: PortKind },
    #[error("system `{system}` emitted on undeclared or input port {detail}")]
    UndeclaredOutput { system: String, detail: String },
    #[error("interfaces cannot be joined: {0}")]
    InterfaceMismatch(String),
    #[error("duplicate name: {0}")]
    Duplicate(String),
    #[error("event limit exceeded")]
    EventLimit,
    #[error("invalid setup: {0}")]
    Setup(String),
}

/// Payload types carried by ports. A quantum port carries exactly one qubit
/// or nothing; there is no multi-qubit payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PortKind {
    Qubit,
    Classical,
    Delivery,
    Psk,
    Lever,
    Key,
    Size,
}

impl fmt::Display for PortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// `None` is an empty slot: the qubit was lost or withheld.
    Qubit(Option<Qubit>),
    Classical(LineMessage),
    Delivery(Delivery),
    Psk(Psk),
    Lever(bool),
    /// `None` is the abort symbol ⊥.
    Key(Option<Bits>),
    Size(usize),
}

impl Payload {
    pub fn kind(&self) -> PortKind {
        match self {
            Payload::Qubit(_) => PortKind::Qubit,
            Payload::Classical(_) => PortKind::Classical,
            Payload::Delivery(_) => PortKind::Delivery,
            Payload::Psk(_) => PortKind::Psk,
            Payload::Lever(_) => PortKind::Lever,
            Payload::Key(_) => PortKind::Key,
            Payload::Size(_) => PortKind::Size,
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Qubit(Some(_)) => f.write_str("qubit"),
            Payload::Qubit(None) => f.write_str("none"),
            Payload::Classical(m) => write!(f, "{m}"),
            Payload::Delivery(d) => write!(f, "{d}"),
            Payload::Psk(p) => write!(f, "psk {}", p.0),
            Payload::Lever(l) => write!(f, "lever {}", *l as u8),
            Payload::Key(Some(k)) => write!(f, "key {}", crate::postproc::bit_string(k)),
            Payload::Key(None) => f.write_str("key ⊥"),
            Payload::Size(s) => write!(f, "size {s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortSpec {
    pub name: String,
    pub direction: Direction,
    pub kind: PortKind,
}

impl PortSpec {
    pub fn input(name: &str, kind: PortKind) -> Self {
        PortSpec { name: name.into(), direction: Direction::In, kind }
    }

    pub fn output(name: &str, kind: PortKind) -> Self {
        PortSpec { name: name.into(), direction: Direction::Out, kind }
    }
}

/// Who is expected to connect to an interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InterfaceLabel {
    /// An honest party.
    User,
    /// Wiring between subsystems.
    Inner,
    /// The adversary or distinguisher.
    Outer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceSpec {
    pub name: String,
    pub label: InterfaceLabel,
    pub ports: Vec<PortSpec>,
}

impl InterfaceSpec {
    pub fn new(name: &str, label: InterfaceLabel, ports: Vec<PortSpec>) -> Self {
        InterfaceSpec { name: name.into(), label, ports }
    }

    pub fn port_index(&self, port: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name == port)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortAddr {
    pub iface: usize,
    pub port: usize,
}

impl PortAddr {
    pub const fn new(iface: usize, port: usize) -> Self {
        PortAddr { iface, port }
    }
}

/// Transition function of an atomic system. Implementations must only emit
/// on their own declared output ports; [`System`] checks this.
pub trait Behavior: Send {
    fn input(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError>;
}

struct Leaf {
    name: String,
    interfaces: Vec<InterfaceSpec>,
    behavior: Box<dyn Behavior>,
}

impl Leaf {
    fn input(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError> {
        let start = out.len();
        self.behavior.input(at, payload, out)?;
        for (addr, p) in &out[start..] {
            let spec = self.interfaces.get(addr.iface).and_then(|i| i.ports.get(addr.port));
            match spec {
                Some(s) if s.direction == Direction::Out && s.kind == p.kind() => {}
                _ => {
                    return Err(ResourceError::UndeclaredOutput {
                        system: self.name.clone(),
                        detail: format!("{addr:?} with {}", p.kind()),
                    })
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Route {
    External(PortAddr),
    Wire(usize, PortAddr),
    Unrouted,
}

/// A flat network of atomic parts: external input ports map to part inputs,
/// part outputs map to external outputs or to other parts' inputs.
struct Network {
    parts: Vec<Leaf>,
    /// Per external interface and port: target part input (inputs only).
    ext_in: Vec<Vec<Option<(usize, PortAddr)>>>,
    /// Per part, interface and port: where the output goes.
    routes: Vec<Vec<Vec<Route>>>,
}

const EVENT_LIMIT: usize = 50_000_000;

impl Network {
    fn single(leaf: Leaf) -> Self {
        let ext_in = leaf
            .interfaces
            .iter()
            .enumerate()
            .map(|(i, iface)| {
                iface
                    .ports
                    .iter()
                    .enumerate()
                    .map(|(p, s)| (s.direction == Direction::In).then_some((0, PortAddr::new(i, p))))
                    .collect()
            })
            .collect();
        let routes = vec![leaf
            .interfaces
            .iter()
            .enumerate()
            .map(|(i, iface)| {
                iface
                    .ports
                    .iter()
                    .enumerate()
                    .map(|(p, s)| match s.direction {
                        Direction::Out => Route::External(PortAddr::new(i, p)),
                        Direction::In => Route::Unrouted,
                    })
                    .collect()
            })
            .collect()];
        Network { parts: vec![leaf], ext_in, routes }
    }

    fn input(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError> {
        let (part, addr) = self.ext_in[at.iface][at.port]
            .ok_or_else(|| ResourceError::Setup(format!("external input {at:?} unrouted")))?;
        let mut queue = VecDeque::from([(part, addr, payload)]);
        let mut produced = Vec::new();
        let mut steps = 0usize;
        while let Some((part, addr, payload)) = queue.pop_front() {
            steps += 1;
            if steps > EVENT_LIMIT {
                return Err(ResourceError::EventLimit);
            }
            produced.clear();
            self.parts[part].input(addr, payload, &mut produced)?;
            for (o, p) in produced.drain(..) {
                match self.routes[part][o.iface][o.port] {
                    Route::External(e) => out.push((e, p)),
                    Route::Wire(q, a) => queue.push_back((q, a, p)),
                    Route::Unrouted => {
                        return Err(ResourceError::UndeclaredOutput {
                            system: self.parts[part].name.clone(),
                            detail: format!("{o:?} is not routed"),
                        })
                    }
                }
            }
        }
        Ok(())
    }

    /// Renumbers external references through `map` (old iface index to new
    /// iface index and port offset; `None` drops the interface).
    fn remap_external(&mut self, map: &[Option<(usize, usize)>]) {
        for part in &mut self.routes {
            for iface in part {
                for r in iface {
                    if let Route::External(a) = *r {
                        *r = match map[a.iface] {
                            Some((ni, off)) => Route::External(PortAddr::new(ni, a.port + off)),
                            None => Route::Unrouted,
                        };
                    }
                }
            }
        }
    }

    /// Appends `other`'s parts, shifting its part indices.
    fn absorb(&mut self, other: Network) -> usize {
        let shift = self.parts.len();
        self.parts.extend(other.parts);
        for mut part in other.routes {
            for iface in &mut part {
                for r in iface {
                    if let Route::Wire(q, a) = *r {
                        *r = Route::Wire(q + shift, a);
                    }
                }
            }
            self.routes.push(part);
        }
        shift
    }

    /// Part output port feeding external output `ext`, if any.
    fn source_of(&self, ext: PortAddr) -> Option<(usize, PortAddr)> {
        for (pi, part) in self.routes.iter().enumerate() {
            for (ii, iface) in part.iter().enumerate() {
                for (po, r) in iface.iter().enumerate() {
                    if *r == Route::External(ext) {
                        return Some((pi, PortAddr::new(ii, po)));
                    }
                }
            }
        }
        None
    }
}

enum Body {
    Leaf(Leaf),
    Network(Network),
}

/// A system with named, typed interfaces.
pub struct System {
    name: String,
    interfaces: Vec<InterfaceSpec>,
    body: Body,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System").field("name", &self.name).field("interfaces", &self.interfaces).finish()
    }
}

fn check_unique(interfaces: &[InterfaceSpec]) -> Result<(), ResourceError> {
    for (i, a) in interfaces.iter().enumerate() {
        if interfaces[..i].iter().any(|b| b.name == a.name) {
            return Err(ResourceError::Duplicate(format!("interface `{}`", a.name)));
        }
        for (j, p) in a.ports.iter().enumerate() {
            if a.ports[..j].iter().any(|q| q.name == p.name) {
                return Err(ResourceError::Duplicate(format!("port `{}.{}`", a.name, p.name)));
            }
        }
    }
    Ok(())
}

impl System {
    pub fn new(name: &str, interfaces: Vec<InterfaceSpec>, behavior: Box<dyn Behavior>) -> Result<Self, ResourceError> {
        check_unique(&interfaces)?;
        let leaf = Leaf { name: name.into(), interfaces: interfaces.clone(), behavior };
        Ok(System { name: name.into(), interfaces, body: Body::Leaf(leaf) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn interfaces(&self) -> &[InterfaceSpec] {
        &self.interfaces
    }

    pub fn interface(&self, name: &str) -> Option<&InterfaceSpec> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn interface_index(&self, name: &str) -> Result<usize, ResourceError> {
        self.interfaces.iter().position(|i| i.name == name).ok_or_else(|| ResourceError::UnknownInterface(name.into()))
    }

    pub fn port_addr(&self, iface: &str, port: &str) -> Result<PortAddr, ResourceError> {
        let i = self.interface_index(iface)?;
        let p = self.interfaces[i]
            .port_index(port)
            .ok_or_else(|| ResourceError::UnknownPort { iface: iface.into(), port: port.into() })?;
        Ok(PortAddr::new(i, p))
    }

    pub fn port_name(&self, addr: PortAddr) -> (&str, &str) {
        let i = &self.interfaces[addr.iface];
        (&i.name, &i.ports[addr.port].name)
    }

    /// Number of atomic parts.
    pub fn parts(&self) -> usize {
        match &self.body {
            Body::Leaf(_) => 1,
            Body::Network(n) => n.parts.len(),
        }
    }

    /// Feeds one input and returns every output it causes, in causal order.
    pub fn input(&mut self, at: PortAddr, payload: Payload) -> Result<Vec<(PortAddr, Payload)>, ResourceError> {
        let mut out = Vec::new();
        self.input_into(at, payload, &mut out)?;
        Ok(out)
    }

    pub fn input_into(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError> {
        let iface =
            self.interfaces.get(at.iface).ok_or_else(|| ResourceError::UnknownInterface(format!("#{}", at.iface)))?;
        let spec = iface
            .ports
            .get(at.port)
            .ok_or_else(|| ResourceError::UnknownPort { iface: iface.name.clone(), port: format!("#{}", at.port) })?;
        if spec.direction != Direction::In {
            return Err(ResourceError::NotAnInput { iface: iface.name.clone(), port: spec.name.clone() });
        }
        if spec.kind != payload.kind() {
            return Err(ResourceError::PayloadViolation {
                iface: iface.name.clone(),
                port: spec.name.clone(),
                expected: spec.kind,
                got: payload.kind(),
            });
        }
        match &mut self.body {
            Body::Leaf(l) => l.input(at, payload, out),
            Body::Network(n) => n.input(at, payload, out),
        }
    }

    pub fn input_named(
        &mut self,
        iface: &str,
        port: &str,
        payload: Payload,
    ) -> Result<Vec<(PortAddr, Payload)>, ResourceError> {
        let at = self.port_addr(iface, port)?;
        self.input(at, payload)
    }

    fn into_network(self) -> (String, Vec<InterfaceSpec>, Network) {
        match self.body {
            Body::Leaf(l) => (self.name, self.interfaces, Network::single(l)),
            Body::Network(n) => (self.name, self.interfaces, n),
        }
    }

    pub fn rename(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    pub fn rename_interface(mut self, old: &str, new: &str) -> Result<Self, ResourceError> {
        let i = self.interface_index(old)?;
        if old != new && self.interface(new).is_some() {
            return Err(ResourceError::Duplicate(format!("interface `{new}`")));
        }
        self.interfaces[i].name = new.into();
        if let Body::Leaf(l) = &mut self.body {
            l.interfaces[i].name = new.into();
        }
        Ok(self)
    }

    /// Replaces the interfaces in `parts` by one interface `name` holding
    /// their ports in order, each renamed `<old interface>.<port>`.
    pub fn merge_interfaces(self, name: &str, label: InterfaceLabel, parts: &[&str]) -> Result<Self, ResourceError> {
        let idx: Vec<usize> = parts.iter().map(|p| self.interface_index(p)).collect::<Result<_, _>>()?;
        if idx.is_empty() {
            return Err(ResourceError::Setup("nothing to merge".into()));
        }
        let (sys_name, interfaces, mut net) = self.into_network();
        let first = *idx.iter().min().unwrap();
        let mut new_ifaces = Vec::new();
        let mut map: Vec<Option<(usize, usize)>> = vec![None; interfaces.len()];
        let mut merged = InterfaceSpec::new(name, label, Vec::new());
        let mut merged_in = Vec::new();
        let mut offsets = vec![0usize; interfaces.len()];
        for &i in &idx {
            offsets[i] = merged.ports.len();
            for p in &interfaces[i].ports {
                merged.ports.push(PortSpec { name: format!("{}.{}", interfaces[i].name, p.name), ..p.clone() });
            }
            merged_in.extend(net.ext_in[i].iter().copied());
        }
        let mut new_ext_in = Vec::new();
        for (i, iface) in interfaces.into_iter().enumerate() {
            if i == first {
                for &j in &idx {
                    map[j] = Some((new_ifaces.len(), offsets[j]));
                }
                new_ifaces.push(merged.clone());
                new_ext_in.push(std::mem::take(&mut merged_in));
            }
            if idx.contains(&i) {
                continue;
            }
            map[i] = Some((new_ifaces.len(), 0));
            new_ifaces.push(iface);
            new_ext_in.push(std::mem::take(&mut net.ext_in[i]));
        }
        net.ext_in = new_ext_in;
        net.remap_external(&map);
        check_unique(&new_ifaces)?;
        Ok(System { name: sys_name, interfaces: new_ifaces, body: Body::Network(net) })
    }
}

/// Gives colliding interface names a `<system>.` prefix.
fn disambiguate(a_name: &str, a: &mut [InterfaceSpec], b_name: &str, b: &mut [InterfaceSpec]) {
    let clashes: Vec<String> =
        a.iter().filter(|x| b.iter().any(|y| y.name == x.name)).map(|x| x.name.clone()).collect();
    for c in clashes {
        let (na, nb) = if a_name != b_name {
            (format!("{a_name}.{c}"), format!("{b_name}.{c}"))
        } else {
            (format!("{a_name}#1.{c}"), format!("{b_name}#2.{c}"))
        };
        a.iter_mut().filter(|x| x.name == c).for_each(|x| x.name = na.clone());
        b.iter_mut().filter(|x| x.name == c).for_each(|x| x.name = nb.clone());
    }
}

/// `R ∥ S`: both systems side by side, interfaces of both, no interaction.
pub fn compose_parallel(r: System, s: System) -> System {
    let (rn, mut ri, mut rnet) = r.into_network();
    let (sn, mut si, mut snet) = s.into_network();
    disambiguate(&rn, &mut ri, &sn, &mut si);
    let offset = ri.len();
    let map: Vec<Option<(usize, usize)>> = (0..si.len()).map(|i| Some((i + offset, 0))).collect();
    snet.remap_external(&map);
    let shift = rnet.absorb(Network { parts: snet.parts, ext_in: Vec::new(), routes: snet.routes });
    rnet.ext_in
        .extend(snet.ext_in.into_iter().map(|v| v.into_iter().map(|t| t.map(|(p, a)| (p + shift, a))).collect()));
    ri.extend(si);
    System { name: format!("{rn}||{sn}"), interfaces: ri, body: Body::Network(rnet) }
}

/// Plugs interface `at.0` of `r` into interface `at.1` of `s`. Ports pair up
/// by position and must have opposite directions and equal payload types.
pub fn compose_sequential(r: System, s: System, at: (&str, &str)) -> Result<System, ResourceError> {
    let ri_idx = r.interface_index(at.0)?;
    let si_idx = s.interface_index(at.1)?;
    {
        let (a, b) = (&r.interfaces[ri_idx], &s.interfaces[si_idx]);
        if a.ports.len() != b.ports.len() {
            return Err(ResourceError::InterfaceMismatch(format!(
                "`{}` has {} ports, `{}` has {}",
                a.name,
                a.ports.len(),
                b.name,
                b.ports.len()
            )));
        }
        for (p, q) in a.ports.iter().zip(&b.ports) {
            if p.direction == q.direction || p.kind != q.kind {
                return Err(ResourceError::InterfaceMismatch(format!(
                    "`{}.{}` vs `{}.{}`",
                    a.name, p.name, b.name, q.name
                )));
            }
        }
    }
    let (rn, ri, mut rnet) = r.into_network();
    let (sn, si, snet) = s.into_network();
    let ports = ri[ri_idx].ports.clone();
    // Remember the wiring endpoints before renumbering.
    let r_src: Vec<Option<(usize, PortAddr)>> =
        (0..ports.len()).map(|k| rnet.source_of(PortAddr::new(ri_idx, k))).collect();
    let s_src: Vec<Option<(usize, PortAddr)>> =
        (0..ports.len()).map(|k| snet.source_of(PortAddr::new(si_idx, k))).collect();
    let r_tgt: Vec<Option<(usize, PortAddr)>> = rnet.ext_in[ri_idx].clone();
    let s_tgt: Vec<Option<(usize, PortAddr)>> = snet.ext_in[si_idx].clone();

    let mut ri_rest = ri;
    ri_rest.remove(ri_idx);
    let mut si_rest = si;
    si_rest.remove(si_idx);
    disambiguate(&rn, &mut ri_rest, &sn, &mut si_rest);

    let r_map: Vec<Option<(usize, usize)>> = (0..=ri_rest.len())
        .map(|i| match i.cmp(&ri_idx) {
            std::cmp::Ordering::Less => Some((i, 0)),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some((i - 1, 0)),
        })
        .collect();
    let base = ri_rest.len();
    let s_map: Vec<Option<(usize, usize)>> = (0..=si_rest.len())
        .map(|i| match i.cmp(&si_idx) {
            std::cmp::Ordering::Less => Some((base + i, 0)),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some((base + i - 1, 0)),
        })
        .collect();
    rnet.remap_external(&r_map);
    let mut snet = snet;
    snet.remap_external(&s_map);
    let mut r_ext_in = std::mem::take(&mut rnet.ext_in);
    r_ext_in.remove(ri_idx);
    let mut s_ext_in = std::mem::take(&mut snet.ext_in);
    s_ext_in.remove(si_idx);
    let shift = rnet.absorb(Network { parts: snet.parts, ext_in: Vec::new(), routes: snet.routes });
    let shifted = |t: Option<(usize, PortAddr)>| t.map(|(p, a)| (p + shift, a));

    for (k, spec) in ports.iter().enumerate() {
        let (src, tgt) = match spec.direction {
            // r's input is fed by s's output
            Direction::In => (s_src[k].map(|(p, a)| (p + shift, a)), r_tgt[k]),
            Direction::Out => (r_src[k], shifted(s_tgt[k])),
        };
        if let (Some((sp, sa)), Some((tp, ta))) = (src, tgt) {
            rnet.routes[sp][sa.iface][sa.port] = Route::Wire(tp, ta);
        }
    }
    r_ext_in.extend(s_ext_in.into_iter().map(|v| v.into_iter().map(shifted).collect()));
    rnet.ext_in = r_ext_in;
    let mut interfaces = ri_rest;
    interfaces.extend(si_rest);
    check_unique(&interfaces)?;
    Ok(System { name: format!("{rn}∘{sn}"), interfaces, body: Body::Network(rnet) })
}
