use super::channels::{Delivery, Dest, LineMessage, MsgBody, Psk};
use super::system::{
    Behavior, InterfaceLabel, InterfaceSpec, Payload, PortAddr, PortKind, PortSpec, ResourceError, System,
};
use crate::adversary::Qubit;
use crate::postproc::{Endpoint, PostprocConfig, PublicMsg, Side, Step};
use crate::protocol::{
    alice_prepare, charlie_transform, correction_term, node_rng, postproc_rng, sift, Detector, Line, NodeKind, NodeRole,
};
use crate::qmath::MeasureOutcome;
use crate::transcript::AbortReason;
use crate::Bits;
use rand::Rng;

/// Port indices inside a node's interfaces.
mod port {
    pub const QUBIT: usize = 0;
    pub const SEND: usize = 1;
    pub const AUTH: usize = 3;
    pub const KEY: usize = 1;
}

/// Everything a node needs to know before the run starts.
#[derive(Clone, Debug)]
pub struct NodeSpec {
    pub line: Line,
    pub position: usize,
    pub rounds: usize,
    pub keepers: (NodeRole, NodeRole),
    pub postproc: PostprocConfig,
    pub detector: Detector,
    pub seed: u64,
    pub epoch: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Running,
    Finished,
    Aborted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Face {
    Up,
    Down,
}

struct Node {
    spec: NodeSpec,
    role: NodeRole,
    user: usize,
    up: Option<usize>,
    down: Option<usize>,
    keeper: bool,
    psk: Option<Psk>,
    bases: Bits,
    values: Bits,
    outcomes: Vec<MeasureOutcome>,
    received: usize,
    announcements: Vec<Option<Bits>>,
    conclusive: Option<Bits>,
    announced: bool,
    sifted: Option<Bits>,
    reveals: Vec<Option<Bits>>,
    endpoint: Option<Endpoint>,
    pending: Vec<PublicMsg>,
    status: Status,
}

type Out = Vec<(PortAddr, Payload)>;

impl Node {
    fn is_alice(&self) -> bool {
        self.role.kind() == NodeKind::Alice
    }

    fn is_bob(&self) -> bool {
        self.role.kind() == NodeKind::Bob
    }

    fn face(&self, iface: usize) -> Face {
        if Some(iface) == self.up {
            Face::Up
        } else {
            Face::Down
        }
    }

    fn face_iface(&self, face: Face) -> Option<usize> {
        match face {
            Face::Up => self.up,
            Face::Down => self.down,
        }
    }

    fn hop_of(&self, face: Face) -> usize {
        match face {
            Face::Up => self.role.position() - 1,
            Face::Down => self.role.position(),
        }
    }

    fn send(&self, face: Face, msg: LineMessage, out: &mut Out) {
        if let Some(i) = self.face_iface(face) {
            out.push((PortAddr::new(i, port::SEND), Payload::Classical(msg)));
        }
    }

    fn broadcast(&self, body: MsgBody, out: &mut Out) {
        let msg = LineMessage { from: self.role.position(), to: Dest::All, body };
        self.send(Face::Up, msg.clone(), out);
        self.send(Face::Down, msg, out);
    }

    fn send_to(&self, to: usize, body: MsgBody, out: &mut Out) {
        let face = if to < self.role.position() { Face::Up } else { Face::Down };
        self.send(face, LineMessage { from: self.role.position(), to: Dest::Node(to), body }, out);
    }

    fn output_key(&self, key: Option<Bits>, out: &mut Out) {
        if self.keeper {
            out.push((PortAddr::new(self.user, port::KEY), Payload::Key(key)));
        }
    }

    fn abort(&mut self, reason: AbortReason, out: &mut Out) {
        if self.status != Status::Running {
            return;
        }
        self.status = Status::Aborted;
        self.broadcast(MsgBody::Abort { reason: reason.code().to_string() }, out);
        self.output_key(None, out);
    }

    fn on_psk(&mut self, psk: Psk, out: &mut Out) {
        if self.psk.is_some() {
            return;
        }
        self.psk = Some(psk);
        for i in [self.up, self.down].into_iter().flatten() {
            out.push((PortAddr::new(i, port::AUTH), Payload::Psk(psk)));
        }
        if self.is_alice() {
            let down = self.down.expect("alice has a successor");
            for round in 0..self.spec.rounds {
                let mut rng = node_rng(self.spec.seed, self.spec.epoch, 0, round);
                let (b, r) = (rng.random::<bool>(), rng.random::<bool>());
                self.bases.push(b);
                self.values.push(r);
                let q = Qubit::from_state(alice_prepare(b, r));
                out.push((PortAddr::new(down, port::QUBIT), Payload::Qubit(Some(q))));
            }
        }
    }

    fn on_qubit(&mut self, q: Option<Qubit>, out: &mut Out) {
        if self.received >= self.spec.rounds || self.status != Status::Running {
            return;
        }
        let round = self.received;
        self.received += 1;
        let mut rng = node_rng(self.spec.seed, self.spec.epoch, self.role.position(), round);
        let b = rng.random::<bool>();
        self.bases.push(b);
        if self.is_bob() {
            let outcome = match q {
                Some(q) => self.spec.detector.measure(q.state(), b, &mut rng),
                None => MeasureOutcome::Inconclusive,
            };
            self.outcomes.push(outcome);
            if self.received == self.spec.rounds {
                let conclusive: Bits = self.outcomes.iter().map(|o| o.is_conclusive()).collect();
                self.announcements[self.role.position()] = Some(self.bases.clone());
                self.conclusive = Some(conclusive.clone());
                self.announced = true;
                self.broadcast(MsgBody::Announce { bases: self.bases.clone(), conclusive: Some(conclusive) }, out);
                self.try_sift(out);
            }
        } else {
            let r = rng.random::<bool>();
            self.values.push(r);
            let down = self.down.expect("charlie has a successor");
            let q = q.map(|q| Qubit::from_state(charlie_transform(q.state(), b, r)));
            out.push((PortAddr::new(down, port::QUBIT), Payload::Qubit(q)));
        }
    }

    fn on_delivery(&mut self, face: Face, d: Delivery, out: &mut Out) {
        let msg = match d {
            Delivery::Delivered(m) => m,
            Delivery::Blocked => return self.abort(AbortReason::Blocked { hop: self.hop_of(face) }, out),
            Delivery::AuthFailed => return self.abort(AbortReason::AuthFailed { hop: self.hop_of(face) }, out),
        };
        if self.status == Status::Aborted {
            return;
        }
        let me = self.role.position();
        if msg.to != Dest::Node(me) {
            let onward = if face == Face::Up { Face::Down } else { Face::Up };
            self.send(onward, msg.clone(), out);
        }
        if msg.to == Dest::All || msg.to == Dest::Node(me) {
            self.process(msg, out);
        }
    }

    fn process(&mut self, msg: LineMessage, out: &mut Out) {
        let n = self.spec.rounds;
        match msg.body {
            MsgBody::Abort { .. } => {
                if self.status == Status::Running {
                    self.status = Status::Aborted;
                    self.output_key(None, out);
                }
            }
            _ if self.status != Status::Running => {}
            MsgBody::Announce { bases, conclusive } => {
                if bases.len() != n
                    || conclusive.as_ref().is_some_and(|c| c.len() != n)
                    || msg.from >= self.announcements.len()
                {
                    return self.abort(
                        AbortReason::Postproc(crate::postproc::PostprocError::Protocol(
                            "malformed announcement".into(),
                        )),
                        out,
                    );
                }
                self.announcements[msg.from] = Some(bases);
                if let Some(c) = conclusive {
                    self.conclusive = Some(c);
                }
                if msg.from == self.spec.line.bob().position() && !self.announced {
                    self.announced = true;
                    self.announcements[self.role.position()] = Some(self.bases.clone());
                    self.broadcast(MsgBody::Announce { bases: self.bases.clone(), conclusive: None }, out);
                }
                self.try_sift(out);
            }
            MsgBody::Reveal { key } => {
                if msg.from < self.reveals.len() {
                    self.reveals[msg.from] = Some(key);
                }
                self.try_combine(out);
            }
            MsgBody::Postproc(m) => match &mut self.endpoint {
                Some(ep) => {
                    let step = ep.receive(m);
                    self.handle_step(step, out);
                }
                None => self.pending.push(m),
            },
        }
    }

    fn try_sift(&mut self, out: &mut Out) {
        if self.sifted.is_some()
            || self.announcements.iter().any(Option::is_none)
            || self.bases.len() != self.spec.rounds
        {
            return;
        }
        let Some(conclusive) = self.conclusive.clone() else { return };
        let ann: Vec<Bits> = self.announcements.iter().map(|a| a.clone().unwrap_or_default()).collect();
        let kept = match sift(&ann, &conclusive) {
            Ok(k) => k,
            Err(e) => {
                return self.abort(AbortReason::Postproc(crate::postproc::PostprocError::Protocol(e.to_string())), out)
            }
        };
        let corrector = self.spec.line.corrector() == self.role;
        let mut bits = Vec::with_capacity(kept.len());
        for &i in &kept {
            let raw = if self.is_bob() { self.outcomes[i].bit().unwrap_or(false) } else { self.values[i] };
            let round_bases: Bits = ann.iter().map(|a| a[i]).collect();
            let corr = correction_term(&round_bases).unwrap_or(false);
            bits.push(raw ^ (corr && corrector));
        }
        self.sifted = Some(bits.clone());
        if !self.keeper {
            self.broadcast(MsgBody::Reveal { key: bits }, out);
        }
        self.try_combine(out);
    }

    fn try_combine(&mut self, out: &mut Out) {
        if !self.keeper || self.endpoint.is_some() || self.status != Status::Running {
            return;
        }
        let Some(mut key) = self.sifted.clone() else { return };
        let lo = self.spec.keepers.0;
        let revealers = self.spec.line.revealers(self.spec.keepers);
        let lower = self.role == lo;
        if lower {
            if revealers.iter().any(|r| self.reveals[r.position()].is_none()) {
                return;
            }
            for r in &revealers {
                let k = self.reveals[r.position()].as_ref().expect("checked");
                if k.len() != key.len() {
                    let e = crate::postproc::PostprocError::LengthMismatch { a: key.len(), b: k.len() };
                    return self.abort(AbortReason::Postproc(e), out);
                }
                key.iter_mut().zip(k).for_each(|(a, b)| *a ^= b);
            }
        }
        let side = if lower { Side::Initiator } else { Side::Responder };
        let rng = postproc_rng(self.spec.seed, self.spec.epoch, self.role.position());
        let mut ep = Endpoint::new(side, key, self.spec.postproc, self.spec.epoch, rng);
        let step = ep.start();
        self.endpoint = Some(ep);
        self.handle_step(step, out);
        for m in std::mem::take(&mut self.pending) {
            if self.status != Status::Running {
                break;
            }
            let step = self.endpoint.as_mut().expect("set above").receive(m);
            self.handle_step(step, out);
        }
    }

    fn peer(&self) -> usize {
        let (lo, hi) = self.spec.keepers;
        if self.role == lo {
            hi.position()
        } else {
            lo.position()
        }
    }

    fn handle_step(&mut self, step: Step, out: &mut Out) {
        let peer = self.peer();
        match step {
            Step::Send(msgs) => {
                for m in msgs {
                    self.send_to(peer, MsgBody::Postproc(m), out);
                }
            }
            Step::Finished { send, result } => {
                for m in send {
                    self.send_to(peer, MsgBody::Postproc(m), out);
                }
                match result {
                    Ok(key) => {
                        self.status = Status::Finished;
                        self.output_key(Some(key.bits), out);
                    }
                    Err(e) => self.abort(AbortReason::Postproc(e), out),
                }
            }
        }
    }
}

impl Behavior for Node {
    fn input(&mut self, at: PortAddr, payload: Payload, out: &mut Out) -> Result<(), ResourceError> {
        match payload {
            Payload::Psk(p) if at.iface == self.user => self.on_psk(p, out),
            Payload::Qubit(q) => self.on_qubit(q, out),
            Payload::Delivery(d) => {
                let face = self.face(at.iface);
                self.on_delivery(face, d, out)
            }
            other => return Err(ResourceError::Setup(format!("node cannot handle {}", other.kind()))),
        }
        Ok(())
    }
}

fn face_ports(up: bool) -> Vec<PortSpec> {
    let q = if up { PortSpec::input("qubit", PortKind::Qubit) } else { PortSpec::output("qubit", PortKind::Qubit) };
    vec![
        q,
        PortSpec::output("send", PortKind::Classical),
        PortSpec::input("recv", PortKind::Delivery),
        PortSpec::output("auth", PortKind::Psk),
    ]
}

/// The protocol machine π of the node at `spec.position`. Interfaces: the
/// user interface named after the node (`psk` in, `key` out for keepers) and
/// `<label>.up` / `<label>.down` towards its neighbours.
pub fn protocol_node(spec: NodeSpec) -> Result<System, ResourceError> {
    let line = spec.line;
    if spec.position >= line.parties() || spec.rounds == 0 {
        return Err(ResourceError::Setup(format!("bad node position {} or rounds {}", spec.position, spec.rounds)));
    }
    line.check_keepers(spec.keepers).map_err(|e| ResourceError::Setup(e.to_string()))?;
    let role = line.role(spec.position).ok_or_else(|| ResourceError::Setup(format!("no node at {}", spec.position)))?;
    let label = line.label(role);
    let keeper = role == spec.keepers.0 || role == spec.keepers.1;
    let mut user_ports = vec![PortSpec::input("psk", PortKind::Psk)];
    if keeper {
        user_ports.push(PortSpec::output("key", PortKind::Key));
    }
    let mut ifaces = vec![InterfaceSpec::new(&label, InterfaceLabel::User, user_ports)];
    let mut up = None;
    let mut down = None;
    if role.kind() != NodeKind::Alice {
        up = Some(ifaces.len());
        ifaces.push(InterfaceSpec::new(&format!("{label}.up"), InterfaceLabel::Inner, face_ports(true)));
    }
    if role.kind() != NodeKind::Bob {
        down = Some(ifaces.len());
        ifaces.push(InterfaceSpec::new(&format!("{label}.down"), InterfaceLabel::Inner, face_ports(false)));
    }
    let parties = line.parties();
    let rounds = spec.rounds;
    let node = Node {
        spec,
        role,
        user: 0,
        up,
        down,
        keeper,
        psk: None,
        bases: Vec::with_capacity(rounds),
        values: Vec::with_capacity(rounds),
        outcomes: Vec::new(),
        received: 0,
        announcements: vec![None; parties],
        conclusive: None,
        announced: false,
        sifted: None,
        reveals: vec![None; parties],
        endpoint: None,
        pending: Vec::new(),
        status: Status::Running,
    };
    System::new(&format!("pi_{label}"), ifaces, Box::new(node))
}
