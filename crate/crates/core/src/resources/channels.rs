use super::system::{
    Behavior, InterfaceLabel, InterfaceSpec, Payload, PortAddr, PortKind, PortSpec, ResourceError, System,
};
use crate::postproc::{bit_string, PublicMsg};
use crate::Bits;
use std::fmt;

/// Opaque pre-shared key token. Only equality matters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Psk(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dest {
    All,
    Node(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MsgBody {
    /// Basis choices, plus Bob's conclusive flags.
    Announce {
        bases: Bits,
        conclusive: Option<Bits>,
    },
    Reveal {
        key: Bits,
    },
    Postproc(PublicMsg),
    Abort {
        reason: String,
    },
}

/// A classical message on the line, addressed by node position.
#[derive(Clone, Debug, PartialEq)]
pub struct LineMessage {
    pub from: usize,
    pub to: Dest,
    pub body: MsgBody,
}

impl LineMessage {
    pub fn is_abort(&self) -> bool {
        matches!(self.body, MsgBody::Abort { .. })
    }
}

impl fmt::Display for LineMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to {
            Dest::All => write!(f, "{}->*: ", self.from)?,
            Dest::Node(n) => write!(f, "{}->{}: ", self.from, n)?,
        }
        match &self.body {
            MsgBody::Announce { bases, conclusive: None } => write!(f, "bases {}", bit_string(bases)),
            MsgBody::Announce { bases, conclusive: Some(c) } => {
                write!(f, "bases {} conclusive {}", bit_string(bases), bit_string(c))
            }
            MsgBody::Reveal { key } => write!(f, "reveal {}", bit_string(key)),
            MsgBody::Postproc(m) => write!(f, "{m}"),
            MsgBody::Abort { reason } => write!(f, "abort {reason}"),
        }
    }
}

/// What the receiving end of an authenticated channel sees.
#[derive(Clone, Debug, PartialEq)]
pub enum Delivery {
    Delivered(LineMessage),
    /// The outer lever is pulled.
    Blocked,
    /// The two ends hold different pre-shared keys.
    AuthFailed,
}

impl fmt::Display for Delivery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delivery::Delivered(m) => write!(f, "delivered {m}"),
            Delivery::Blocked => f.write_str("blocked"),
            Delivery::AuthFailed => f.write_str("auth failed"),
        }
    }
}

pub mod q {
    //! Port layout of the quantum channel.
    use super::PortAddr;
    pub const SENDER: usize = 0;
    pub const RECEIVER: usize = 1;
    pub const OUTER: usize = 2;
    pub const IN: PortAddr = PortAddr::new(SENDER, 0);
    pub const OUT: PortAddr = PortAddr::new(RECEIVER, 0);
    pub const LEAK: PortAddr = PortAddr::new(OUTER, 0);
    pub const INJECT: PortAddr = PortAddr::new(OUTER, 1);
}

pub mod a {
    //! Port layout of the authenticated channel.
    pub const END0: usize = 0;
    pub const END1: usize = 1;
    pub const OUTER: usize = 2;
    pub const SEND: usize = 0;
    pub const RECV: usize = 1;
    pub const AUTH: usize = 2;
    pub const COPY: usize = 0;
    pub const LEVER: usize = 1;
}

struct QuantumChannel;

impl Behavior for QuantumChannel {
    fn input(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError> {
        match at {
            q::IN => out.push((q::LEAK, payload)),
            q::INJECT => out.push((q::OUT, payload)),
            _ => unreachable!("validated by System"),
        }
        Ok(())
    }
}

/// Resource Q: whatever the sender puts in leaves at the outer port, and the
/// receiver gets whatever the outer port injects.
pub fn quantum_channel() -> System {
    let ifaces = vec![
        InterfaceSpec::new("sender", InterfaceLabel::Inner, vec![PortSpec::input("in", PortKind::Qubit)]),
        InterfaceSpec::new("receiver", InterfaceLabel::Inner, vec![PortSpec::output("out", PortKind::Qubit)]),
        InterfaceSpec::new(
            "outer",
            InterfaceLabel::Outer,
            vec![PortSpec::output("leak", PortKind::Qubit), PortSpec::input("inject", PortKind::Qubit)],
        ),
    ];
    System::new("Q", ifaces, Box::new(QuantumChannel)).expect("static layout")
}

struct AuthChannel {
    psk_check: bool,
    keys: [Option<Psk>; 2],
    lever: bool,
}

impl Behavior for AuthChannel {
    fn input(
        &mut self,
        at: PortAddr,
        payload: Payload,
        out: &mut Vec<(PortAddr, Payload)>,
    ) -> Result<(), ResourceError> {
        match (at.iface, at.port, payload) {
            (end @ (a::END0 | a::END1), a::SEND, Payload::Classical(msg)) => {
                out.push((PortAddr::new(a::OUTER, a::COPY), Payload::Classical(msg.clone())));
                let delivery = if self.lever {
                    Delivery::Blocked
                } else if self.psk_check && (self.keys[0].is_none() || self.keys[0] != self.keys[1]) {
                    Delivery::AuthFailed
                } else {
                    Delivery::Delivered(msg)
                };
                out.push((PortAddr::new(1 - end, a::RECV), Payload::Delivery(delivery)));
            }
            (end @ (a::END0 | a::END1), a::AUTH, Payload::Psk(k)) => self.keys[end] = Some(k),
            (a::OUTER, a::LEVER, Payload::Lever(l)) => self.lever = l,
            _ => unreachable!("validated by System"),
        }
        Ok(())
    }
}

fn auth_end(name: &str) -> InterfaceSpec {
    InterfaceSpec::new(
        name,
        InterfaceLabel::Inner,
        vec![
            PortSpec::input("send", PortKind::Classical),
            PortSpec::output("recv", PortKind::Delivery),
            PortSpec::input("auth", PortKind::Psk),
        ],
    )
}

/// Resource A: delivers messages between its two ends and leaks a copy of
/// each. The outer interface can read copies and block delivery, nothing else.
/// With `psk_check`, delivery also requires both ends to have registered the
/// same pre-shared key.
pub fn auth_channel(psk_check: bool) -> System {
    let ifaces = vec![
        auth_end("end0"),
        auth_end("end1"),
        InterfaceSpec::new(
            "outer",
            InterfaceLabel::Outer,
            vec![PortSpec::output("copy", PortKind::Classical), PortSpec::input("lever", PortKind::Lever)],
        ),
    ];
    System::new("A", ifaces, Box::new(AuthChannel { psk_check, keys: [None; 2], lever: false })).expect("static layout")
}

/// `Q ∥ A` for hop `h`, with interfaces `h{h}.up` (facing the node before the
/// hop), `h{h}.down` (facing the node after it), `q{h}` and `a{h}`.
pub fn hop(h: usize, psk_check: bool) -> Result<System, ResourceError> {
    let qa = super::system::compose_parallel(quantum_channel(), auth_channel(psk_check));
    qa.merge_interfaces(&format!("h{h}.up"), InterfaceLabel::Inner, &["sender", "end0"])?
        .merge_interfaces(&format!("h{h}.down"), InterfaceLabel::Inner, &["receiver", "end1"])?
        .rename_interface("Q.outer", &format!("q{h}"))?
        .rename_interface("A.outer", &format!("a{h}"))
        .map(|s| s.rename(&format!("(Q||A){h}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Qubit;
    use crate::qmath::QubitState;

    fn msg() -> LineMessage {
        LineMessage { from: 0, to: Dest::All, body: MsgBody::Abort { reason: "x".into() } }
    }

    #[test]
    fn quantum_channel_leaks_and_forwards_injection() {
        let mut q = quantum_channel();
        let qb = Qubit::from_state(QubitState::plus());
        let out = q.input(q::IN, Payload::Qubit(Some(qb.clone()))).unwrap();
        assert_eq!(out, vec![(q::LEAK, Payload::Qubit(Some(qb)))]);
        let zero = Qubit::from_state(QubitState::zero());
        let out = q.input(q::INJECT, Payload::Qubit(Some(zero.clone()))).unwrap();
        assert_eq!(out, vec![(q::OUT, Payload::Qubit(Some(zero)))]);
        let out = q.input(q::INJECT, Payload::Qubit(None)).unwrap();
        assert_eq!(out, vec![(q::OUT, Payload::Qubit(None))]);
    }

    #[test]
    fn quantum_channel_rejects_classical_payload() {
        let mut q = quantum_channel();
        let err = q.input(q::INJECT, Payload::Classical(msg())).unwrap_err();
        assert!(matches!(err, ResourceError::PayloadViolation { expected: PortKind::Qubit, .. }));
        assert!(matches!(q.input(q::LEAK, Payload::Qubit(None)), Err(ResourceError::NotAnInput { .. })));
    }

    #[test]
    fn auth_channel_copies_and_delivers() {
        let mut ch = auth_channel(true);
        ch.input(PortAddr::new(a::END0, a::AUTH), Payload::Psk(Psk(7))).unwrap();
        ch.input(PortAddr::new(a::END1, a::AUTH), Payload::Psk(Psk(7))).unwrap();
        let out = ch.input(PortAddr::new(a::END0, a::SEND), Payload::Classical(msg())).unwrap();
        assert_eq!(out[0], (PortAddr::new(a::OUTER, a::COPY), Payload::Classical(msg())));
        assert_eq!(out[1], (PortAddr::new(a::END1, a::RECV), Payload::Delivery(Delivery::Delivered(msg()))));
    }

    #[test]
    fn auth_channel_lever_blocks_and_mismatch_fails() {
        let mut ch = auth_channel(true);
        ch.input(PortAddr::new(a::END0, a::AUTH), Payload::Psk(Psk(1))).unwrap();
        ch.input(PortAddr::new(a::END1, a::AUTH), Payload::Psk(Psk(2))).unwrap();
        let out = ch.input(PortAddr::new(a::END1, a::SEND), Payload::Classical(msg())).unwrap();
        assert_eq!(out[1], (PortAddr::new(a::END0, a::RECV), Payload::Delivery(Delivery::AuthFailed)));
        ch.input(PortAddr::new(a::OUTER, a::LEVER), Payload::Lever(true)).unwrap();
        let out = ch.input(PortAddr::new(a::END1, a::SEND), Payload::Classical(msg())).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].1, Payload::Delivery(Delivery::Blocked));
    }

    #[test]
    fn outer_interface_has_no_tampering_port() {
        let ch = auth_channel(false);
        let outer = ch.interface("outer").unwrap();
        let inputs: Vec<_> = outer.ports.iter().filter(|p| p.direction == super::super::Direction::In).collect();
        assert_eq!(inputs.len(), 1);
        assert_eq!(inputs[0].kind, PortKind::Lever);
    }

    #[test]
    fn hop_layout() {
        let h = hop(1, true).unwrap();
        let names: Vec<_> = h.interfaces().iter().map(|i| i.name.as_str()).collect();
        assert_eq!(names, ["h1.up", "h1.down", "q1", "a1"]);
        let up: Vec<_> = h.interface("h1.up").unwrap().ports.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(up, ["sender.in", "end0.send", "end0.recv", "end0.auth"]);
        assert_eq!(h.parts(), 2);
    }
}
