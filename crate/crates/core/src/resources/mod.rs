//! Systems with typed interfaces, their composition, and the resources the
//! protocol is built from: quantum channel Q, authenticated channel A, ideal
//! key K, the protocol nodes π and the simulator σ.
//!
//! Composition flattens everything into one routing network, so nested
//! compositions cost nothing extra at run time. Outputs inside a composite
//! are delivered breadth-first in emission order.

mod channels;
mod ideal;
mod node;
mod qline;
mod runner;
mod simulator;
mod system;

pub use channels::{auth_channel, hop, quantum_channel, Delivery, Dest, LineMessage, MsgBody, Psk};
pub use ideal::{ideal_key, IdealKeyConfig};
pub use node::{protocol_node, NodeSpec};
pub use qline::{outer_interfaces, qline_system, QlineSpec};
pub use runner::{delivered, run_system, Environment, Observed, ProtocolEnvironment, View};
pub use simulator::{ideal_key_config, ideal_system, simulator_sigma, PskMode, SigmaVariant, SimulatorState};
pub use system::{
    compose_parallel, compose_sequential, Behavior, Direction, InterfaceLabel, InterfaceSpec, Payload, PortAddr,
    PortKind, PortSpec, ResourceError, System,
};

/// Step cap for [`run_system`] in the shipped drivers.
pub const MAX_STEPS: usize = 64;
