//! Simulation of multi-user key establishment on a quantum line network.
//!
//! Alice prepares rotated qubits, every intermediate node (a Charlie) applies
//! its own random quarter-turn rotation and Bob measures. After sifting, the
//! XOR of all parties' keys is zero, so revealing all keys except two leaves
//! a shared secret between the remaining pair.
//!
//! The crate is split into:
//!
//! * [`qmath`]: exact single-qubit linear algebra.
//! * [`protocol`]: node operations, sifting, key combination, scheduling and
//!   the fast direct executor [`protocol::run_line`].
//! * [`resources`]: systems with typed interfaces, their composition, the
//!   channel resources, the ideal key and its simulator.
//! * [`adversary`]: strategies plugged into the channels' outer interfaces.
//! * [`postproc`]: error estimation, reconciliation and privacy amplification.
//! * [`analysis`]: statistics, lemma verification and the distinguisher harness.

pub mod adversary;
pub mod analysis;
pub mod config;
pub mod postproc;
pub mod protocol;
pub mod qmath;
pub mod resources;
pub mod rng;
pub mod transcript;

pub use adversary::{AdversaryStrategy, NoiseParams};
pub use config::LineConfig;
pub use protocol::{run_line, Line, NodeRole};
pub use qmath::{QuarterTurn, QubitState, Unitary2};
pub use rng::SeededRng;
pub use transcript::Transcript;

/// A bit string, one `bool` per bit.
pub type Bits = Vec<bool>;
