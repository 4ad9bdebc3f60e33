use super::channels::hop;
use super::node::{protocol_node, NodeSpec};
use super::system::{compose_sequential, ResourceError, System};
use crate::adversary::NoiseParams;
use crate::postproc::PostprocConfig;
use crate::protocol::{Detector, Line, NodeRole};

/// Everything fixed about one QL system instance.
#[derive(Clone, Debug, PartialEq)]
pub struct QlineSpec {
    pub line: Line,
    pub rounds: usize,
    pub keepers: (NodeRole, NodeRole),
    pub postproc: PostprocConfig,
    pub noise: NoiseParams,
    pub psk_check: bool,
    pub epoch: u64,
}

impl QlineSpec {
    /// Spec for the variant whose keepers are named `pair` (e.g. `"AC"`).
    pub fn variant(line: Line, pair: &str, rounds: usize, postproc: PostprocConfig) -> Result<Self, ResourceError> {
        let keepers =
            line.pair_by_label(pair).ok_or_else(|| ResourceError::Setup(format!("unknown pair `{pair}` on {line}")))?;
        Ok(QlineSpec { line, rounds, keepers, postproc, noise: NoiseParams::NONE, psk_check: true, epoch: 0 })
    }

    /// User interface names in position order.
    pub fn users(&self) -> Vec<String> {
        self.line.roles().map(|r| self.line.label(r)).collect()
    }

    pub fn pair_label(&self) -> String {
        self.line.pair_label(self.keepers)
    }
}

/// `π_A ∘ (Q∥A) ∘ π_C ∘ … ∘ (Q∥A) ∘ π_B`. Remaining interfaces: one user
/// interface per node and `q{h}` / `a{h}` per hop.
pub fn qline_system(spec: &QlineSpec, seed: u64) -> Result<System, ResourceError> {
    let detector = Detector::new(&spec.noise).map_err(|e| ResourceError::Setup(e.to_string()))?;
    let line = spec.line;
    let node = |position: usize| {
        protocol_node(NodeSpec {
            line,
            position,
            rounds: spec.rounds,
            keepers: spec.keepers,
            postproc: spec.postproc,
            detector: detector.clone(),
            seed,
            epoch: spec.epoch,
        })
    };
    let labels = spec.users();
    let mut sys = node(0)?;
    for h in 0..line.hops() {
        sys = compose_sequential(sys, hop(h, spec.psk_check)?, (&format!("{}.down", labels[h]), &format!("h{h}.up")))?;
        sys = compose_sequential(sys, node(h + 1)?, (&format!("h{h}.down"), &format!("{}.up", labels[h + 1])))?;
    }
    Ok(sys.rename(&format!("QL_{}", spec.pair_label())))
}

/// Names of the outer interfaces, in order.
pub fn outer_interfaces(line: Line) -> Vec<String> {
    (0..line.hops()).flat_map(|h| [format!("q{h}"), format!("a{h}")]).collect()
}
