use crate::adversary::NoiseParams;
use crate::qmath::{apply, measure_povm, ry, MeasureOutcome, Povm, QmathError, QuarterTurn, QubitState};
use crate::rng::SeededRng;

/// Alice's state `R_Y(b·π/2 + r·π)|0⟩`.
pub fn alice_prepare(b: bool, r: bool) -> QubitState {
    apply(&ry(QuarterTurn::from_bits(b, r)), &QubitState::zero())
}

/// A Charlie's rotation `R_Y(b·π/2 + r·π)`.
pub fn charlie_transform(s: &QubitState, b: bool, r: bool) -> QubitState {
    apply(&ry(QuarterTurn::from_bits(b, r)), s)
}

/// Bob's detector: a rotation by `b·π/2` followed by a lossy
/// computational-basis measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Detector {
    povm: Povm,
}

impl Detector {
    pub fn new(noise: &NoiseParams) -> Result<Self, QmathError> {
        Ok(Detector { povm: noise.povm()? })
    }

    pub fn noiseless() -> Self {
        Detector { povm: Povm::computational() }
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// Effective POVM for basis bit `b`, i.e. the measurement on the
    /// incoming state.
    pub fn effective_povm(&self, b: bool) -> Povm {
        self.povm.after(&ry(QuarterTurn::from_bits(b, false)))
    }

    pub fn measure(&self, s: &QubitState, b: bool, rng: &mut SeededRng) -> MeasureOutcome {
        let rotated = apply(&ry(QuarterTurn::from_bits(b, false)), s);
        measure_povm(&self.povm, &rotated, rng)
    }
}

pub fn bob_measure(
    s: &QubitState,
    b: bool,
    noise: &NoiseParams,
    rng: &mut SeededRng,
) -> Result<MeasureOutcome, QmathError> {
    Ok(Detector::new(noise)?.measure(s, b, rng))
}
