use super::matrix::Mat2;
use super::state::{apply, QubitState, Unitary2};
use super::{QmathError, NORM_TOL};
use rand::Rng;
use std::fmt;

/// Result of a generalized measurement: a bit or the inconclusive `∅`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasureOutcome {
    Zero,
    One,
    Inconclusive,
}

impl MeasureOutcome {
    pub fn from_bit(b: bool) -> Self {
        if b {
            MeasureOutcome::One
        } else {
            MeasureOutcome::Zero
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            MeasureOutcome::Zero => Some(false),
            MeasureOutcome::One => Some(true),
            MeasureOutcome::Inconclusive => None,
        }
    }

    pub fn is_conclusive(self) -> bool {
        self != MeasureOutcome::Inconclusive
    }
}

impl fmt::Display for MeasureOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureOutcome::Zero => "0",
            MeasureOutcome::One => "1",
            MeasureOutcome::Inconclusive => "∅",
        })
    }
}

/// A labeled POVM `{(a, M^a)}` over `{0, 1, ∅}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<(MeasureOutcome, Mat2)>,
}

impl Povm {
    pub fn new(elements: Vec<(MeasureOutcome, Mat2)>) -> Result<Self, QmathError> {
        if elements.is_empty() {
            return Err(QmathError::InvalidPovm("no elements".into()));
        }
        for (i, (o, m)) in elements.iter().enumerate() {
            if elements[..i].iter().any(|(p, _)| p == o) {
                return Err(QmathError::InvalidPovm(format!("duplicate outcome {o}")));
            }
            if !m.is_hermitian(NORM_TOL) {
                return Err(QmathError::InvalidPovm(format!("element {o} not hermitian")));
            }
            let low = m.hermitian_eigenvalues()[1];
            if low < -NORM_TOL {
                return Err(QmathError::InvalidPovm(format!("element {o} has eigenvalue {low}")));
            }
        }
        let total: Mat2 = elements.iter().map(|(_, m)| *m).sum();
        let dev = total.max_abs_diff(&Mat2::IDENTITY);
        if dev > NORM_TOL {
            return Err(QmathError::InvalidPovm(format!("completeness deviation {dev:e}")));
        }
        Ok(Povm { elements })
    }

    pub fn computational() -> Self {
        Povm {
            elements: vec![(MeasureOutcome::Zero, Mat2::diag(1.0, 0.0)), (MeasureOutcome::One, Mat2::diag(0.0, 1.0))],
        }
    }

    /// Computational measurement behind a lossy detector: with probability
    /// `loss` nothing clicks, with probability `dark` a uniformly random bit
    /// replaces the true outcome.
    pub fn lossy(loss: f64, dark: f64) -> Result<Self, QmathError> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(loss) || !ok(dark) || loss + dark > 1.0 + NORM_TOL {
            return Err(QmathError::InvalidProbability(format!("loss {loss}, dark {dark}")));
        }
        if loss == 0.0 && dark == 0.0 {
            return Ok(Self::computational());
        }
        let keep = (1.0 - loss - dark).max(0.0);
        let half = 0.5 * dark;
        let mut elements = vec![
            (MeasureOutcome::Zero, Mat2::diag(keep + half, half)),
            (MeasureOutcome::One, Mat2::diag(half, keep + half)),
        ];
        if loss > 0.0 {
            elements.push((MeasureOutcome::Inconclusive, Mat2::diag(loss, loss)));
        }
        Povm::new(elements)
    }

    pub fn elements(&self) -> &[(MeasureOutcome, Mat2)] {
        &self.elements
    }

    pub fn element(&self, o: MeasureOutcome) -> Option<&Mat2> {
        self.elements.iter().find(|(p, _)| *p == o).map(|(_, m)| m)
    }

    /// Effects of "apply `u`, then measure `self`": `U† M U`.
    pub fn after(&self, u: &Unitary2) -> Povm {
        let ud = u.adjoint();
        Povm { elements: self.elements.iter().map(|(o, m)| (*o, m.conjugate_by(ud.matrix()))).collect() }
    }

    /// `Tr[M^a ρ]` for every element, in element order.
    pub fn probabilities(&self, s: &QubitState) -> Vec<(MeasureOutcome, f64)> {
        self.elements.iter().map(|(o, m)| (*o, expectation(m, s))).collect()
    }
}

/// `Tr[M ρ]`, real part.
pub fn expectation(m: &Mat2, s: &QubitState) -> f64 {
    match s {
        QubitState::Pure(v) => {
            let w = m.apply(*v);
            (v[0].conj() * w[0] + v[1].conj() * w[1]).re
        }
        QubitState::Mixed(r) => (*m * *r).trace().re,
    }
}

/// Projective measurement in the computational basis.
pub fn measure_computational<R: Rng + ?Sized>(s: &QubitState, rng: &mut R) -> (bool, QubitState) {
    let p0 = s.prob_zero();
    let bit = rng.random::<f64>() >= p0;
    (bit, QubitState::basis(bit))
}

pub fn measure_povm<R: Rng + ?Sized>(p: &Povm, s: &QubitState, rng: &mut R) -> MeasureOutcome {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (o, m) in &p.elements {
        acc += expectation(m, s).max(0.0);
        if u < acc {
            return *o;
        }
    }
    p.elements.last().map(|(o, _)| *o).expect("povm is non-empty")
}

/// Rotate, then measure.
pub fn measure_rotated<R: Rng + ?Sized>(u: &Unitary2, p: &Povm, s: &QubitState, rng: &mut R) -> MeasureOutcome {
    measure_povm(p, &apply(u, s), rng)
}
