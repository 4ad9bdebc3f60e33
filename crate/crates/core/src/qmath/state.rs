use super::matrix::{Mat2, C64, I, ONE, ZERO};
use super::{QmathError, NORM_TOL};
use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Neg};

/// An angle `k·π/2` with `k ∈ {0,1,2,3}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuarterTurn(u8);

impl QuarterTurn {
    pub const ZERO: QuarterTurn = QuarterTurn(0);
    pub const ALL: [QuarterTurn; 4] = [QuarterTurn(0), QuarterTurn(1), QuarterTurn(2), QuarterTurn(3)];

    pub fn new(k: u8) -> Result<Self, QmathError> {
        if k < 4 {
            Ok(QuarterTurn(k))
        } else {
            Err(QmathError::InvalidQuarterTurn(k))
        }
    }

    pub fn wrapping(k: u64) -> Self {
        QuarterTurn((k % 4) as u8)
    }

    /// `θ = b·π/2 + r·π`, so `k = b + 2r`.
    pub fn from_bits(basis: bool, value: bool) -> Self {
        QuarterTurn(basis as u8 + 2 * value as u8)
    }

    pub fn k(self) -> u8 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0 as f64 * std::f64::consts::FRAC_PI_2
    }

    /// Basis bit, the parity of `k`.
    pub fn basis(self) -> bool {
        self.0 & 1 == 1
    }
}

impl Add for QuarterTurn {
    type Output = QuarterTurn;
    fn add(self, o: QuarterTurn) -> QuarterTurn {
        QuarterTurn((self.0 + o.0) % 4)
    }
}

impl Neg for QuarterTurn {
    type Output = QuarterTurn;
    fn neg(self) -> QuarterTurn {
        QuarterTurn((4 - self.0) % 4)
    }
}

impl std::iter::Sum for QuarterTurn {
    fn sum<It: Iterator<Item = QuarterTurn>>(iter: It) -> QuarterTurn {
        iter.fold(QuarterTurn::ZERO, |a, b| a + b)
    }
}

/// A 2×2 unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(Mat2);

impl Unitary2 {
    pub fn new(m: Mat2) -> Result<Self, QmathError> {
        let dev = (m.adjoint() * m).max_abs_diff(&Mat2::IDENTITY);
        if dev <= NORM_TOL {
            Ok(Unitary2(m))
        } else {
            Err(QmathError::NotUnitary { deviation: dev })
        }
    }

    pub fn identity() -> Self {
        Unitary2(Mat2::IDENTITY)
    }

    pub fn hadamard() -> Self {
        Unitary2(Mat2::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &Unitary2) -> Unitary2 {
        Unitary2(self.0 * other.0)
    }

    pub fn adjoint(&self) -> Unitary2 {
        Unitary2(self.0.adjoint())
    }
}

const HALF: f64 = 0.5;

/// `R_Y(k·π/2) = e^{iθ/2} [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`, tabulated
/// so that quarter turns are exact.
pub fn ry(q: QuarterTurn) -> Unitary2 {
    const P: C64 = C64::new(HALF, HALF); // (1+i)/2
    const M: C64 = C64::new(HALF, -HALF); // (1−i)/2
    let m = match q.0 {
        0 => Mat2::IDENTITY,
        1 => Mat2::new(P, -P, P, P),
        2 => Mat2::new(ZERO, -I, I, ZERO),
        _ => Mat2::new(M, M, -M, M),
    };
    Unitary2(m)
}

/// A single-qubit state, pure or mixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QubitState {
    Pure([C64; 2]),
    Mixed(Mat2),
}

impl QubitState {
    pub fn pure(alpha: C64, beta: C64) -> Result<Self, QmathError> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() <= NORM_TOL {
            Ok(QubitState::Pure([alpha, beta]))
        } else {
            Err(QmathError::InvalidState(format!("squared norm {n}")))
        }
    }

    pub fn mixed(rho: Mat2) -> Result<Self, QmathError> {
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(QmathError::InvalidState(format!("trace {tr}")));
        }
        if !rho.is_hermitian(NORM_TOL) {
            return Err(QmathError::InvalidState("not hermitian".into()));
        }
        let low = rho.hermitian_eigenvalues()[1];
        if low < -NORM_TOL {
            return Err(QmathError::InvalidState(format!("negative eigenvalue {low}")));
        }
        Ok(QubitState::Mixed(rho))
    }

    pub fn zero() -> Self {
        QubitState::Pure([ONE, ZERO])
    }

    pub fn one() -> Self {
        QubitState::Pure([ZERO, ONE])
    }

    pub fn basis(bit: bool) -> Self {
        if bit {
            Self::one()
        } else {
            Self::zero()
        }
    }

    pub fn plus() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        QubitState::Pure([s, s])
    }

    pub fn minus() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        QubitState::Pure([s, -s])
    }

    pub fn maximally_mixed() -> Self {
        QubitState::Mixed(Mat2::diag(0.5, 0.5))
    }

    pub fn density(&self) -> Mat2 {
        match self {
            QubitState::Pure(v) => Mat2::outer(*v),
            QubitState::Mixed(m) => *m,
        }
    }

    pub fn amplitudes(&self) -> Option<[C64; 2]> {
        match self {
            QubitState::Pure(v) => Some(*v),
            QubitState::Mixed(_) => None,
        }
    }

    /// `⟨0|ρ|0⟩`
    pub fn prob_zero(&self) -> f64 {
        match self {
            QubitState::Pure(v) => v[0].norm_sqr(),
            QubitState::Mixed(m) => m.0[0][0].re,
        }
    }

    /// Equality of density matrices, which ignores global phase.
    pub fn approx_eq(&self, other: &QubitState, tol: f64) -> bool {
        super::trace_distance(self, other) <= tol
    }

    /// Deviation of norm (pure) or trace (mixed) from one.
    pub fn norm_error(&self) -> f64 {
        match self {
            QubitState::Pure(v) => (v[0].norm_sqr() + v[1].norm_sqr() - 1.0).abs(),
            QubitState::Mixed(m) => (m.trace() - ONE).norm(),
        }
    }
}

/// `U s` for pure states, `U ρ U†` for mixed ones.
pub fn apply(u: &Unitary2, s: &QubitState) -> QubitState {
    match s {
        QubitState::Pure(v) => QubitState::Pure(u.0.apply(*v)),
        QubitState::Mixed(m) => QubitState::Mixed(m.conjugate_by(&u.0)),
    }
}
