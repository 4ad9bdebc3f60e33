//! Single-qubit linear algebra.
//!
//! States use the convention `|0⟩ = (1, 0)`, `|1⟩ = (0, 1)`. Equality of
//! states is equality of density matrices, so global phases never matter.

mod distance;
mod matrix;
mod measure;
mod state;

pub use distance::{complementarity_c, ensemble_sum, trace_distance, WeightedState};
pub use matrix::{Mat2, C64};
pub use measure::{expectation, measure_computational, measure_povm, measure_rotated, MeasureOutcome, Povm};
pub use state::{apply, ry, QuarterTurn, QubitState, Unitary2};

use thiserror::Error;

/// Tolerance on norms, traces, hermiticity and POVM completeness.
pub const NORM_TOL: f64 = 1e-12;
/// Eigenvalues below this are outside the support in pseudo-inverses.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmathError {
    #[error("quarter turn index {0} is outside 0..4")]
    InvalidQuarterTurn(u8),
    #[error("invalid qubit state: {0}")]
    InvalidState(String),
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("ensemble sums differ by {residual:e}")]
    EnsembleMismatch { residual: f64 },
}

/// Pauli Y as produced by `ry(2)`.
pub fn y() -> Unitary2 {
    ry(QuarterTurn::wrapping(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    const TRIALS: usize = 100_000;

    fn q(k: u8) -> QuarterTurn {
        QuarterTurn::new(k).unwrap()
    }

    fn ry_from_angle(theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        Mat2::real(c, -s, s, c).scale(C64::from_polar(1.0, theta / 2.0))
    }

    #[test]
    fn quarter_turn_rejects_out_of_range() {
        assert_eq!(QuarterTurn::new(4), Err(QmathError::InvalidQuarterTurn(4)));
        assert_eq!(q(3) + q(2), q(1));
        assert_eq!(-q(1), q(3));
        assert_eq!(QuarterTurn::from_bits(true, true), q(3));
    }

    #[test]
    fn ry_table_matches_trigonometric_definition() {
        for t in QuarterTurn::ALL {
            let d = ry(t).matrix().max_abs_diff(&ry_from_angle(t.radians()));
            assert!(d < 1e-15, "k={} diff {d}", t.k());
        }
    }

    #[test]
    fn ry_pi_maps_zero_to_i_one() {
        let s = apply(&ry(q(2)), &QubitState::zero());
        let v = s.amplitudes().unwrap();
        assert!(v[0].norm() < 1e-15);
        assert!((v[1] - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(s.approx_eq(&QubitState::one(), 1e-12));
    }

    #[test]
    fn ry_zero_is_identity() {
        assert_eq!(*ry(q(0)).matrix(), Mat2::IDENTITY);
    }

    #[test]
    fn ry_one_then_three_is_identity() {
        let m = *ry(q(1)).matrix() * *ry(q(3)).matrix();
        assert!(m.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
    }

    #[test]
    fn hadamard_maps_zero_to_plus() {
        let s = apply(&Unitary2::hadamard(), &QubitState::zero());
        assert!(s.approx_eq(&QubitState::plus(), 1e-12));
        let t = QubitState::Mixed(Mat2::real(0.7, 0.1, 0.1, 0.3));
        assert_eq!(apply(&Unitary2::identity(), &t), t);
    }

    #[test]
    fn sqrt_y_on_zero_has_phase_pi_over_four() {
        let v = apply(&ry(q(1)), &QubitState::zero()).amplitudes().unwrap();
        let want = C64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4);
        assert!((v[0] - want).norm() < 1e-15 && (v[1] - want).norm() < 1e-15);
    }

    #[test]
    fn constructors_validate() {
        assert!(QubitState::pure(C64::new(1.0, 0.0), C64::new(0.1, 0.0)).is_err());
        assert!(QubitState::mixed(Mat2::diag(0.6, 0.6)).is_err());
        assert!(QubitState::mixed(Mat2::diag(1.2, -0.2)).is_err());
        assert!(QubitState::mixed(Mat2::real(0.5, 0.2, 0.1, 0.5)).is_err());
        assert!(Unitary2::new(Mat2::diag(1.0, 0.5)).is_err());
        assert!(Unitary2::new(*ry(q(3)).matrix()).is_ok());
    }

    #[test]
    fn computational_measurement_statistics() {
        let mut rng = rng_from_seed(1);
        assert!((0..100).all(|_| measure_computational(&QubitState::one(), &mut rng).0));
        let zeros = (0..TRIALS).filter(|_| !measure_computational(&QubitState::plus(), &mut rng).0).count();
        assert!((zeros as f64 / TRIALS as f64 - 0.5).abs() < 0.01);
        let s = apply(&ry(q(1)), &QubitState::zero());
        let ones = (0..TRIALS).filter(|_| measure_computational(&s, &mut rng).0).count();
        assert!((ones as f64 / TRIALS as f64 - 0.5).abs() < 0.01);
        let (bit, post) = measure_computational(&QubitState::plus(), &mut rng);
        assert_eq!(post, QubitState::basis(bit));
    }

    #[test]
    fn povm_measurement_statistics() {
        let mut rng = rng_from_seed(2);
        let p = Povm::computational();
        assert_eq!(measure_povm(&p, &QubitState::zero(), &mut rng), MeasureOutcome::Zero);
        let lossy = Povm::lossy(0.1, 0.0).unwrap();
        let empty = (0..TRIALS)
            .filter(|_| measure_povm(&lossy, &QubitState::zero(), &mut rng) == MeasureOutcome::Inconclusive)
            .count();
        assert!((empty as f64 / TRIALS as f64 - 0.1).abs() < 0.01);
        let ones =
            (0..TRIALS).filter(|_| measure_povm(&lossy, &QubitState::one(), &mut rng) == MeasureOutcome::One).count();
        assert!((ones as f64 / TRIALS as f64 - 0.9).abs() < 0.01);
    }

    #[test]
    fn povm_validation() {
        let bad = Povm::new(vec![(MeasureOutcome::Zero, Mat2::diag(1.0, 0.0))]);
        assert!(matches!(bad, Err(QmathError::InvalidPovm(_))));
        let neg =
            Povm::new(vec![(MeasureOutcome::Zero, Mat2::diag(1.5, 0.0)), (MeasureOutcome::One, Mat2::diag(-0.5, 1.0))]);
        assert!(matches!(neg, Err(QmathError::InvalidPovm(_))));
        assert!(Povm::lossy(0.7, 0.5).is_err());
        assert!(Povm::computational().element(MeasureOutcome::Inconclusive).is_none());
    }

    #[test]
    fn inconclusive_never_drawn_without_element() {
        let mut rng = rng_from_seed(3);
        let p = Povm::lossy(0.0, 0.3).unwrap();
        assert!((0..10_000).all(|_| measure_povm(&p, &QubitState::plus(), &mut rng).is_conclusive()));
    }

    #[test]
    fn trace_distance_examples() {
        let r = QubitState::Mixed(Mat2::real(0.7, 0.1, 0.1, 0.3));
        assert_eq!(trace_distance(&r, &r), 0.0);
        assert!((trace_distance(&QubitState::zero(), &QubitState::one()) - 1.0).abs() < 1e-15);
        let d = trace_distance(&QubitState::zero(), &QubitState::plus());
        assert!((d - FRAC_1_SQRT_2).abs() < 1e-10);
    }

    fn ens(states: [QubitState; 2]) -> Vec<WeightedState> {
        states.iter().map(|s| WeightedState::new(0.5, *s)).collect()
    }

    #[test]
    fn complementarity_same_basis_is_one() {
        let e = ens([QubitState::zero(), QubitState::one()]);
        assert!((complementarity_c(&e, &e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complementarity_is_order_free() {
        let z = ens([QubitState::zero(), QubitState::one()]);
        let x = ens([QubitState::plus(), QubitState::minus()]);
        let zr = ens([QubitState::one(), QubitState::zero()]);
        let xr = ens([QubitState::minus(), QubitState::plus()]);
        let c = complementarity_c(&z, &x).unwrap();
        assert_eq!(c, complementarity_c(&zr, &xr).unwrap());
    }

    #[test]
    fn complementarity_rejects_basis_leak() {
        let z = ens([QubitState::zero(), QubitState::zero()]);
        let x = ens([QubitState::plus(), QubitState::minus()]);
        assert!(matches!(complementarity_c(&z, &x), Err(QmathError::EnsembleMismatch { .. })));
    }
}
