//! Independent dense-matrix oracle for the single-qubit algebra.

use nalgebra::{Complex, Matrix2};
use proptest::prelude::*;
use qline_core::qmath::{
    apply, complementarity_c, ry, trace_distance, Mat2, MeasureOutcome, Povm, QuarterTurn, QubitState, Unitary2,
    WeightedState, C64,
};

type C = Complex<f64>;
type M = Matrix2<C>;

fn c(re: f64, im: f64) -> C {
    Complex::new(re, im)
}

fn pauli_y() -> M {
    M::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

/// `exp(−iθY/2)` from its power series, not from the closed form.
fn exp_rotation(theta: f64) -> M {
    let gen = pauli_y() * c(0.0, -theta / 2.0);
    let mut term = M::identity();
    let mut sum = M::identity();
    for k in 1..60 {
        term = term * gen / c(k as f64, 0.0);
        sum += term;
    }
    sum
}

fn to_na(m: &Mat2) -> M {
    let g = |r, col| {
        let v: C64 = m.get(r, col);
        c(v.re, v.im)
    };
    M::new(g(0, 0), g(0, 1), g(1, 0), g(1, 1))
}

fn density_na(s: &QubitState) -> M {
    to_na(&s.density())
}

fn hermitian_sqrt(m: &M) -> M {
    let eig = m.symmetric_eigen();
    let d = eig.eigenvalues.map(|l| c(l.max(0.0).sqrt(), 0.0));
    let v = eig.eigenvectors;
    v * Matrix2::from_diagonal(&d) * v.adjoint()
}

fn hermitian_pinv(m: &M, cutoff: f64) -> M {
    let eig = m.symmetric_eigen();
    let d = eig.eigenvalues.map(|l| if l.abs() < cutoff { c(0.0, 0.0) } else { c(1.0 / l, 0.0) });
    let v = eig.eigenvectors;
    v * Matrix2::from_diagonal(&d) * v.adjoint()
}

fn spectral_norm(m: &M) -> f64 {
    m.svd(false, false).singular_values.max()
}

fn oracle_c(e0: &[(f64, M)], e1: &[(f64, M)]) -> f64 {
    let x: M = e0.iter().map(|(w, r)| r * c(*w, 0.0)).sum();
    let xinv = hermitian_pinv(&x, 1e-10);
    let mut best: f64 = 0.0;
    for (w0, r0) in e0 {
        for (w1, r1) in e1 {
            let a = hermitian_sqrt(&(r0 * c(*w0, 0.0)));
            let b = hermitian_sqrt(&(r1 * c(*w1, 0.0)));
            best = best.max(spectral_norm(&(a * xinv * b)).powi(2));
        }
    }
    best
}

fn oracle_trace_distance(a: &M, b: &M) -> f64 {
    0.5 * (a - b).symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

fn equal_up_to_phase(a: &M, b: &M) -> bool {
    // find a non-zero entry to fix the phase
    let (i, j) = (0..4).map(|k| (k / 2, k % 2)).max_by(|x, y| a[*x].norm().total_cmp(&a[*y].norm())).unwrap();
    let phase = b[(i, j)] / a[(i, j)];
    (phase.norm() - 1.0).abs() < 1e-12 && (a * phase - b).iter().all(|z| z.norm() < 1e-12)
}

#[test]
fn tabulated_rotations_match_exponential() {
    for q in QuarterTurn::ALL {
        let table = to_na(ry(q).matrix());
        let exact = exp_rotation(q.radians());
        assert!(equal_up_to_phase(&exact, &table), "k={}", q.k());
    }
}

#[test]
fn rotation_table_is_exact_for_k2() {
    let m = to_na(ry(QuarterTurn::new(2).unwrap()).matrix());
    assert!((m - pauli_y()).iter().all(|z| z.norm() < 1e-15));
}

#[test]
fn bb84_complementarity_matches_oracle() {
    let half = |s: QubitState| WeightedState::new(0.5, s);
    let e0 = [half(QubitState::zero()), half(QubitState::one())];
    let e1 = [half(QubitState::plus()), half(QubitState::minus())];
    let ours = complementarity_c(&e0, &e1).unwrap();
    let na = |e: &[WeightedState]| e.iter().map(|w| (w.weight, density_na(&w.state))).collect::<Vec<_>>();
    let oracle = oracle_c(&na(&e0), &na(&e1));
    assert!((ours - oracle).abs() < 1e-9, "{ours} vs {oracle}");
    assert!((oracle - 0.5).abs() < 1e-9);
}

fn pure_state(theta: f64, phi: f64) -> QubitState {
    QubitState::pure(C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)).unwrap()
}

fn mixed_state(theta: f64, phi: f64, purity: f64) -> QubitState {
    let p = pure_state(theta, phi).density().scale_re(purity);
    QubitState::mixed(p + Mat2::IDENTITY.scale_re((1.0 - purity) / 2.0)).unwrap()
}

prop_compose! {
    fn any_state()(theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU, purity in 0.0..=1.0f64, pure in any::<bool>()) -> QubitState {
        if pure { pure_state(theta, phi) } else { mixed_state(theta, phi, purity) }
    }
}

proptest! {
    #[test]
    fn rotation_composition_adds_quarter_turns(a in 0u8..4, b in 0u8..4, s in any_state()) {
        let (qa, qb) = (QuarterTurn::new(a).unwrap(), QuarterTurn::new(b).unwrap());
        let two = apply(&ry(qa), &apply(&ry(qb), &s));
        let one = apply(&ry(QuarterTurn::wrapping((a + b) as u64)), &s);
        prop_assert!(trace_distance(&two, &one) < 1e-10);
        let oracle = exp_rotation(qa.radians() + qb.radians());
        let rho = oracle * density_na(&s) * oracle.adjoint();
        prop_assert!(oracle_trace_distance(&rho, &density_na(&one)) < 1e-10);
    }

    #[test]
    fn trace_distance_matches_oracle(a in any_state(), b in any_state()) {
        let ours = trace_distance(&a, &b);
        let oracle = oracle_trace_distance(&density_na(&a), &density_na(&b));
        prop_assert!((ours - oracle).abs() < 1e-10);
    }

    #[test]
    fn probabilities_sum_to_one(s in any_state(), loss in 0.0..0.5f64, dark in 0.0..0.5f64, k in 0u8..4) {
        let povm = Povm::lossy(loss, dark).unwrap().after(&ry(QuarterTurn::new(k).unwrap()));
        let total: f64 = povm.probabilities(&s).iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        let computational: f64 = Povm::computational().probabilities(&s).iter().map(|(_, p)| p).sum();
        prop_assert!((computational - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lossy_probabilities_match_oracle(s in any_state(), loss in 0.0..0.5f64, dark in 0.0..0.5f64) {
        let povm = Povm::lossy(loss, dark).unwrap();
        let rho = density_na(&s);
        let p0_exact = (rho[(0, 0)].re) * (1.0 - loss - dark / 2.0) + rho[(1, 1)].re * dark / 2.0;
        let ours = povm.probabilities(&s);
        let p0 = ours.iter().find(|(o, _)| *o == MeasureOutcome::Zero).unwrap().1;
        let pinc = ours.iter().find(|(o, _)| *o == MeasureOutcome::Inconclusive).map_or(0.0, |x| x.1);
        prop_assert!((p0 - p0_exact).abs() < 1e-12);
        prop_assert!((pinc - loss).abs() < 1e-12);
    }

    #[test]
    fn complementarity_matches_oracle(t0 in 0.0..std::f64::consts::PI, t1 in 0.0..std::f64::consts::PI) {
        // equal-weight antipodal pairs all sum to I/2
        let pair = |t: f64| [WeightedState::new(0.5, pure_state(t, 0.0)), WeightedState::new(0.5, pure_state(t + std::f64::consts::PI, 0.0))];
        let (e0, e1) = (pair(t0), pair(t1));
        let ours = complementarity_c(&e0, &e1).unwrap();
        let na = |e: &[WeightedState]| e.iter().map(|x| (x.weight, density_na(&x.state))).collect::<Vec<_>>();
        prop_assert!((ours - oracle_c(&na(&e0), &na(&e1))).abs() < 1e-9);
    }

    #[test]
    fn long_rotation_chains_stay_unitary(ks in proptest::collection::vec(0u8..4, 1..1000)) {
        let mut u = Unitary2::identity();
        let mut s = pure_state(1.0, 0.5);
        for k in &ks {
            let r = ry(QuarterTurn::new(*k).unwrap());
            u = r.then_after(&u);
            s = apply(&r, &s);
        }
        let m = to_na(u.matrix());
        let drift = (m.adjoint() * m - M::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(drift < 1e-9);
        prop_assert!(s.norm_error() < 1e-9);
    }
}
