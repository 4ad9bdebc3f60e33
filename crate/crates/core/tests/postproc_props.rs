use proptest::prelude::*;
use qline_core::adversary::{intercept_resend, BasisPolicy};
use qline_core::postproc::{privacy_amplify, reconcile, run_pair, PostprocConfig};
use qline_core::rng::rng_from_seed;
use qline_core::{run_line, LineConfig};

fn xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

prop_compose! {
    fn key_pair_and_seed()(len in 8usize..300)(
        k1 in proptest::collection::vec(any::<bool>(), len),
        k2 in proptest::collection::vec(any::<bool>(), len),
        out in 1..=len,
        extra in proptest::collection::vec(any::<bool>(), 2 * len),
    ) -> (Vec<bool>, Vec<bool>, usize, Vec<bool>) {
        let seed = extra[..k1.len() + out - 1].to_vec();
        (k1, k2, out, seed)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn privacy_amplification_is_linear((k1, k2, out, seed) in key_pair_and_seed()) {
        let lhs = privacy_amplify(&xor(&k1, &k2), &seed, out).unwrap();
        let rhs = xor(&privacy_amplify(&k1, &seed, out).unwrap(), &privacy_amplify(&k2, &seed, out).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn reconciliation_output_agrees_or_reports(
        a in proptest::collection::vec(any::<bool>(), 64..600),
        flips in proptest::collection::vec(any::<proptest::sample::Index>(), 0..12),
    ) {
        let mut b = a.clone();
        for f in &flips {
            let i = f.index(b.len());
            b[i] = !b[i];
        }
        if let Ok(r) = reconcile(&a, &b) {
            // residual disagreement is possible but never exceeds the input's
            let residual = r.a.iter().zip(&r.b).filter(|(x, y)| x != y).count();
            prop_assert!(residual <= flips.len());
        }
    }

    #[test]
    fn successful_pairs_share_their_key(
        a in proptest::collection::vec(any::<bool>(), 400..1200),
        flips in proptest::collection::vec(any::<proptest::sample::Index>(), 0..8),
        seed in any::<u64>(),
        tag in prop_oneof![Just(0usize), 1usize..40],
    ) {
        let mut b = a.clone();
        for f in &flips {
            let i = f.index(b.len());
            b[i] = !b[i];
        }
        let cfg = PostprocConfig { qber_abort_threshold: 0.2, verify_tag_bits: tag, ..PostprocConfig::default() };
        let run = run_pair(a, b, &cfg, 0, rng_from_seed(seed), rng_from_seed(seed ^ 1));
        match (&run.initiator, &run.responder) {
            (Ok(x), Ok(y)) => prop_assert_eq!(&x.bits, &y.bits),
            _ => prop_assert!(run.error().is_some()),
        }
    }

    #[test]
    fn raising_the_threshold_never_creates_an_abort(seed in any::<u64>(), t1 in 0.05..0.45f64, dt in 0.0..0.04f64) {
        // the attack puts the estimate near 0.25, inside the threshold range
        let run = |threshold: f64| {
            let mut cfg = LineConfig::new(3, 1500, seed);
            cfg.postproc.qber_abort_threshold = threshold;
            run_line(&cfg, &intercept_resend(0, BasisPolicy::Random)).unwrap().epochs.remove(0)
        };
        let low = run(t1);
        let high = run((t1 + dt).min(0.49));
        if !low.aborted() {
            prop_assert!(!high.aborted());
            prop_assert_eq!(low.final_keys, high.final_keys);
        }
        if let (Some(a), Some(b)) = (low.qber_estimate, high.qber_estimate) {
            prop_assert_eq!(a, b);
        }
    }
}
