use proptest::prelude::*;
use qline_core::adversary::{intercept_resend, passive, BasisPolicy, NoiseParams};
use qline_core::analysis::mutual_information;
use qline_core::postproc::PostprocConfig;
use qline_core::protocol::{
    alice_prepare, build_sifted_keys, charlie_transform, reveal_and_combine, round_robin, sift, RoundRecord,
};
use qline_core::qmath::{ry, MeasureOutcome, Povm, QuarterTurn, QubitState};
use qline_core::{run_line, Bits, Line, LineConfig};

fn xor_all<'a>(keys: impl Iterator<Item = &'a Bits>) -> Bits {
    keys.fold(Vec::new(), |mut acc, k| {
        acc.resize(k.len(), false);
        acc.iter_mut().zip(k).for_each(|(a, b)| *a ^= b);
        acc
    })
}

/// Exact outcome of a noiseless chain: the computational outcome that has
/// probability one, or `None` if the state is not a basis state.
fn deterministic_outcome(s: &QubitState, bob_basis: bool) -> Option<bool> {
    let povm = Povm::computational().after(&ry(QuarterTurn::from_bits(bob_basis, false)));
    povm.probabilities(s).into_iter().find(|(_, p)| (p - 1.0).abs() < 1e-12).and_then(|(o, _)| o.bit())
}

fn chain(bases: &[bool], values: &[bool]) -> QubitState {
    let mut s = alice_prepare(bases[0], values[0]);
    for i in 1..values.len() {
        s = charlie_transform(&s, bases[i], values[i]);
    }
    s
}

#[test]
fn outcome_formula_holds_on_every_sifted_assignment() {
    let mut sifted = 0;
    for code in 0u32..32 {
        let bit = |i: u32| code >> i & 1 == 1;
        let (ba, ra, bc, rc, bb) = (bit(0), bit(1), bit(2), bit(3), bit(4));
        if ba ^ bc ^ bb {
            // unsifted rounds give a uniformly random outcome
            assert_eq!(deterministic_outcome(&chain(&[ba, bc], &[ra, rc]), bb), None);
            continue;
        }
        sifted += 1;
        let sum = ba as u32 + bc as u32 + bb as u32;
        let expected = ra ^ rc ^ ((sum % 4) / 2 == 1);
        assert_eq!(deterministic_outcome(&chain(&[ba, bc], &[ra, rc]), bb), Some(expected), "code {code:05b}");
    }
    assert_eq!(sifted, 16);
}

/// All sifted single-round records of a noiseless `parties`-line.
fn sifted_records(parties: usize) -> Vec<RoundRecord> {
    let bits = 2 * parties - 1;
    (0u32..1 << bits)
        .filter_map(|code| {
            let bit = |i: usize| code >> i & 1 == 1;
            let bases: Vec<bool> = (0..parties).map(bit).collect();
            let values: Vec<bool> = (parties..bits).map(bit).collect();
            if bases.iter().fold(false, |a, b| a ^ b) {
                return None;
            }
            let out = deterministic_outcome(&chain(&bases, &values), bases[parties - 1]).expect("sifted is exact");
            Some(RoundRecord { round: 0, bases, values, outcome: MeasureOutcome::from_bit(out) })
        })
        .collect()
}

#[test]
fn five_party_keepers_agree_on_every_two_round_assignment() {
    let line = Line::new(5).unwrap();
    let singles = sifted_records(5);
    assert_eq!(singles.len(), 256);
    let pairs = line.pairs();
    for first in &singles {
        for second in &singles {
            let recs = [first.clone(), RoundRecord { round: 1, ..second.clone() }];
            let keys = build_sifted_keys(line, &recs, &[0, 1]).unwrap();
            assert!(xor_all(keys.values().map(|k| &k.bits)).iter().all(|b| !b));
            for &p in &pairs {
                let r = reveal_and_combine(line, &keys, p, 0).unwrap();
                assert!(r.key.agree());
                assert_eq!(r.disclosed.len(), 3);
            }
        }
    }
}

fn noiseless(parties: usize, rounds: usize, seed: u64) -> LineConfig {
    LineConfig::new(parties, rounds, seed)
}

#[test]
fn two_party_line_is_plain_prepare_and_measure() {
    let cfg = noiseless(2, 4000, 11);
    let t = run_line(&cfg, &passive()).unwrap();
    let e = &t.epochs[0];
    assert_eq!(e.pair_label, "AB");
    let combined = e.combined.as_ref().unwrap();
    assert!(combined.agree());
    let alice = &e.sifted.values().next().unwrap().bits;
    assert_eq!(&combined.bits[0], alice);
    assert!(e.final_keys.is_some());
    assert!((e.sift_count() as f64 / 4000.0 - 0.5).abs() < 0.03);
}

#[test]
fn sift_rate_is_one_half_for_every_line_length() {
    for parties in 2..=6 {
        let t = run_line(&noiseless(parties, 100_000, 3), &passive()).unwrap();
        let e = &t.epochs[0];
        let rate = e.sift_count() as f64 / e.conclusive as f64;
        assert!((rate - 0.5).abs() < 0.01, "ℓ={parties}: {rate}");
    }
}

#[test]
fn sift_rate_counts_only_conclusive_rounds() {
    let mut cfg = noiseless(3, 100_000, 5);
    cfg.noise = NoiseParams::new(0.2, 0.0).unwrap();
    let e = &run_line(&cfg, &passive()).unwrap().epochs[0];
    assert!((e.conclusive as f64 / 100_000.0 - 0.8).abs() < 0.01);
    assert!((e.sift_count() as f64 / e.conclusive as f64 - 0.5).abs() < 0.01);
}

#[test]
fn revealed_key_carries_no_information_about_keeper_keys() {
    let t = run_line(&noiseless(3, 100_000, 8), &passive()).unwrap();
    let e = &t.epochs[0];
    let line = Line::new(3).unwrap();
    let revealed = &e.sifted[&line.revealers(e.keepers)[0]].bits;
    for keeper in [e.keepers.0, e.keepers.1] {
        let mi = mutual_information(revealed, &e.sifted[&keeper].bits).unwrap();
        assert!(mi < 0.01, "{mi}");
    }
}

#[test]
fn replay_is_byte_identical_and_parallelism_does_not_matter() {
    let mut cfg = noiseless(4, 3000, 77);
    cfg.epochs = 4;
    cfg.noise = NoiseParams::new(0.1, 0.02).unwrap();
    let adv = intercept_resend(1, BasisPolicy::Random);
    let a = run_line(&cfg, &adv).unwrap().render();
    let b = run_line(&cfg, &adv).unwrap().render();
    cfg.parallel = true;
    let c = run_line(&cfg, &adv).unwrap().render();
    assert_eq!(a, b);
    assert_eq!(a, c);
    cfg.seed = 78;
    assert_ne!(a, run_line(&cfg, &adv).unwrap().render());
}

#[test]
fn final_keys_look_uniform_over_many_epochs() {
    let mut cfg = noiseless(3, 10_000, 2024);
    cfg.epochs = 100;
    cfg.postproc = PostprocConfig { final_key_len: Some(1024), ..PostprocConfig::default() };
    let t = run_line(&cfg, &passive()).unwrap();
    let keys: Vec<&Bits> = t.epochs.iter().map(|e| &e.final_keys.as_ref().expect("noiseless epoch")[0].bits).collect();
    assert_eq!(keys.len(), 100);
    let ones: usize = keys.iter().map(|k| k.iter().filter(|&&b| b).count()).sum();
    let pooled = ones as f64 / (100.0 * 1024.0);
    assert!((pooled - 0.5).abs() < 0.05, "{pooled}");
    let off = keys.iter().filter(|k| (k.iter().filter(|&&b| b).count() as f64 / 1024.0 - 0.5).abs() >= 0.05).count();
    assert!(off <= 2, "{off} keys outside tolerance");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sifted_keys_xor_to_zero(seed in any::<u64>(), parties in 2usize..=6) {
        let t = run_line(&noiseless(parties, 512, seed), &passive()).unwrap();
        let e = &t.epochs[0];
        prop_assert_eq!(e.sifted.len(), parties);
        prop_assert!(xor_all(e.sifted.values().map(|k| &k.bits)).iter().all(|b| !b));
        prop_assert!(e.combined.as_ref().unwrap().agree());
    }

    #[test]
    fn keepers_final_keys_match_whenever_both_finish(seed in any::<u64>(), parties in 2usize..=5, dark in 0.0..0.12f64) {
        let mut cfg = noiseless(parties, 3000, seed);
        cfg.epochs = parties as u64;
        cfg.noise = NoiseParams::new(0.0, dark).unwrap();
        for e in run_line(&cfg, &passive()).unwrap().epochs {
            if let Some([a, b]) = &e.final_keys {
                prop_assert_eq!(&a.bits, &b.bits);
                prop_assert!(!a.bits.is_empty());
            } else {
                prop_assert!(e.aborted());
            }
        }
    }

    #[test]
    fn unweighted_schedule_is_fair(parties in 2usize..=6, m in 1u64..5) {
        let line = Line::new(parties).unwrap();
        let pairs = line.pairs();
        let p = pairs.len() as u64;
        let s = round_robin(line, &pairs, p * m, None).unwrap();
        for &pair in &pairs {
            prop_assert_eq!(s.count(pair), m as usize);
        }
        for window in s.entries.windows(pairs.len()) {
            for &pair in &pairs {
                prop_assert_eq!(window.iter().filter(|e| e.keepers == pair).count(), 1);
            }
        }
    }

    #[test]
    fn weighted_schedule_is_proportional(w in proptest::collection::vec(1u32..4, 3), m in 1u64..4) {
        let line = Line::new(3).unwrap();
        let pairs = line.pairs();
        let total: u32 = w.iter().sum();
        let s = round_robin(line, &pairs, total as u64 * m, Some(&w)).unwrap();
        for (pair, weight) in pairs.iter().zip(&w) {
            prop_assert_eq!(s.count(*pair), (*weight as u64 * m) as usize);
        }
    }

    #[test]
    fn sift_keeps_even_parity_conclusive_rounds(
        rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 20), 2..6),
        conclusive in proptest::collection::vec(any::<bool>(), 20),
    ) {
        let kept = sift(&rows, &conclusive).unwrap();
        for i in 0..20 {
            let even = !rows.iter().fold(false, |a, r| a ^ r[i]);
            prop_assert_eq!(kept.contains(&i), even && conclusive[i]);
        }
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }
}
