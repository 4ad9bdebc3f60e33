//! Workloads shared by the benchmarks.

use qline_core::adversary::NoiseParams;
use qline_core::postproc::PostprocConfig;
use qline_core::resources::QlineSpec;
use qline_core::{Bits, Line, LineConfig};

/// A single-epoch line with a mildly lossy, noisy detector.
pub fn line_config(parties: usize, rounds: usize) -> LineConfig {
    let mut cfg = LineConfig::new(parties, rounds, 0xbe7c);
    cfg.noise = NoiseParams::new(0.1, 0.01).expect("valid noise");
    cfg
}

/// The short keeper-pair run the distinguishers use.
pub fn short_spec(pair: &str) -> QlineSpec {
    let postproc = PostprocConfig {
        final_key_len: Some(4),
        verify_tag_bits: 4,
        pa_output_ratio: 1.0,
        ..PostprocConfig::default()
    };
    QlineSpec::variant(Line::new(3).expect("three parties"), pair, 48, postproc).expect("known pair")
}

/// Deterministic pseudo-random bits from a 64-bit LCG.
pub fn bits(len: usize, seed: u64) -> Bits {
    let mut x = seed;
    (0..len)
        .map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            x >> 63 == 1
        })
        .collect()
}
