//! Seed derivation. Every random choice in the simulator comes from a
//! [`SeededRng`] derived from the master seed and a path naming its purpose,
//! so results never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stream tags, the first element of a derivation path.
pub mod stream {
    pub const NODE: u64 = 0x01;
    pub const ADVERSARY: u64 = 0x02;
    pub const POSTPROC: u64 = 0x03;
    pub const IDEAL_KEY: u64 = 0x04;
    pub const DISTINGUISHER: u64 = 0x05;
    pub const PERMUTATION: u64 = 0x06;
    pub const MONTE_CARLO: u64 = 0x07;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `path` into `master`. Distinct paths give unrelated seeds.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0x5157_4C49_4E45_u64);
    for (i, &p) in path.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(p.wrapping_add((i as u64 + 1) << 56)));
    }
    h
}

pub fn derive_rng(master: u64, path: &[u64]) -> SeededRng {
    SeededRng::seed_from_u64(derive_seed(master, path))
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}
