use super::toeplitz::privacy_amplify;
use super::PostprocError;
use crate::rng::{derive_rng, stream};
use crate::Bits;
use rand::seq::SliceRandom;

pub const BLOCK_SIZE: usize = 16;
pub const MAX_PASSES: u32 = 10;
/// Length of the hash tag the standalone [`reconcile`] compares at the end.
pub const CHECK_TAG_BITS: usize = 32;

/// Public index permutation used in `pass`. Pass 0 is the identity.
pub fn permutation(pass: u32, len: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..len).collect();
    if pass > 0 {
        p.shuffle(&mut derive_rng(0, &[stream::PERMUTATION, pass as u64, len as u64]));
    }
    p
}

/// Parities of `key` over `ranges` of the pass-permuted index space.
pub fn parities(key: &[bool], perm: &[usize], ranges: &[(usize, usize)]) -> Bits {
    ranges.iter().map(|&(s, e)| perm[s..e].iter().fold(false, |acc, &i| acc ^ key[i])).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DriverStep {
    Query { pass: u32, ranges: Vec<(usize, usize)> },
    Done,
    Failed,
}

/// The correcting side of block parity bisection. It owns the key being
/// corrected, issues parity queries and flips bits located by bisection.
#[derive(Clone, Debug)]
pub struct Bisection {
    key: Bits,
    perm: Vec<usize>,
    pass: u32,
    /// Top-level blocks of the current pass, or the ranges under bisection.
    active: Vec<(usize, usize)>,
    bisecting: bool,
    disclosed: usize,
    corrected: usize,
}

impl Bisection {
    pub fn new(key: Bits) -> Self {
        Bisection { key, perm: Vec::new(), pass: 0, active: Vec::new(), bisecting: false, disclosed: 0, corrected: 0 }
    }

    pub fn disclosed(&self) -> usize {
        self.disclosed
    }

    pub fn corrected(&self) -> usize {
        self.corrected
    }

    pub fn passes(&self) -> u32 {
        self.pass + 1
    }

    pub fn key(&self) -> &[bool] {
        &self.key
    }

    pub fn into_key(self) -> Bits {
        self.key
    }

    pub fn start(&mut self) -> DriverStep {
        if self.key.is_empty() {
            return DriverStep::Done;
        }
        self.begin_pass(0)
    }

    fn begin_pass(&mut self, pass: u32) -> DriverStep {
        let n = self.key.len();
        self.pass = pass;
        self.bisecting = false;
        self.perm = permutation(pass, n);
        self.active = (0..n).step_by(BLOCK_SIZE).map(|s| (s, (s + BLOCK_SIZE).min(n))).collect();
        self.query()
    }

    /// Ranges whose parities the peer is asked for.
    fn queried(&self) -> Vec<(usize, usize)> {
        if self.bisecting {
            self.active.iter().map(|&(s, e)| (s, s + (e - s) / 2)).collect()
        } else {
            self.active.clone()
        }
    }

    fn query(&mut self) -> DriverStep {
        let ranges = self.queried();
        self.disclosed += ranges.len();
        DriverStep::Query { pass: self.pass, ranges }
    }

    fn flip(&mut self, idx: usize) {
        let i = self.perm[idx];
        self.key[i] = !self.key[i];
        self.corrected += 1;
    }

    /// Processes the peer's parities for the last query.
    pub fn on_reply(&mut self, theirs: &[bool]) -> Result<DriverStep, PostprocError> {
        let ranges = self.queried();
        if theirs.len() != ranges.len() {
            return Err(PostprocError::Protocol(format!("expected {} parities, got {}", ranges.len(), theirs.len())));
        }
        let mine = parities(&self.key, &self.perm, &ranges);
        let mut next = Vec::new();
        for (i, &(s, e)) in self.active.clone().iter().enumerate() {
            let differs = mine[i] != theirs[i];
            let r = if !self.bisecting {
                if !differs {
                    continue;
                }
                (s, e)
            } else {
                let m = ranges[i].1;
                if differs {
                    (s, m)
                } else {
                    (m, e)
                }
            };
            if r.1 - r.0 == 1 {
                self.flip(r.0);
            } else {
                next.push(r);
            }
        }
        if !self.bisecting && mine == theirs {
            return Ok(DriverStep::Done);
        }
        if next.is_empty() {
            if self.pass + 1 >= MAX_PASSES || self.disclosed >= self.key.len() {
                return Ok(DriverStep::Failed);
            }
            return Ok(self.begin_pass(self.pass + 1));
        }
        self.active = next;
        self.bisecting = true;
        Ok(self.query())
    }
}

/// Output of a complete in-process reconciliation.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconciled {
    pub a: Bits,
    pub b: Bits,
    /// Parity bits disclosed, to be deducted from the final key length.
    pub disclosed: usize,
    pub passes: u32,
    pub corrected: usize,
    /// Length of the closing hash comparison, also public.
    pub tag_bits: usize,
}

/// Reconciles `b` towards `a`: `a` answers parity queries, `b` bisects.
/// Bisection cannot see blocks with an even number of errors, so the result
/// is confirmed by comparing Toeplitz hashes under a public seed.
pub fn reconcile(a: &[bool], b: &[bool]) -> Result<Reconciled, PostprocError> {
    if a.len() != b.len() {
        return Err(PostprocError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let mut driver = Bisection::new(b.to_vec());
    let mut step = driver.start();
    loop {
        match step {
            DriverStep::Done => break,
            DriverStep::Failed => return Err(PostprocError::ReconcileFailed { passes: driver.passes() }),
            DriverStep::Query { pass, ranges } => {
                let answer = parities(a, &permutation(pass, a.len()), &ranges);
                step = driver.on_reply(&answer)?;
            }
        }
    }
    let tag_bits = CHECK_TAG_BITS.min(a.len());
    let b_fixed = driver.key();
    if tag_bits > 0 {
        let mut rng = derive_rng(0, &[stream::PERMUTATION, u64::MAX, a.len() as u64]);
        let seed: Bits = (0..a.len() + tag_bits - 1).map(|_| rand::Rng::random(&mut rng)).collect();
        if privacy_amplify(a, &seed, tag_bits)? != privacy_amplify(b_fixed, &seed, tag_bits)? {
            return Err(PostprocError::ReconcileFailed { passes: driver.passes() });
        }
    }
    Ok(Reconciled {
        a: a.to_vec(),
        disclosed: driver.disclosed(),
        passes: driver.passes(),
        corrected: driver.corrected(),
        tag_bits,
        b: driver.into_key(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_bits(n: usize, seed: u64) -> Bits {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| rng.random()).collect()
    }

    #[test]
    fn equal_keys_cost_one_parity_per_block() {
        let k = random_bits(100, 1);
        let r = reconcile(&k, &k).unwrap();
        assert_eq!(r.disclosed, 7);
        assert_eq!(r.b, k);
        assert_eq!(r.passes, 1);
    }

    #[test]
    fn single_error_is_found_by_bisection() {
        let a = random_bits(64, 2);
        for pos in [0, 17, 40, 63] {
            let mut b = a.clone();
            b[pos] = !b[pos];
            let mut d = Bisection::new(b);
            let mut step = d.start();
            let mut touching_block = 0;
            while let DriverStep::Query { pass, ranges } = step {
                if pass == 0 {
                    touching_block += ranges.iter().filter(|r| r.0 <= pos && pos < r.1).count();
                }
                step = d.on_reply(&parities(&a, &permutation(pass, 64), &ranges)).unwrap();
            }
            assert_eq!(step, DriverStep::Done);
            assert_eq!(d.key(), &a[..]);
            assert!(touching_block <= 5, "{touching_block} parities for the erroneous block");
        }
    }

    #[test]
    fn multiple_errors_converge() {
        let a = random_bits(500, 3);
        let mut b = a.clone();
        let mut rng = rng_from_seed(4);
        for _ in 0..15 {
            let i = rng.random_range(0..500);
            b[i] = !b[i];
        }
        let r = reconcile(&a, &b).unwrap();
        assert_eq!(r.a, r.b);
    }

    #[test]
    fn half_mismatched_aborts() {
        let a = random_bits(256, 5);
        let noise = random_bits(256, 6);
        let b: Bits = a.iter().zip(&noise).map(|(x, n)| x ^ n).collect();
        assert!(matches!(reconcile(&a, &b), Err(PostprocError::ReconcileFailed { .. })));
    }

    #[test]
    fn even_errors_per_block_are_caught_by_the_tag() {
        let a = random_bits(256, 5);
        let b: Bits = a.iter().enumerate().map(|(i, &x)| x ^ (i % 2 == 0)).collect();
        assert!(matches!(reconcile(&a, &b), Err(PostprocError::ReconcileFailed { .. })));
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut p = permutation(3, 50);
        assert_ne!(p, (0..50).collect::<Vec<_>>());
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
        assert_eq!(permutation(0, 5), vec![0, 1, 2, 3, 4]);
    }
}
