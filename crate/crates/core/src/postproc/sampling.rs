use super::PostprocError;
use crate::rng::SeededRng;
use crate::Bits;

/// Result of sacrificing a random sample of positions for error estimation.
#[derive(Clone, Debug, PartialEq)]
pub struct QberSample {
    pub qber: f64,
    /// Disclosed positions, ascending.
    pub positions: Vec<usize>,
    pub remaining_a: Bits,
    pub remaining_b: Bits,
}

pub const MIN_SAMPLED_LEN: usize = 8;

/// Chooses `⌈frac·len⌉` positions uniformly without replacement.
pub fn sample_positions(len: usize, frac: f64, rng: &mut SeededRng) -> Result<Vec<usize>, PostprocError> {
    if len < MIN_SAMPLED_LEN {
        return Err(PostprocError::TooShort { len, min: MIN_SAMPLED_LEN });
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(PostprocError::InvalidConfig(format!("sample fraction {frac}")));
    }
    let k = ((frac * len as f64).ceil() as usize).min(len);
    let mut pos = rand::seq::index::sample(rng, len, k).into_vec();
    pos.sort_unstable();
    Ok(pos)
}

/// Removes `positions` (ascending) from `bits`.
pub fn remove_positions(bits: &[bool], positions: &[usize]) -> Bits {
    let mut out = Vec::with_capacity(bits.len() - positions.len());
    let mut it = positions.iter().peekable();
    for (i, &b) in bits.iter().enumerate() {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(b);
        }
    }
    out
}

pub fn mismatch_fraction(a: &[bool], b: &[bool], positions: &[usize]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let errs = positions.iter().filter(|&&i| a[i] != b[i]).count();
    errs as f64 / positions.len() as f64
}

pub fn estimate_qber(a: &[bool], b: &[bool], frac: f64, rng: &mut SeededRng) -> Result<QberSample, PostprocError> {
    if a.len() != b.len() {
        return Err(PostprocError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let positions = sample_positions(a.len(), frac, rng)?;
    Ok(QberSample {
        qber: mismatch_fraction(a, b, &positions),
        remaining_a: remove_positions(a, &positions),
        remaining_b: remove_positions(b, &positions),
        positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn identical_keys_quarter_sample() {
        let k: Bits = (0..400).map(|i| i % 3 == 0).collect();
        let s = estimate_qber(&k, &k, 0.25, &mut rng_from_seed(1)).unwrap();
        assert_eq!(s.qber, 0.0);
        assert_eq!(s.remaining_a.len(), 300);
        assert_eq!(s.remaining_a, s.remaining_b);
    }

    #[test]
    fn half_different_full_disclosure() {
        let a: Bits = vec![false; 64];
        let b: Bits = (0..64).map(|i| i % 2 == 0).collect();
        let s = estimate_qber(&a, &b, 1.0, &mut rng_from_seed(2)).unwrap();
        assert_eq!(s.qber, 0.5);
        assert!(s.remaining_a.is_empty());
    }

    #[test]
    fn too_short_and_mismatch() {
        let mut rng = rng_from_seed(3);
        assert!(matches!(estimate_qber(&[true; 7], &[true; 7], 0.5, &mut rng), Err(PostprocError::TooShort { .. })));
        assert!(matches!(
            estimate_qber(&[true; 9], &[true; 8], 0.5, &mut rng),
            Err(PostprocError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn removal_keeps_order() {
        assert_eq!(remove_positions(&[true, false, true, true, false], &[0, 3]), vec![false, true, false]);
    }
}
