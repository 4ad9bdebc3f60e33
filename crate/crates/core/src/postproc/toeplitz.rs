use super::PostprocError;

fn pack(bits: impl ExactSizeIterator<Item = bool>) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64) + 1];
    for (i, b) in bits.enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

/// 64 bits of `words` starting at bit `offset`.
#[inline]
fn window(words: &[u64], offset: usize) -> u64 {
    let (w, s) = (offset / 64, offset % 64);
    let lo = words[w] >> s;
    if s == 0 {
        lo
    } else {
        lo | (words.get(w + 1).copied().unwrap_or(0) << (64 - s))
    }
}

/// Binary Toeplitz hash `T·key` with `T[i][j] = seed[i + n − 1 − j]`,
/// `n = key.len()`. Needs `seed.len() ≥ n + out_len − 1`.
pub fn privacy_amplify(key: &[bool], seed: &[bool], out_len: usize) -> Result<Vec<bool>, PostprocError> {
    let n = key.len();
    if out_len > n {
        return Err(PostprocError::BadLength(format!("output {out_len} exceeds key {n}")));
    }
    if out_len == 0 {
        return Ok(Vec::new());
    }
    let need = n + out_len - 1;
    if seed.len() < need {
        return Err(PostprocError::BadLength(format!("seed has {} bits, needs {need}", seed.len())));
    }
    // With the key reversed, output bit i is the inner product of the key
    // with the seed window starting at i.
    let rev = pack(key.iter().rev().copied());
    let seed_words = pack(seed[..need].iter().copied());
    let full = n / 64;
    let tail = n % 64;
    let tail_mask = if tail == 0 { 0 } else { (1u64 << tail) - 1 };
    let out = (0..out_len)
        .map(|i| {
            let mut acc = 0u64;
            for (w, word) in rev[..full].iter().enumerate() {
                acc ^= word & window(&seed_words, i + 64 * w);
            }
            if tail != 0 {
                acc ^= rev[full] & window(&seed_words, i + 64 * full) & tail_mask;
            }
            acc.count_ones() & 1 == 1
        })
        .collect();
    Ok(out)
}
