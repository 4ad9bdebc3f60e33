use super::AnalysisError;
use statrs::function::erf::erfc;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Significance level of [`uniformity_test`].
pub const UNIFORMITY_ALPHA: f64 = 0.01;

pub const MIN_UNIFORMITY_LEN: usize = 128;

/// Fraction of positions where `a` and `b` differ.
pub fn qber(a: &[bool], b: &[bool]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(AnalysisError::TooShort { len: 0, min: 1 });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64)
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Newcombe's hybrid score interval for `p1 − p2`, built from the two
/// Wilson intervals.
pub fn newcombe_difference(k1: u64, n1: u64, k2: u64, n2: u64, z: f64) -> (f64, f64) {
    let (p1, p2) = (k1 as f64 / n1.max(1) as f64, k2 as f64 / n2.max(1) as f64);
    let (l1, u1) = wilson(k1, n1, z);
    let (l2, u2) = wilson(k2, n2, z);
    let d = p1 - p2;
    let lo = d - ((p1 - l1).powi(2) + (u2 - p2).powi(2)).sqrt();
    let hi = d + ((u1 - p1).powi(2) + (p2 - l2).powi(2)).sqrt();
    (lo.max(-1.0), hi.min(1.0))
}

/// Monobit and runs statistics of a bit string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformityReport {
    pub len: usize,
    pub ones: usize,
    pub monobit_p: f64,
    pub runs: usize,
    pub runs_p: f64,
}

impl UniformityReport {
    pub fn monobit_pass(&self) -> bool {
        self.monobit_p >= UNIFORMITY_ALPHA
    }

    pub fn runs_pass(&self) -> bool {
        self.runs_p >= UNIFORMITY_ALPHA
    }

    pub fn passed(&self) -> bool {
        self.monobit_pass() && self.runs_pass()
    }
}

/// Frequency (monobit) and runs tests at the 1% level. The runs test is
/// reported as failing when the frequency prerequisite does not hold.
pub fn uniformity_test(bits: &[bool]) -> Result<UniformityReport, AnalysisError> {
    let n = bits.len();
    if n < MIN_UNIFORMITY_LEN {
        return Err(AnalysisError::TooShort { len: n, min: MIN_UNIFORMITY_LEN });
    }
    let nf = n as f64;
    let ones = bits.iter().filter(|&&b| b).count();
    let s = (2.0 * ones as f64 - nf).abs() / nf.sqrt();
    let monobit_p = erfc(s / std::f64::consts::SQRT_2);
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let pi = ones as f64 / nf;
    let runs_p = if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        0.0
    } else {
        let expected = 2.0 * nf * pi * (1.0 - pi);
        erfc((runs as f64 - expected).abs() / (2.0 * (2.0 * nf).sqrt() * pi * (1.0 - pi)))
    };
    Ok(UniformityReport { len: n, ones, monobit_p, runs, runs_p })
}

/// `|#1/n − ½| < z / (2√n)`.
pub fn monobit_within(bits: &[bool], z: f64) -> bool {
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|&&b| b).count() as f64;
    (ones / n - 0.5).abs() < z / (2.0 * n.sqrt())
}

/// Plug-in estimate of I(X;Y) in bits from paired samples.
pub fn mutual_information(xs: &[bool], ys: &[bool]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch { a: xs.len(), b: ys.len() });
    }
    if xs.is_empty() {
        return Err(AnalysisError::TooShort { len: 0, min: 1 });
    }
    let mut joint = [[0usize; 2]; 2];
    for (&x, &y) in xs.iter().zip(ys) {
        joint[x as usize][y as usize] += 1;
    }
    let n = xs.len() as f64;
    let px = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let py = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let j = joint[x][y] as f64;
            if j > 0.0 {
                mi += j / n * (j * n / (px[x] as f64 * py[y] as f64)).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}
