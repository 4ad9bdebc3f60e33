use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Dense 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[C64::new(a, 0.0), C64::new(b, 0.0)], [C64::new(c, 0.0), C64::new(d, 0.0)]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2::real(a, 0.0, 0.0, d)
    }

    /// `|v⟩⟨v|`
    pub fn outer(v: [C64; 2]) -> Self {
        Mat2([[v[0] * v[0].conj(), v[0] * v[1].conj()], [v[1] * v[0].conj(), v[1] * v[1].conj()]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// `U · self · U†`
    pub fn conjugate_by(&self, u: &Mat2) -> Self {
        *u * *self * u.adjoint()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let d = *self - *other;
        d.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Eigenvalues of the Hermitian part, largest first.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = (self.0[0][1] + self.0[1][0].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean + half_gap, mean - half_gap]
    }

    /// Square root of a positive semidefinite matrix. Small negative
    /// eigenvalues from rounding are clamped to zero.
    pub fn sqrt_psd(&self) -> Mat2 {
        let [l1, l2] = self.hermitian_eigenvalues();
        let (l1, l2) = (l1.max(0.0), l2.max(0.0));
        let s = l1.sqrt() + l2.sqrt();
        if s == 0.0 {
            return Mat2::ZERO;
        }
        // √M = (M + √(λ1λ2)·I) / (√λ1 + √λ2)
        (*self + Mat2::IDENTITY.scale_re((l1 * l2).sqrt())).scale_re(1.0 / s)
    }

    /// Spectral norm ‖M‖∞.
    pub fn operator_norm(&self) -> f64 {
        let g = self.adjoint() * *self;
        g.hermitian_eigenvalues()[0].max(0.0).sqrt()
    }

    /// Moore–Penrose inverse of a Hermitian matrix; eigenvalues with modulus
    /// below `cutoff` are treated as zero.
    pub fn pinv_hermitian(&self, cutoff: f64) -> Mat2 {
        let [l1, l2] = self.hermitian_eigenvalues();
        let big1 = l1.abs() >= cutoff;
        let big2 = l2.abs() >= cutoff;
        match (big1, big2) {
            (false, false) => Mat2::ZERO,
            (true, true) => {
                let m = &self.0;
                let det = l1 * l2;
                Mat2([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]).scale_re(1.0 / det)
            }
            (true, false) => self.eigen_projector(l1, l2).scale_re(1.0 / l1),
            (false, true) => self.eigen_projector(l2, l1).scale_re(1.0 / l2),
        }
    }

    /// Projector onto the eigenspace of `keep`, assuming `keep ≠ other`.
    fn eigen_projector(&self, keep: f64, other: f64) -> Mat2 {
        (*self - Mat2::IDENTITY.scale_re(other)).scale_re(1.0 / (keep - other))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl std::iter::Sum for Mat2 {
    fn sum<It: Iterator<Item = Mat2>>(iter: It) -> Mat2 {
        iter.fold(Mat2::ZERO, |acc, m| acc + m)
    }
}
