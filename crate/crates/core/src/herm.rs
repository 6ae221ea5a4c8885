//! Small Hermitian matrices (complex dimension 1 or 2) and the symmetric
//! functions of their eigenvalues relative to a Kähler metric.
//!
//! A [`HermMat`] always stores the 2×2 layout
//!
//! ```text
//! [ a11      a12 ]
//! [ conj(a12) a22 ]
//! ```
//!
//! and every operation takes the complex dimension `n` explicitly; for
//! `n = 1` only `a11` is meaningful.

use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HermMat {
    pub a11: f64,
    pub a22: f64,
    pub a12: Complex64,
}

impl HermMat {
    pub const ZERO: HermMat = HermMat { a11: 0.0, a22: 0.0, a12: Complex64 { re: 0.0, im: 0.0 } };

    pub const fn new(a11: f64, a22: f64, a12: Complex64) -> Self {
        Self { a11, a22, a12 }
    }

    pub const fn scalar(a: f64) -> Self {
        Self { a11: a, a22: 0.0, a12: Complex64 { re: 0.0, im: 0.0 } }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        Self { a11, a22, a12: Complex64 { re: 0.0, im: 0.0 } }
    }

    pub fn identity(n: usize) -> Self {
        if n == 1 {
            Self::scalar(1.0)
        } else {
            Self::diag(1.0, 1.0)
        }
    }

    /// Builds the matrix from row-major entries; the lower triangle is
    /// ignored. Returns `None` if the diagonal is not real to 1e-12.
    pub fn from_entries(n: usize, entries: &[[Complex64; 2]; 2]) -> Option<Self> {
        let scale = 1.0 + entries[0][0].norm() + entries[1][1].norm();
        let tol = 1e-12 * scale;
        if entries[0][0].im.abs() > tol || (n == 2 && entries[1][1].im.abs() > tol) {
            return None;
        }
        if n == 2 && (entries[0][1] - entries[1][0].conj()).norm() > tol {
            return None;
        }
        Some(if n == 1 {
            Self::scalar(entries[0][0].re)
        } else {
            Self::new(entries[0][0].re, entries[1][1].re, entries[0][1])
        })
    }

    pub fn scale(self, s: f64) -> Self {
        Self { a11: self.a11 * s, a22: self.a22 * s, a12: self.a12 * s }
    }

    pub fn trace(&self, n: usize) -> f64 {
        if n == 1 {
            self.a11
        } else {
            self.a11 + self.a22
        }
    }

    pub fn det(&self, n: usize) -> f64 {
        if n == 1 {
            self.a11
        } else {
            self.a11 * self.a22 - self.a12.norm_sqr()
        }
    }

    /// Real number `tr(self · other)`.
    pub fn trace_product(&self, other: &HermMat, n: usize) -> f64 {
        if n == 1 {
            self.a11 * other.a11
        } else {
            self.a11 * other.a11 + self.a22 * other.a22 + 2.0 * (self.a12 * other.a12.conj()).re
        }
    }

    /// Classical adjoint, so that `d det(A)[X] = tr(adj(A) X)`.
    pub fn adjugate(&self, n: usize) -> Self {
        if n == 1 {
            Self::scalar(1.0)
        } else {
            Self::new(self.a22, self.a11, -self.a12)
        }
    }

    pub fn inverse(&self, n: usize) -> Option<Self> {
        let d = self.det(n);
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(if n == 1 { Self::scalar(1.0 / self.a11) } else { self.adjugate(n).scale(1.0 / d) })
    }

    /// `self · m · self`, Hermitian whenever both factors are.
    pub fn sandwich(&self, m: &HermMat, n: usize) -> Self {
        if n == 1 {
            return Self::scalar(self.a11 * m.a11 * self.a11);
        }
        let b = self.to_array();
        let a = m.to_array();
        let ba = mul2(&b, &a);
        let bab = mul2(&ba, &b);
        Self::new(bab[0][0].re, bab[1][1].re, (bab[0][1] + bab[1][0].conj()) * 0.5)
    }

    /// `a · b · c` for factors whose product is known to be Hermitian
    /// (e.g. `g⁻¹ A (g⁻¹A)^j g⁻¹`); the result is hermitized.
    pub fn product3(a: &HermMat, b: &HermMat, c: &HermMat, n: usize) -> Self {
        if n == 1 {
            return Self::scalar(a.a11 * b.a11 * c.a11);
        }
        let abc = mul2(&mul2(&a.to_array(), &b.to_array()), &c.to_array());
        Self::new(abc[0][0].re, abc[1][1].re, (abc[0][1] + abc[1][0].conj()) * 0.5)
    }

    pub fn to_array(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.a11, 0.0), self.a12],
            [self.a12.conj(), Complex64::new(self.a22, 0.0)],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a22.is_finite() && self.a12.re.is_finite() && self.a12.im.is_finite()
    }
}

fn mul2(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

impl Add for HermMat {
    type Output = HermMat;
    fn add(self, rhs: HermMat) -> HermMat {
        HermMat { a11: self.a11 + rhs.a11, a22: self.a22 + rhs.a22, a12: self.a12 + rhs.a12 }
    }
}

impl Sub for HermMat {
    type Output = HermMat;
    fn sub(self, rhs: HermMat) -> HermMat {
        HermMat { a11: self.a11 - rhs.a11, a22: self.a22 - rhs.a22, a12: self.a12 - rhs.a12 }
    }
}

impl Mul<f64> for HermMat {
    type Output = HermMat;
    fn mul(self, rhs: f64) -> HermMat {
        self.scale(rhs)
    }
}

/// `C(n, k)` for the small dimensions used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Elementary symmetric polynomial `σ_k` of the given values (`σ_0 = 1`).
pub fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    // e[j] holds σ_j of the prefix processed so far.
    let mut e = [0.0f64; 3];
    e[0] = 1.0;
    for &v in values {
        for j in (1..e.len()).rev() {
            e[j] += v * e[j - 1];
        }
    }
    if k < e.len() {
        e[k]
    } else {
        0.0
    }
}

/// Elementary symmetric functions `(σ₁, σ₂)` of the eigenvalues of `g⁻¹a`,
/// computed without diagonalizing. For `n = 1`, `σ₂` is zero.
pub fn relative_invariants(a: &HermMat, g: &HermMat, n: usize) -> (f64, f64) {
    if n == 1 {
        return (a.a11 / g.a11, 0.0);
    }
    let det_g = g.det(2);
    let cross = a.a11 * g.a22 + a.a22 * g.a11 - 2.0 * (a.a12 * g.a12.conj()).re;
    (cross / det_g, a.det(2) / det_g)
}

/// Eigenvalues of `g⁻¹a` in ascending order (closed form, `n ≤ 2`).
pub fn relative_eigenvalues(a: &HermMat, g: &HermMat, n: usize) -> [f64; 2] {
    let (s1, s2) = relative_invariants(a, g, n);
    if n == 1 {
        return [s1, s1];
    }
    let disc = (s1 * s1 - 4.0 * s2).max(0.0).sqrt();
    // Stable quadratic roots of λ² − s1 λ + s2.
    let q = 0.5 * (s1 + if s1 >= 0.0 { disc } else { -disc });
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, s2 / q) };
    if r1 <= r2 {
        [r1, r2]
    } else {
        [r2, r1]
    }
}

/// `det(g⁻¹a)`, i.e. `αⁿ/ωⁿ` for the form `α` with matrix `a`.
pub fn det_ratio_at(a: &HermMat, g: &HermMat, n: usize) -> f64 {
    a.det(n) / g.det(n)
}

/// `σ_k(λ)/C(n,k)` for `λ` the eigenvalues of `g⁻¹a`, i.e. `α^k∧ω^{n−k}/ωⁿ`.
pub fn sigma_ratio_at(a: &HermMat, g: &HermMat, n: usize, k: usize) -> f64 {
    let lambda = relative_eigenvalues(a, g, n);
    elementary_symmetric(&lambda[..n], k) / binomial(n, k)
}

/// Γ_k margin at one point: `min_{1≤j≤k} σ_j(λ)/C(n,j)`.
pub fn cone_margin_at(a: &HermMat, g: &HermMat, n: usize, k: usize) -> f64 {
    let lambda = relative_eigenvalues(a, g, n);
    (1..=k)
        .map(|j| elementary_symmetric(&lambda[..n], j) / binomial(n, j))
        .fold(f64::INFINITY, f64::min)
}

/// Degree-one version of [`cone_margin_at`]:
/// `min_j sign(σ_j)·|σ_j/C(n,j)|^{1/j}`, comparable with eigenvalues.
pub fn cone_margin_linear_at(a: &HermMat, g: &HermMat, n: usize, k: usize) -> f64 {
    let lambda = relative_eigenvalues(a, g, n);
    (1..=k)
        .map(|j| {
            let v = elementary_symmetric(&lambda[..n], j) / binomial(n, j);
            if j == 1 {
                v
            } else {
                v.signum() * v.abs().powf(1.0 / j as f64)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of `g⁻¹a`.
pub fn min_eigenvalue_at(a: &HermMat, g: &HermMat, n: usize) -> f64 {
    relative_eigenvalues(a, g, n)[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn elementary_symmetric_small_cases() {
        assert_eq!(elementary_symmetric(&[2.0, -0.5], 1), 1.5);
        assert_eq!(elementary_symmetric(&[2.0, -0.5], 2), -1.0);
        assert_eq!(elementary_symmetric(&[3.0], 1), 3.0);
        assert_eq!(elementary_symmetric(&[3.0], 0), 1.0);
        assert_eq!(binomial(2, 1), 2.0);
        assert_eq!(binomial(2, 2), 1.0);
    }

    #[test]
    fn eigenvalues_match_invariants() {
        let g = HermMat::new(2.0, 1.5, c(0.3, -0.2));
        let a = HermMat::new(1.0, -0.7, c(0.4, 0.9));
        let [l1, l2] = relative_eigenvalues(&a, &g, 2);
        let (s1, s2) = relative_invariants(&a, &g, 2);
        assert!((l1 + l2 - s1).abs() < 1e-13);
        assert!((l1 * l2 - s2).abs() < 1e-13);
        // det(a − λ g) = 0 at each eigenvalue.
        for l in [l1, l2] {
            assert!((a - g.scale(l)).det(2).abs() < 1e-12);
        }
    }

    #[test]
    fn adjugate_route_equals_newton_identity_route() {
        let g = HermMat::new(1.3, 0.8, c(0.1, 0.2));
        let a = HermMat::new(2.0, 1.0, c(-0.3, 0.5));
        let gi = g.inverse(2).unwrap();
        let (s1, _) = relative_invariants(&a, &g, 2);
        let lhs = a.adjugate(2).scale(1.0 / g.det(2));
        let rhs = gi.scale(s1) - gi.sandwich(&a, 2);
        assert!((lhs.a11 - rhs.a11).abs() < 1e-13);
        assert!((lhs.a22 - rhs.a22).abs() < 1e-13);
        assert!((lhs.a12 - rhs.a12).norm() < 1e-13);
    }

    #[test]
    fn from_entries_rejects_non_hermitian() {
        let bad = [[c(1.0, 0.0), c(0.5, 0.1)], [c(0.5, 0.1), c(1.0, 0.0)]];
        assert!(HermMat::from_entries(2, &bad).is_none());
        let good = [[c(1.0, 0.0), c(0.5, 0.1)], [c(0.5, -0.1), c(1.0, 0.0)]];
        assert!(HermMat::from_entries(2, &good).is_some());
    }
}
