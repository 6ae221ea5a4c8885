//! Discrete flat complex tori and their spectral calculus.
//!
//! Real coordinates are ordered `(x₁, y₁, x₂, y₂)` with `z_j = x_j + i y_j`,
//! each in `[0, 1)` sampled at `N` points. Fields are stored row-major with
//! axis 0 slowest.
//!
//! The complex Hessian `∂²u/∂z_j∂z̄_k` has Fourier symbol `−π² P_j conj(P_k)`
//! with `P_j = b_j + i a_j` for the mode `(a_j, b_j)`. Diagonal entries use the
//! full second-derivative symbol `−π²(a_j² + b_j²)` (Nyquist included) so that
//! constants are the only kernel; off-diagonal entries are products of first
//! derivatives and drop the Nyquist wavenumber to stay Hermitian.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::herm::{self, HermMat};

/// Threshold above which an eigenvalue of `χ₀` counts towards the numerical
/// dimension.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// Eigenvalues of `χ₀` above `-PSD_SLACK` are accepted as nonnegative.
pub const PSD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    points: usize,
}

impl Grid {
    pub fn new(n: usize, points: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!("complex dimension must be 1 or 2, got {n}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two ≥ 8, got {points}"
            )));
        }
        Ok(Self { n, points })
    }

    /// Complex dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Points per real axis `N`.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    /// Total number of grid points `N^{2n}`.
    pub fn len(&self) -> usize {
        self.points.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index along `axis` of the flat index `idx`.
    #[inline]
    pub fn digit(&self, idx: usize, axis: usize) -> usize {
        let shift = self.points.trailing_zeros() as usize * (self.axes() - 1 - axis);
        (idx >> shift) & (self.points - 1)
    }

    /// Real coordinates `(x₁, y₁, x₂, y₂)` of a grid point; unused trailing
    /// entries are zero for `n = 1`.
    pub fn coords(&self, idx: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        let h = 1.0 / self.points as f64;
        for (axis, slot) in out.iter_mut().enumerate().take(self.axes()) {
            *slot = self.digit(idx, axis) as f64 * h;
        }
        out
    }
}

/// A real function sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: Grid,
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f` at every grid point; `f` receives `(x₁, y₁, x₂, y₂)`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 4]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the (first) maximal value.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v + c).collect() }
    }

    pub fn sup_distance(&self, other: &PeriodicField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// A Hermitian matrix per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianField {
    grid: Grid,
    matrices: Vec<HermMat>,
}

impl HermitianField {
    pub fn new(grid: Grid, matrices: Vec<HermMat>) -> Result<Self> {
        if matrices.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} matrices, got {}",
                grid.len(),
                matrices.len()
            )));
        }
        if let Some(index) = matrices.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, matrices })
    }

    pub fn constant(grid: Grid, m: HermMat) -> Self {
        Self { grid, matrices: vec![m; grid.len()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn matrices(&self) -> &[HermMat] {
        &self.matrices
    }

    /// Pointwise `self + c·other`.
    pub fn add_scaled(&self, other: &HermitianField, c: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let matrices = self.matrices.iter().zip(&other.matrices).map(|(a, b)| *a + b.scale(c)).collect();
        Ok(Self { grid: self.grid, matrices })
    }

    /// Pointwise `self + m`.
    pub fn add_constant(&self, m: HermMat) -> Self {
        Self { grid: self.grid, matrices: self.matrices.iter().map(|a| *a + m).collect() }
    }
}

/// `det(g⁻¹a)` at every point; may be negative.
pub fn det_ratio(a: &HermitianField, g: &HermMat) -> PeriodicField {
    let n = a.grid.dim();
    let values = a.matrices.iter().map(|m| herm::det_ratio_at(m, g, n)).collect();
    PeriodicField { grid: a.grid, values }
}

/// `σ_k(λ)/C(n,k)` for `λ` the eigenvalues of `g⁻¹a` at every point.
pub fn sigma_k_ratio(a: &HermitianField, g: &HermMat, k: usize) -> Result<PeriodicField> {
    let n = a.grid.dim();
    check_k(n, k)?;
    let values = a.matrices.iter().map(|m| herm::sigma_ratio_at(m, g, n, k)).collect();
    Ok(PeriodicField { grid: a.grid, values })
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={n}, got {k}")));
    }
    Ok(())
}

/// Summation in a fixed pairwise order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 64;
    if values.len() <= BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub(crate) fn pairwise_sum_by(len: usize, f: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 64 {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, len, f)
}

/// Reusable FFT buffers for the hot loops.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    spectrum: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl Workspace {
    pub(crate) fn new(grid: Grid) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { spectrum: vec![zero; grid.len()], work: vec![zero; grid.len()] }
    }
}

/// A grid together with its Kähler metric and spectral machinery.
#[derive(Debug, Clone)]
pub struct Torus {
    grid: Grid,
    g: HermMat,
    fft: FftNd,
    /// First-derivative wavenumbers per axis index (Nyquist dropped).
    first: Vec<f64>,
    /// Squared second-derivative wavenumbers per axis index.
    second: Vec<f64>,
}

impl Torus {
    pub fn new(grid: Grid, g: HermMat) -> Result<Self> {
        let n = grid.dim();
        let lambda_min = herm::min_eigenvalue_at(&g, &HermMat::identity(n), n);
        if !(lambda_min > 0.0) || !g.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Kähler matrix must be positive definite (min eigenvalue {lambda_min:e})"
            )));
        }
        let points = grid.points();
        let half = points / 2;
        let signed = |i: usize| if i <= half { i as f64 } else { i as f64 - points as f64 };
        let first = (0..points).map(|i| if i == half { 0.0 } else { signed(i) }).collect();
        let second = (0..points).map(|i| signed(i) * signed(i)).collect();
        Ok(Self { grid, g, fft: FftNd::new(points, grid.axes()), first, second })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn metric(&self) -> &HermMat {
        &self.g
    }

    /// `∫_X ωⁿ = det g` (the torus has unit Lebesgue volume).
    pub fn volume(&self) -> f64 {
        self.g.det(self.grid.dim())
    }

    /// `∫_X f ωⁿ` by the uniform-weight rule.
    pub fn integrate(&self, f: &PeriodicField) -> f64 {
        self.integrate_values(&f.values)
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.grid.len());
        self.volume() * pairwise_sum(values) / values.len() as f64
    }

    /// Spectral `∂²u/∂z_j∂z̄_k`.
    pub fn complex_hessian(&self, u: &PeriodicField) -> HermitianField {
        let mut ws = Workspace::new(self.grid);
        let mut out = vec![HermMat::ZERO; self.grid.len()];
        self.hessian_into(&u.values, &mut out, &mut ws);
        HermitianField { grid: self.grid, matrices: out }
    }

    /// Hessian symbol matrix of the Fourier mode with flat index `idx`.
    #[inline]
    pub(crate) fn symbol(&self, idx: usize) -> HermMat {
        let g = &self.grid;
        let p2 = PI * PI;
        let a1 = g.digit(idx, 0);
        let b1 = g.digit(idx, 1);
        let d1 = -p2 * (self.second[a1] + self.second[b1]);
        if g.dim() == 1 {
            return HermMat::scalar(d1);
        }
        let a2 = g.digit(idx, 2);
        let b2 = g.digit(idx, 3);
        let d2 = -p2 * (self.second[a2] + self.second[b2]);
        let pj1 = Complex64::new(self.first[b1], self.first[a1]);
        let pj2 = Complex64::new(self.first[b2], self.first[a2]);
        HermMat::new(d1, d2, -(pj1 * pj2.conj()) * p2)
    }

    pub(crate) fn hessian_into(&self, u: &[f64], out: &mut [HermMat], ws: &mut Workspace) {
        let n = self.grid.dim();
        for (z, &v) in ws.spectrum.iter_mut().zip(u) {
            *z = Complex64::new(v, 0.0);
        }
        self.fft.forward(&mut ws.spectrum);
        if n == 1 {
            for (i, (w, s)) in ws.work.iter_mut().zip(&ws.spectrum).enumerate() {
                *w = s * self.symbol(i).a11;
            }
            self.fft.inverse(&mut ws.work);
            for (m, w) in out.iter_mut().zip(&ws.work) {
                *m = HermMat::scalar(w.re);
            }
            return;
        }
        // Both diagonal entries are real fields: pack them as re + i·im.
        for (i, (w, s)) in ws.work.iter_mut().zip(&ws.spectrum).enumerate() {
            let sym = self.symbol(i);
            *w = s * Complex64::new(sym.a11, sym.a22);
        }
        self.fft.inverse(&mut ws.work);
        for (m, w) in out.iter_mut().zip(&ws.work) {
            m.a11 = w.re;
            m.a22 = w.im;
        }
        for (i, (w, s)) in ws.work.iter_mut().zip(&ws.spectrum).enumerate() {
            *w = s * self.symbol(i).a12;
        }
        self.fft.inverse(&mut ws.work);
        for (m, w) in out.iter_mut().zip(&ws.work) {
            m.a12 = *w;
        }
    }

    /// Applies the real Fourier multiplier `mult(idx)` to `u`.
    pub(crate) fn fourier_multiply(
        &self,
        u: &[f64],
        out: &mut [f64],
        ws: &mut Workspace,
        mult: impl Fn(usize) -> f64,
    ) {
        for (z, &v) in ws.spectrum.iter_mut().zip(u) {
            *z = Complex64::new(v, 0.0);
        }
        self.fft.forward(&mut ws.spectrum);
        for (i, z) in ws.spectrum.iter_mut().enumerate() {
            *z *= mult(i);
        }
        self.fft.inverse(&mut ws.spectrum);
        for (o, z) in out.iter_mut().zip(&ws.spectrum) {
            *o = z.re;
        }
    }
}

/// The nef class `[χ]` with `χ = χ₀ + i∂∂̄ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NefClassSpec {
    chi0: HermMat,
    rho: PeriodicField,
    nu: usize,
}

impl NefClassSpec {
    pub fn new(chi0: HermMat, rho: PeriodicField) -> Result<Self> {
        let n = rho.grid().dim();
        let eig = herm::relative_eigenvalues(&chi0, &HermMat::identity(n), n);
        let eig = &eig[..n];
        if eig.iter().any(|&l| l < -PSD_SLACK) || !chi0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "χ₀ must be positive semidefinite (eigenvalues {eig:?})"
            )));
        }
        let nu = eig.iter().filter(|&&l| l > RANK_THRESHOLD).count();
        Ok(Self { chi0, rho, nu })
    }

    pub fn chi0(&self) -> &HermMat {
        &self.chi0
    }

    pub fn rho(&self) -> &PeriodicField {
        &self.rho
    }

    /// Numerical dimension `ν = rank χ₀`.
    pub fn nu(&self) -> usize {
        self.nu
    }
}

/// Full description of one experiment geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub g: HermMat,
    pub nef: NefClassSpec,
    pub f_raw: PeriodicField,
    pub p: f64,
}

impl ProblemSpec {
    pub fn new(grid: Grid, g: HermMat, nef: NefClassSpec, f_raw: PeriodicField, p: f64) -> Result<Self> {
        let spec = Self { grid, g, nef, f_raw, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.dim();
        if self.nef.rho.grid() != self.grid || self.f_raw.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let lambda_min = herm::min_eigenvalue_at(&self.g, &HermMat::identity(n), n);
        if !(lambda_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Kähler matrix g must be positive definite (min eigenvalue {lambda_min:e})"
            )));
        }
        if !(self.p > n as f64) {
            return Err(Error::InvalidArgument(format!("p > n is required (p = {}, n = {n})", self.p)));
        }
        Ok(())
    }
}

/// Normalizes a density so that `∫ e^F̂ ωⁿ = ∫ ωⁿ`.
pub fn normalize_density(torus: &Torus, f_raw: &PeriodicField) -> Result<PeriodicField> {
    if f_raw.grid != torus.grid {
        return Err(Error::GridMismatch);
    }
    let shift = f_raw.max();
    let len = f_raw.values.len();
    let mass = torus.volume() * pairwise_sum_by(len, &|i| (f_raw.values[i] - shift).exp()) / len as f64;
    let offset = shift + (mass / torus.volume()).ln();
    f_raw.map(|v| v - offset)
}

/// A validated [`ProblemSpec`] with its derived data: the normalized density
/// `F̂` and the Hessian of the perturbation `ρ`.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: ProblemSpec,
    torus: Torus,
    f_hat: PeriodicField,
    rho_hessian: HermitianField,
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let torus = Torus::new(spec.grid, spec.g)?;
        let f_hat = normalize_density(&torus, &spec.f_raw)?;
        let rho_hessian = torus.complex_hessian(&spec.nef.rho);
        Ok(Self { spec, torus, f_hat, rho_hessian })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn grid(&self) -> Grid {
        self.spec.grid
    }

    pub fn dim(&self) -> usize {
        self.spec.grid.dim()
    }

    pub fn metric(&self) -> &HermMat {
        &self.spec.g
    }

    pub fn f_hat(&self) -> &PeriodicField {
        &self.f_hat
    }

    pub fn volume(&self) -> f64 {
        self.torus.volume()
    }

    /// Constant part `χ₀ + t·g` of the background form.
    pub fn constant_form(&self, t: f64) -> HermMat {
        *self.spec.nef.chi0() + self.spec.g.scale(t)
    }

    /// `ĝ_t = χ₀ + i∂∂̄ρ + t·g` at every point.
    pub fn background(&self, t: f64) -> HermitianField {
        self.rho_hessian.add_constant(self.constant_form(t))
    }

    /// `c_t = ∫ ω̂_t^k ∧ ω^{n−k} / ∫ e^F̂ ωⁿ`.
    pub fn cohomology_constant(&self, t: f64, k: usize) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
        }
        check_k(self.dim(), k)?;
        let ratio = sigma_k_ratio(&self.background(t), &self.spec.g, k)?;
        let mass = self.torus.integrate_values(&self.f_hat.values.iter().map(|f| f.exp()).collect::<Vec<_>>());
        Ok(self.torus.integrate(&ratio) / mass)
    }

    /// `u = −ρ + min ρ`: nonpositive with `ĝ_t + i∂∂̄u = χ₀ + t·g > 0`.
    pub fn kahler_potential(&self) -> PeriodicField {
        let rho = self.spec.nef.rho();
        let m = rho.min();
        PeriodicField { grid: rho.grid, values: rho.values.iter().map(|r| m - r).collect() }
    }
}

/// `c_t` for a raw specification; see [`Problem::cohomology_constant`].
pub fn cohomology_constants(spec: &ProblemSpec, t: f64, k: usize) -> Result<f64> {
    Problem::new(spec.clone())?.cohomology_constant(t, k)
}
