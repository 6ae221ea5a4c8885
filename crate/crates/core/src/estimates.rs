//! Level-set statistics of the deficit `d = −φ + V` and the chain of
//! inequalities leading from the Trudinger-type integral bound to a uniform
//! bound on `d`: Young and Hölder steps, the tail recursion
//! `r·tail(s+r) ≤ B₀·tail(s)^{1+δ₀}` and its De Giorgi iteration.
//!
//! Integrals are uniform-weight quadratures times `Vol`, summed pairwise.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{pairwise_sum_by, PeriodicField, Torus};
use crate::quadrature::simpson;

/// The deficit `d = −φ + V` together with the weights `e^{wF̂}`.
#[derive(Debug, Clone)]
pub struct Deficit {
    d: Vec<f64>,
    weight: Vec<f64>,
    log_weight: Vec<f64>,
    volume: f64,
    n: usize,
}

impl Deficit {
    pub fn new(
        torus: &Torus,
        phi: &PeriodicField,
        v: &PeriodicField,
        f_hat: &PeriodicField,
        weight_exponent: f64,
    ) -> Result<Self> {
        let grid = torus.grid();
        if phi.grid() != grid || v.grid() != grid || f_hat.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let d = phi.values().iter().zip(v.values()).map(|(p, v)| -p + v).collect();
        let log_weight: Vec<f64> = f_hat.values().iter().map(|f| weight_exponent * f).collect();
        let weight = log_weight.iter().map(|g| g.exp()).collect();
        Ok(Self { d, weight, log_weight, volume: torus.volume(), n: grid.dim() })
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.volume * pairwise_sum_by(self.d.len(), &f) / self.d.len() as f64
    }

    pub fn sup(&self) -> f64 {
        self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ d·e^{wF̂} ωⁿ`.
    pub fn entropy(&self) -> f64 {
        self.integrate(|i| self.d[i] * self.weight[i])
    }

    /// `A_s = ∫_{Ω_s} (d − s) e^{wF̂} ωⁿ` with `Ω_s = {d ≥ s}`.
    pub fn a_s(&self, s: f64) -> f64 {
        self.integrate(|i| if self.d[i] >= s { (self.d[i] - s) * self.weight[i] } else { 0.0 })
    }

    /// `tail(s) = ∫_{Ω_s} e^{wF̂} ωⁿ`.
    pub fn tail(&self, s: f64) -> f64 {
        self.integrate(|i| if self.d[i] >= s { self.weight[i] } else { 0.0 })
    }

    /// `∫_{Ω_s} ωⁿ`.
    pub fn measure(&self, s: f64) -> f64 {
        self.integrate(|i| if self.d[i] >= s { 1.0 } else { 0.0 })
    }

    /// `∫_{Ω_s} (d − s)^e e^{wF̂} ωⁿ`.
    pub fn moment(&self, s: f64, exponent: f64) -> f64 {
        self.integrate(|i| if self.d[i] >= s { (self.d[i] - s).powf(exponent) * self.weight[i] } else { 0.0 })
    }

    /// `∫_{Ω_s} e^{wF̂}(1 + |wF̂|)^p ωⁿ`.
    pub fn orlicz_on(&self, s: f64, p: f64) -> f64 {
        self.integrate(|i| {
            if self.d[i] >= s {
                self.weight[i] * (1.0 + self.log_weight[i].abs()).powf(p)
            } else {
                0.0
            }
        })
    }

    /// `∫_{Ω_s} exp(α₀ ((d − s)/A_s^{1/(n+1)})^{(n+1)/n}) ωⁿ`; points with
    /// `d = s` contribute 1 even when `A_s = 0`.
    pub fn trudinger_lhs(&self, s: f64, alpha0: f64) -> f64 {
        let a = self.a_s(s);
        self.trudinger_lhs_with(s, alpha0, a)
    }

    fn trudinger_lhs_with(&self, s: f64, alpha0: f64, a: f64) -> f64 {
        let n = self.n as f64;
        let scale = a.powf(1.0 / (n + 1.0));
        self.integrate(|i| {
            if self.d[i] < s {
                return 0.0;
            }
            let x = self.d[i] - s;
            if x == 0.0 {
                1.0
            } else {
                (alpha0 * (x / scale).powf((n + 1.0) / n)).exp()
            }
        })
    }
}

/// Sublevel statistics on an `s` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub s_values: Vec<f64>,
    pub a_s: Vec<f64>,
    pub tail: Vec<f64>,
    pub omega_measure: Vec<f64>,
}

impl LevelStats {
    pub fn from_deficit(deficit: &Deficit, s_values: &[f64]) -> Result<Self> {
        if s_values.windows(2).any(|w| !(w[1] > w[0])) || s_values.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidArgument("s grid must be increasing and nonnegative".into()));
        }
        Ok(Self {
            s_values: s_values.to_vec(),
            a_s: s_values.iter().map(|&s| deficit.a_s(s)).collect(),
            tail: s_values.iter().map(|&s| deficit.tail(s)).collect(),
            omega_measure: s_values.iter().map(|&s| deficit.measure(s)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_values.is_empty()
    }
}

pub fn sublevel_stats(
    torus: &Torus,
    phi: &PeriodicField,
    v: &PeriodicField,
    f_hat: &PeriodicField,
    s_grid: &[f64],
    weight_exponent: f64,
) -> Result<LevelStats> {
    LevelStats::from_deficit(&Deficit::new(torus, phi, v, f_hat, weight_exponent)?, s_grid)
}

/// `points` equispaced values from 0 to `factor·sup_deficit` (or to
/// `factor` when the deficit vanishes).
pub fn default_s_grid(sup_deficit: f64, points: usize, factor: f64) -> Vec<f64> {
    let top = factor * if sup_deficit > 0.0 { sup_deficit } else { 1.0 };
    let m = points.max(2) - 1;
    (0..=m).map(|i| top * i as f64 / m as f64).collect()
}

pub fn entropy(
    torus: &Torus,
    phi: &PeriodicField,
    v: &PeriodicField,
    f_hat: &PeriodicField,
    weight_exponent: f64,
) -> Result<f64> {
    Ok(Deficit::new(torus, phi, v, f_hat, weight_exponent)?.entropy())
}

/// `∫ e^F̂ (1 + |F̂|)^p ωⁿ`.
pub fn orlicz_norm(torus: &Torus, f_hat: &PeriodicField, p: f64) -> f64 {
    orlicz_norm_weighted(torus, f_hat, p, 1.0)
}

/// `∫ e^G (1 + |G|)^p ωⁿ` for `G = w·F̂`.
pub fn orlicz_norm_weighted(torus: &Torus, f_hat: &PeriodicField, p: f64, w: f64) -> f64 {
    let f = f_hat.values();
    torus.volume() * pairwise_sum_by(f.len(), &|i| {
        let g = w * f[i];
        g.exp() * (1.0 + g.abs()).powf(p)
    }) / f.len() as f64
}

/// `C(p) = p (p−1)^{p−1} e^{−(p−1)}`, an upper bound for
/// `e^{−2v} ∫_0^{v^p} η⁻¹` with `η(x) = log(1+x)^p`.
pub fn young_constant(p: f64) -> f64 {
    p * (p - 1.0).powf(p - 1.0) * (-(p - 1.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungReport {
    pub c_p: f64,
    /// `max (v^p e^G − e^G(1+|G|)^p − C(p) e^{2v})`, clipped below at the
    /// most negative value seen.
    pub max_violation: f64,
    pub violations: usize,
    /// `max (v^p e^G − ∫_0^{e^G} η − ∫_0^{v^p} η⁻¹)` over the sampled points.
    pub exact_step_max_violation: f64,
    pub exact_step_samples: usize,
}

impl YoungReport {
    fn merge(self, other: YoungReport) -> YoungReport {
        YoungReport {
            c_p: self.c_p,
            max_violation: self.max_violation.max(other.max_violation),
            violations: self.violations + other.violations,
            exact_step_max_violation: self.exact_step_max_violation.max(other.exact_step_max_violation),
            exact_step_samples: self.exact_step_samples + other.exact_step_samples,
        }
    }
}

/// `∫_0^X log(1+x)^p dx`.
fn eta_integral(x: f64, p: f64) -> f64 {
    // Substituting x = e^y − 1 keeps the integrand smooth near 0.
    let top = x.ln_1p();
    simpson(&|y: f64| y.powf(p) * y.exp(), 0.0, top, 1e-12 * (1.0 + x))
}

/// `∫_0^{v^p} η⁻¹(y) dy = ∫_0^v p z^{p−1}(e^z − 1) dz`.
fn eta_inverse_integral(v: f64, p: f64) -> f64 {
    simpson(&|z: f64| p * z.powf(p - 1.0) * z.exp_m1(), 0.0, v, 1e-12 * (1.0 + v.exp()))
}

fn young_slices(v: &[f64], g: &[f64], p: f64, max_exact: usize) -> YoungReport {
    let c_p = young_constant(p);
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = 0;
    for (&vi, &gi) in v.iter().zip(g) {
        let lhs = vi.powf(p) * gi.exp();
        let rhs = gi.exp() * (1.0 + gi.abs()).powf(p) + c_p * (2.0 * vi).exp();
        let gap = lhs - rhs;
        if gap > 1e-12 * rhs.max(1.0) {
            violations += 1;
        }
        max_violation = max_violation.max(gap);
    }
    let stride = (v.len() / max_exact.max(1)).max(1);
    let mut exact = f64::NEG_INFINITY;
    let mut samples = 0;
    for i in (0..v.len()).step_by(stride) {
        let (vi, gi) = (v[i], g[i]);
        let lhs = vi.powf(p) * gi.exp();
        let rhs = eta_integral(gi.exp(), p) + eta_inverse_integral(vi, p);
        exact = exact.max((lhs - rhs) / rhs.max(1.0));
        samples += 1;
    }
    YoungReport {
        c_p,
        max_violation,
        violations,
        exact_step_max_violation: exact,
        exact_step_samples: samples,
    }
}

/// Pointwise `v^p e^F̂ ≤ e^F̂ (1+|F̂|)^p + C(p) e^{2v}` on the whole grid,
/// plus the underlying Young inequality by quadrature on up to 4096 points.
pub fn young_check(v_field: &PeriodicField, f_hat: &PeriodicField, p: f64) -> Result<YoungReport> {
    if v_field.grid() != f_hat.grid() {
        return Err(Error::GridMismatch);
    }
    if let Some(index) = v_field.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(format!("young_check needs v ≥ 0 (index {index})")));
    }
    Ok(young_slices(v_field.values(), f_hat.values(), p, 4096))
}

/// Young check on `Ω_s` for `v = (α₀/2)((d−s)/A_s^{1/(n+1)})^{(n+1)/n}`,
/// the function used in the moment bound, at every `s` of the grid.
pub fn young_check_levels(deficit: &Deficit, s_values: &[f64], alpha0: f64, p: f64) -> YoungReport {
    let n = deficit.n as f64;
    let mut report: Option<YoungReport> = None;
    for &s in s_values {
        let a = deficit.a_s(s);
        if !(a > 0.0) {
            continue;
        }
        let scale = a.powf(1.0 / (n + 1.0));
        let mut v = Vec::new();
        let mut g = Vec::new();
        for (i, &d) in deficit.d.iter().enumerate() {
            if d >= s {
                v.push(0.5 * alpha0 * ((d - s) / scale).powf((n + 1.0) / n));
                g.push(deficit.log_weight[i]);
            }
        }
        let r = young_slices(&v, &g, p, 64);
        report = Some(match report {
            Some(acc) => acc.merge(r),
            None => r,
        });
    }
    report.unwrap_or(YoungReport {
        c_p: young_constant(p),
        max_violation: f64::NEG_INFINITY,
        violations: 0,
        exact_step_max_violation: f64::NEG_INFINITY,
        exact_step_samples: 0,
    })
}

/// Smallest `C > 0` with `lhs ≤ C e^{C·e}`.
pub fn trudinger_constant(lhs: f64, e: f64) -> f64 {
    if !(lhs > 0.0) {
        return 0.0;
    }
    let f = |c: f64| c * (c * e.max(0.0)).exp() - lhs;
    let (mut lo, mut hi) = (0.0f64, lhs.max(1e-300));
    // f(lhs) ≥ 0 always; bisection to full precision.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Calibrated constant: the smallest `C` that works for every
/// `(lhs, E)` sample.
pub fn calibrate_trudinger(samples: &[(f64, f64)]) -> f64 {
    samples.iter().map(|&(l, e)| trudinger_constant(l, e)).fold(0.0, f64::max)
}

/// `(lhs, lhs ≤ C e^{C E})` at level `s`.
pub fn trudinger_check(deficit: &Deficit, alpha0: f64, s: f64, c: f64) -> (f64, bool) {
    let lhs = deficit.trudinger_lhs(s, alpha0);
    let e = deficit.entropy();
    (lhs, lhs <= c * (c * e).exp())
}

/// Constants `ε` and `Λ` of the comparison function for normalized mass `a`:
/// `ε^{n+1} = a n^{−n} (n+1)^n`, `Λ = n^{n+1} (n+1)^{−n−1} ε^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiConstants {
    pub epsilon: f64,
    pub lambda: f64,
}

pub fn phi_constants(a: f64, n: usize) -> PhiConstants {
    let nf = n as f64;
    let eps_pow = a * nf.powi(-(n as i32)) * (nf + 1.0).powi(n as i32);
    PhiConstants {
        epsilon: eps_pow.powf(1.0 / (nf + 1.0)),
        lambda: nf.powi(n as i32 + 1) * (nf + 1.0).powi(-(n as i32) - 1) * eps_pow,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiReport {
    pub sup_phi: f64,
    pub argmax: usize,
    /// `sup (u_β − V)⁺`.
    pub eps_beta: f64,
    pub constants: PhiConstants,
    /// `ε_β − sup Φ`.
    pub margin: f64,
}

/// Evaluates `Φ = −ε(−ψ + u_β + 1 + Λ)^{n/(n+1)} − (φ_t − u_β + s)` on the
/// grid. `a_normalized` is `A_{s,k,β}/Vol`, the mass of the auxiliary
/// density relative to `ωⁿ`.
pub fn phi_comparison_check(
    phi_t: &PeriodicField,
    u_beta: &PeriodicField,
    psi: &PeriodicField,
    v: &PeriodicField,
    s: f64,
    a_normalized: f64,
    n: usize,
) -> Result<PhiReport> {
    let grid = phi_t.grid();
    if u_beta.grid() != grid || psi.grid() != grid || v.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let excess = psi.values().iter().zip(u_beta.values()).map(|(p, u)| p - u - 1.0).enumerate().fold(
        (0usize, f64::NEG_INFINITY),
        |best, (i, e)| if e > best.1 { (i, e) } else { best },
    );
    if excess.1 >= 0.0 {
        return Err(Error::BetaTooSmall { index: excess.0, excess: excess.1 });
    }
    let c = phi_constants(a_normalized, n);
    let expo = n as f64 / (n as f64 + 1.0);
    let mut sup_phi = f64::NEG_INFINITY;
    let mut argmax = 0;
    for i in 0..grid.len() {
        let (p, u, ps) = (phi_t.values()[i], u_beta.values()[i], psi.values()[i]);
        let val = -c.epsilon * (-ps + u + 1.0 + c.lambda).powf(expo) - (p - u + s);
        if val > sup_phi {
            sup_phi = val;
            argmax = i;
        }
    }
    let eps_beta = u_beta.values().iter().zip(v.values()).map(|(u, v)| u - v).fold(0.0, f64::max);
    Ok(PhiReport { sup_phi, argmax, eps_beta, constants: c, margin: eps_beta - sup_phi })
}

/// `δ₀ = (p − n)/(pn)`.
pub fn delta0(p: f64, n: usize) -> f64 {
    (p - n as f64) / (p * n as f64)
}

/// Hölder exponent `q = p(n+1)/(p(n+1) − n)`.
pub fn holder_q(p: f64, n: usize) -> f64 {
    let nf = n as f64;
    p * (nf + 1.0) / (p * (nf + 1.0) - nf)
}

/// `B₀ = (2^p α₀^{−p} (orlicz + C(p)·C e^{C E}))^{1/p}` with the calibrated
/// Trudinger constant `C`.
pub fn b0_constant(p: f64, alpha0: f64, orlicz: f64, c_trud: f64, e_t: f64) -> f64 {
    let k = 2f64.powf(p) * alpha0.powf(-p) * (orlicz + young_constant(p) * c_trud * (c_trud * e_t).exp());
    k.powf(1.0 / p)
}

fn rel_margin(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        // Both sides vanish (empty level): the step says nothing.
        f64::INFINITY
    } else {
        (rhs - lhs) / scale
    }
}

/// Relative margins `(rhs − lhs)/max(|lhs|, |rhs|)` of each step; all should
/// be ≥ 0 up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub b0: f64,
    pub delta0: f64,
    pub q: f64,
    /// `∫_{Ω_s}(d−s)^{(n+1)p/n}e^G ≤ 2^pα₀^{−p}A_s^{p/n}(∫_{Ω_s}e^G(1+|G|)^p + C(p)·LHS(s))`.
    pub moment_margin: f64,
    /// The same bound with `orlicz + C(p)·C e^{CE}` on the right.
    pub moment_margin_calibrated: f64,
    /// `A_s ≤ moment^{n/((n+1)p)} tail^{1/q}`.
    pub holder_margin: f64,
    /// `A_s ≤ B₀ tail^{1+δ₀}`.
    pub b0_margin: f64,
    /// `s` at which `b0_margin` is attained.
    pub worst_s: f64,
    pub trudinger_lhs: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn holder_chain_check(
    deficit: &Deficit,
    stats: &LevelStats,
    orlicz: f64,
    e_t: f64,
    alpha0: f64,
    p: f64,
    c_trud: f64,
) -> HolderReport {
    let n = deficit.n;
    let nf = n as f64;
    let d0 = delta0(p, n);
    let q = holder_q(p, n);
    let b0 = b0_constant(p, alpha0, orlicz, c_trud, e_t);
    let c_p = young_constant(p);
    let pre = 2f64.powf(p) * alpha0.powf(-p);
    let calibrated = orlicz + c_p * c_trud * (c_trud * e_t).exp();
    let mut out = HolderReport {
        b0,
        delta0: d0,
        q,
        moment_margin: f64::INFINITY,
        moment_margin_calibrated: f64::INFINITY,
        holder_margin: f64::INFINITY,
        b0_margin: f64::INFINITY,
        worst_s: 0.0,
        trudinger_lhs: Vec::with_capacity(stats.len()),
    };
    let m_exp = (nf + 1.0) * p / nf;
    for i in 0..stats.len() {
        let (s, a, tail) = (stats.s_values[i], stats.a_s[i], stats.tail[i]);
        let lhs = deficit.trudinger_lhs_with(s, alpha0, a);
        out.trudinger_lhs.push(lhs);
        let moment = deficit.moment(s, m_exp);
        let ap = a.powf(p / nf);
        out.moment_margin =
            out.moment_margin.min(rel_margin(moment, pre * ap * (deficit.orlicz_on(s, p) + c_p * lhs)));
        out.moment_margin_calibrated = out.moment_margin_calibrated.min(rel_margin(moment, pre * ap * calibrated));
        out.holder_margin =
            out.holder_margin.min(rel_margin(a, moment.powf(nf / ((nf + 1.0) * p)) * tail.powf(1.0 / q)));
        let m = rel_margin(a, b0 * tail.powf(1.0 + d0));
        if m < out.b0_margin {
            out.b0_margin = m;
            out.worst_s = s;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeGiorgiResult {
    pub s0: f64,
    pub s_infinity: f64,
}

/// `S∞ = s₀ + 2B₀ tail(s₀)^{δ₀}/(1 − 2^{−δ₀})` with `s₀` the first grid
/// value where `2B₀ tail(s₀)^{δ₀} ≤ 1`.
pub fn degiorgi_iterate(s_values: &[f64], tail: &[f64], b0: f64, delta0: f64) -> Result<DeGiorgiResult> {
    if !(b0 > 0.0) || !(delta0 > 0.0) {
        return Err(Error::InvalidArgument(format!("need B0 > 0 and delta0 > 0 (got {b0}, {delta0})")));
    }
    let mut min_step = f64::INFINITY;
    for (&s, &phi) in s_values.iter().zip(tail) {
        let r = 2.0 * b0 * phi.max(0.0).powf(delta0);
        if r <= 1.0 {
            return Ok(DeGiorgiResult { s0: s, s_infinity: s + r / (1.0 - 2f64.powf(-delta0)) });
        }
        min_step = min_step.min(r);
    }
    Err(Error::NoValidS0 { min_step })
}

/// `min (B₀ tail(s)^{1+δ₀} − r·tail(s+r))` relative margin over the grid
/// and the given step sizes.
pub fn degiorgi_relation_check(deficit: &Deficit, s_values: &[f64], rs: &[f64], b0: f64, delta0: f64) -> f64 {
    let mut worst = f64::INFINITY;
    for &s in s_values {
        let rhs = b0 * deficit.tail(s).powf(1.0 + delta0);
        for &r in rs {
            worst = worst.min(rel_margin(r * deficit.tail(s + r), rhs));
        }
    }
    worst
}

/// Largest `α ∈ [0, cap]` (to bisection precision) with
/// `∫ exp(α(−ψ)) ωⁿ ≤ 2 Vol` for every candidate.
pub fn alpha0_estimate(torus: &Torus, candidates: &[PeriodicField], cap: f64) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if candidates.iter().any(|c| c.grid() != torus.grid()) {
        return Err(Error::GridMismatch);
    }
    // log of the normalized integral, computed with a max shift.
    let log_mean = |c: &PeriodicField, alpha: f64| -> f64 {
        let x = c.values();
        let m = x.iter().map(|v| -alpha * v).fold(f64::NEG_INFINITY, f64::max);
        m + (pairwise_sum_by(x.len(), &|i| (-alpha * x[i] - m).exp()) / x.len() as f64).ln()
    };
    let ok = |alpha: f64| candidates.iter().all(|c| log_mean(c, alpha) <= 2f64.ln());
    if ok(cap) {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Everything the uniform-bound argument produces for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub e_t: f64,
    pub orlicz_p: f64,
    pub alpha0: f64,
    pub b0: f64,
    pub delta0: f64,
    pub q: f64,
    pub s0: Option<f64>,
    pub s_infinity: Option<f64>,
    pub sup_deficit: f64,
    pub min_deficit: f64,
    pub stats: LevelStats,
    pub trudinger_values: Vec<f64>,
    /// Frozen constant used for the assertions.
    pub fitted_c_key: f64,
    /// Smallest constant that would work for this run alone.
    pub best_c: f64,
    pub trudinger_ok: bool,
    pub holder: HolderReport,
    pub young: YoungReport,
    pub degiorgi_margin: f64,
}

/// Inputs that are frozen across a family of runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenConstants {
    pub p: f64,
    pub alpha0: f64,
    pub c_key: f64,
    pub weight_exponent: f64,
}

/// Runs the whole chain on one converged pair `(φ, V)`.
pub fn estimate_report(
    torus: &Torus,
    phi: &PeriodicField,
    v: &PeriodicField,
    f_hat: &PeriodicField,
    s_grid: &[f64],
    frozen: &FrozenConstants,
) -> Result<EstimateReport> {
    let n = torus.grid().dim();
    if !(frozen.p > n as f64) {
        return Err(Error::InvalidArgument(format!("p > n is required (p = {})", frozen.p)));
    }
    let deficit = Deficit::new(torus, phi, v, f_hat, frozen.weight_exponent)?;
    let stats = LevelStats::from_deficit(&deficit, s_grid)?;
    let e_t = deficit.entropy();
    let orlicz = orlicz_norm_weighted(torus, f_hat, frozen.p, frozen.weight_exponent);
    let holder = holder_chain_check(&deficit, &stats, orlicz, e_t, frozen.alpha0, frozen.p, frozen.c_key);
    let trudinger_values = holder.trudinger_lhs.clone();
    let best_c = trudinger_values.iter().map(|&l| trudinger_constant(l, e_t)).fold(0.0, f64::max);
    let bound = frozen.c_key * (frozen.c_key * e_t).exp();
    let trudinger_ok = trudinger_values.iter().all(|&l| l <= bound);
    let young = young_check_levels(&deficit, s_grid, frozen.alpha0, frozen.p);
    let dg = degiorgi_iterate(&stats.s_values, &stats.tail, holder.b0, holder.delta0).ok();
    // Steps spanning the range of the deficit, so that tail(s + r) > 0 for some pairs.
    let top = deficit.sup().max(0.0);
    let rs: Vec<f64> = if top > 0.0 { (1..=10).map(|i| top * i as f64 / 10.0).collect() } else { Vec::new() };
    let degiorgi_margin = degiorgi_relation_check(&deficit, s_grid, &rs, holder.b0, holder.delta0);
    let min_deficit = deficit.d.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EstimateReport {
        e_t,
        orlicz_p: orlicz,
        alpha0: frozen.alpha0,
        b0: holder.b0,
        delta0: holder.delta0,
        q: holder.q,
        s0: dg.map(|d| d.s0),
        s_infinity: dg.map(|d| d.s_infinity),
        sup_deficit: deficit.sup(),
        min_deficit,
        stats,
        trudinger_values,
        fitted_c_key: frozen.c_key,
        best_c,
        trudinger_ok,
        holder,
        young,
        degiorgi_margin,
    })
}
