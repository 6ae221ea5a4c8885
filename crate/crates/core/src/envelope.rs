//! Envelopes `V_t = sup{v ≤ 0 admissible for ĝ_t}` computed through the
//! exponential β-scheme.
//!
//! The reported envelope is `u_{β_max} − sup u_{β_max}`. It is admissible and
//! nonpositive, hence a candidate in the supremum and a lower bound for the
//! true envelope; the barrier inequality bounds it from the other side.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{PeriodicField, Problem};
use crate::hessian::{potential_cone, BetaEquation, Family};
use crate::newton::{SolveResult, SolverOptions};

/// Per-β record of the sandwich inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaStep {
    pub beta: f64,
    pub iterations: usize,
    pub linear_iterations: usize,
    pub residual_sup: f64,
    pub positivity_margin: f64,
    pub sup_u: f64,
    /// `min_x [V − (u_β − C_t/β)]`.
    pub lower_margin: f64,
    /// `min_x [u_β + (C'_t log β + sup(−u_K))/β − (1−1/β)V]`.
    pub upper_margin: f64,
    /// The same with the paper-form bound `u_β + C'_t log β/β`.
    pub upper_margin_bare: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub v: PeriodicField,
    pub t: f64,
    pub k: usize,
    pub beta_schedule: Vec<f64>,
    /// `sup|u_{β_{i+1}} − u_{β_i}|` for consecutive schedule entries.
    pub sup_gaps: Vec<f64>,
    /// Least-squares `C` in `gap_i ≈ C log β_i/β_i` (relative residuals).
    pub fitted_c: f64,
    /// Root-mean-square relative residual of that fit.
    pub fit_residual: f64,
    /// Measured `C_t`.
    pub c_t: f64,
    /// Barrier constant `C'_t` at `β_max`.
    pub c_prime: f64,
    pub steps: Vec<BetaStep>,
    /// Γ_k margin of `ĝ_t + i∂∂̄V`.
    pub admissibility_margin: f64,
    /// Upper bound on `sup(V_true − V)` implied by the barrier at `β_max`.
    pub error_bar: f64,
    /// Solution at `β_max`.
    pub last: SolveResult,
}

impl EnvelopeResult {
    pub fn gaps_decreasing(&self) -> bool {
        self.sup_gaps.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Least-squares fit of `y ≈ C·x` minimizing relative residuals; returns
/// `(C, rms relative residual)`.
pub fn fit_relative(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let r = xi / yi;
        num += r;
        den += r * r;
    }
    let c = num / den;
    let ss: f64 = x.iter().zip(y).map(|(&xi, &yi)| ((yi - c * xi) / yi).powi(2)).sum();
    (c, (ss / x.len() as f64).sqrt())
}

pub fn compute_envelope(
    problem: &Problem,
    t: f64,
    family: Family,
    beta_schedule: &[f64],
    opts: &SolverOptions,
) -> Result<EnvelopeResult> {
    if beta_schedule.len() < 3 {
        return Err(Error::ScheduleTooShort { len: beta_schedule.len() });
    }
    if beta_schedule.windows(2).any(|w| !(w[1] > w[0])) || beta_schedule[0] < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "beta schedule must be increasing and ≥ 1, got {beta_schedule:?}"
        )));
    }
    let eq = BetaEquation::new(problem, t, family)?;
    let mut solves: Vec<SolveResult> = Vec::with_capacity(beta_schedule.len());
    for (i, &beta) in beta_schedule.iter().enumerate() {
        let next = match solves.last() {
            None => eq.solve(problem, beta, None, opts)?,
            Some(prev) => eq.continue_from(problem, beta_schedule[i - 1], &prev.phi, beta, opts)?,
        };
        solves.push(next);
    }
    let last = solves.last().expect("nonempty schedule").clone();
    let v = last.phi.shifted(-last.phi.max());

    let mut sup_gaps = Vec::with_capacity(solves.len() - 1);
    for w in solves.windows(2) {
        sup_gaps.push(w[1].phi.sup_distance(&w[0].phi)?);
    }
    let xs: Vec<f64> = beta_schedule[..sup_gaps.len()].iter().map(|b| b.ln() / b).collect();
    let (fitted_c, fit_residual) = if sup_gaps.iter().all(|&g| g > 0.0) {
        fit_relative(&xs, &sup_gaps)
    } else {
        (0.0, 0.0)
    };

    let c_t = eq.c_t(problem);
    let u_k = problem.kahler_potential();
    let sup_neg_uk = -u_k.min();
    let mut steps = Vec::with_capacity(solves.len());
    let mut c_prime = 0.0;
    for (&beta, s) in beta_schedule.iter().zip(&solves) {
        c_prime = eq.barrier_constant(problem, &u_k, beta)?;
        let lb = beta.ln();
        let mut lower_margin = f64::INFINITY;
        let mut upper_margin = f64::INFINITY;
        let mut upper_margin_bare = f64::INFINITY;
        for (&u, &vv) in s.phi.values().iter().zip(v.values()) {
            lower_margin = lower_margin.min(vv - (u - c_t / beta));
            let lhs = (1.0 - 1.0 / beta) * vv;
            upper_margin = upper_margin.min(u + (c_prime * lb + sup_neg_uk) / beta - lhs);
            upper_margin_bare = upper_margin_bare.min(u + c_prime * lb / beta - lhs);
        }
        steps.push(BetaStep {
            beta,
            iterations: s.iterations,
            linear_iterations: s.linear_iterations,
            residual_sup: s.residual_sup,
            positivity_margin: s.positivity_margin,
            sup_u: s.phi.max(),
            lower_margin,
            upper_margin,
            upper_margin_bare,
        });
    }

    // V_true ≤ (u_β + (C' log β + sup(−u_K))/β)/(1 − 1/β) and V = u_β − sup u_β.
    let beta = *beta_schedule.last().expect("nonempty");
    let bound = (c_prime * beta.ln() + sup_neg_uk) / beta;
    let error_bar = last
        .phi
        .values()
        .iter()
        .zip(v.values())
        .map(|(&u, &vv)| ((u + bound) / (1.0 - 1.0 / beta)).min(0.0) - vv)
        .fold(0.0, f64::max);

    let admissibility_margin = potential_cone(problem, t, &v, eq.k)?.margin;
    Ok(EnvelopeResult {
        v,
        t,
        k: eq.k,
        beta_schedule: beta_schedule.to_vec(),
        sup_gaps,
        fitted_c,
        fit_residual,
        c_t,
        c_prime,
        steps,
        admissibility_margin,
        error_bar,
        last,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub t_list: Vec<f64>,
    /// `max_{i<j} sup_x (V_{t_i} − V_{t_j})⁺`.
    pub max_violation: f64,
    /// Largest envelope error bar among the runs.
    pub max_error_bar: f64,
    pub envelopes: Vec<EnvelopeResult>,
}

impl MonotonicityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Checks `V_{t_i} ≤ V_{t_j}` for `t_i < t_j`.
pub fn envelope_monotonicity_check(
    problem: &Problem,
    t_list: &[f64],
    family: Family,
    beta_schedule: &[f64],
    opts: &SolverOptions,
) -> Result<MonotonicityReport> {
    if t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!("t_list must be increasing, got {t_list:?}")));
    }
    let envelopes = t_list
        .iter()
        .map(|&t| compute_envelope(problem, t, family, beta_schedule, opts))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, &PeriodicField)> = envelopes.iter().map(|e| (e.t, &e.v)).collect();
    let max_violation = monotonicity_violation(&pairs)?.violation;
    let max_error_bar = envelopes.iter().map(|e| e.error_bar).fold(0.0, f64::max);
    Ok(MonotonicityReport { t_list: t_list.to_vec(), max_violation, max_error_bar, envelopes })
}

/// Worst violation of `V_s ≤ V_t` for `s < t` among the given envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    /// `max sup_x (V_s − V_t)⁺`; zero when monotone.
    pub violation: f64,
    /// `(s, t, grid index)` of the worst pair, if any pair violates.
    pub worst: Option<(f64, f64, usize)>,
}

/// Pairwise monotonicity in `t` of envelopes given in any order.
pub fn monotonicity_violation(envelopes: &[(f64, &PeriodicField)]) -> Result<MonotonicityViolation> {
    let mut out = MonotonicityViolation { violation: 0.0, worst: None };
    for (i, &(ti, vi)) in envelopes.iter().enumerate() {
        for &(tj, vj) in &envelopes[i + 1..] {
            if vi.grid() != vj.grid() {
                return Err(Error::GridMismatch);
            }
            if ti == tj {
                continue;
            }
            let (lo, hi, small, large) = if ti < tj { (ti, tj, vi, vj) } else { (tj, ti, vj, vi) };
            for (idx, (a, b)) in small.values().iter().zip(large.values()).enumerate() {
                if a - b > out.violation {
                    out.violation = a - b;
                    out.worst = Some((lo, hi, idx));
                }
            }
        }
    }
    Ok(out)
}
