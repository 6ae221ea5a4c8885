//! Complex Monge-Ampère solves: the degenerate family
//! `(ĝ_t + i∂∂̄φ)ⁿ = c_t e^F̂ ωⁿ`, the exponential β-equation
//! `(ĝ_t + i∂∂̄u)ⁿ = e^{βu} ωⁿ`, and the auxiliary equation driven by the
//! smoothed positive part `τ_k`.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{HermitianField, PeriodicField, Problem, Torus};
use crate::newton::{newton_solve, normalize_sup, DetOperator, PointOperator, RightSide};
pub use crate::newton::{SolveResult, SolverOptions};

/// `τ_k(x) = (x + √(x² + k⁻²))/2`, a smooth positive majorant of `x⁺` that
/// decreases to it as `k → ∞`.
pub fn tau(k: u32, x: f64) -> f64 {
    let h = 1.0 / k as f64;
    // Written to avoid cancellation for large negative x.
    if x >= 0.0 {
        0.5 * (x + x.hypot(h))
    } else {
        0.5 * h * h / (x.hypot(h) - x)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("t must lie in (0, 1], got {t}")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 1.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be ≥ 1, got {beta}")));
    }
    Ok(())
}

/// Solves `Op(base + i∂∂̄u) = density` for a density whose integral matches
/// the mass of the left side, starting from `init`.
///
/// If the direct Newton run fails, the right side is deformed from its mean
/// (for which `init` is exact when `base + i∂∂̄init` is constant) to the
/// target along `d_θ ∝ d^θ`.
pub(crate) fn solve_density<O: PointOperator>(
    torus: &Torus,
    op: &O,
    base: &HermitianField,
    density: &[f64],
    init: &PeriodicField,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let direct = newton_solve(torus, op, base, RightSide::Density(density), init, opts);
    let first_err = match direct {
        Ok(r) => return Ok(normalize_sup(r)),
        Err(e @ (Error::NonConvergence { .. } | Error::PositivityLoss { .. } | Error::ConeLoss { .. })) => e,
        Err(e) => return Err(e),
    };
    if density.iter().any(|&d| !(d > 0.0)) {
        return Err(first_err);
    }
    let mass = torus.integrate_values(density);
    let logs: Vec<f64> = density.iter().map(|d| d.ln()).collect();
    let deform = |theta: f64| -> Vec<f64> {
        let raw: Vec<f64> = logs.iter().map(|l| (theta * l).exp()).collect();
        let scale = mass / torus.integrate_values(&raw);
        raw.into_iter().map(|v| v * scale).collect()
    };

    let mut current = init.clone();
    let (mut theta, mut step) = (0.0f64, 0.25f64);
    let mut last_err = first_err;
    while theta < 1.0 {
        if step < 1.0 / 1024.0 {
            return Err(last_err);
        }
        let next = (theta + step).min(1.0);
        let d = deform(next);
        match newton_solve(torus, op, base, RightSide::Density(&d), &current, opts) {
            Ok(r) => {
                current = r.phi.clone();
                theta = next;
                if theta >= 1.0 {
                    return Ok(normalize_sup(r));
                }
                step *= 1.5;
            }
            Err(e @ (Error::NonConvergence { .. } | Error::PositivityLoss { .. } | Error::ConeLoss { .. })) => {
                last_err = e;
                step *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

/// Solves `Op(base + i∂∂̄u) = scale·e^{βu}`. Without a warm start the iterate
/// starts from `u₀ = −ρ + log(Op(χ₀+tg)/scale)/β`, i.e. the potential with
/// constant form shifted to balance the right side on average; if that fails,
/// `β` is ramped up geometrically from 1.
pub(crate) fn solve_exponential<O: PointOperator>(
    problem: &Problem,
    op: &O,
    t: f64,
    scale: f64,
    beta: f64,
    init: Option<&PeriodicField>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_beta(beta)?;
    let torus = problem.torus();
    let base = problem.background(t);
    let start = |b: f64| -> PeriodicField {
        let constant = op.value(&problem.constant_form(t));
        let rho = problem.spec().nef.rho();
        let mean_rho = torus.integrate(rho) / torus.volume();
        rho.map(|r| -r + mean_rho + (constant / scale).ln() / b).expect("finite start")
    };
    let rhs = |b: f64| RightSide::Exponential { scale, beta: b };
    let first_err = match init {
        Some(u0) => match newton_solve(torus, op, &base, rhs(beta), u0, opts) {
            Ok(r) => return Ok(r),
            Err(e) => e,
        },
        None => match newton_solve(torus, op, &base, rhs(beta), &start(beta), opts) {
            Ok(r) => return Ok(r),
            Err(e) => e,
        },
    };
    if !matches!(first_err, Error::NonConvergence { .. } | Error::PositivityLoss { .. } | Error::ConeLoss { .. }) {
        return Err(first_err);
    }

    // Continuation in β with warm starts.
    let mut b = 1.0f64;
    let mut current = newton_solve(torus, op, &base, rhs(b), &start(b), opts)?;
    let mut factor = 2.0f64;
    while b < beta {
        let next = (b * factor).min(beta);
        match newton_solve(torus, op, &base, rhs(next), &current.phi, opts) {
            Ok(r) => {
                current = r;
                b = next;
            }
            Err(e @ (Error::NonConvergence { .. } | Error::PositivityLoss { .. } | Error::ConeLoss { .. })) => {
                factor = factor.sqrt();
                if factor < 1.01 {
                    return Err(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(current)
}

/// Continues a converged solution `from` at `from_beta` to `beta` in
/// geometric steps, each warm-started from the previous one. Steps start at
/// the full ratio and shrink by square roots after a failure.
#[allow(clippy::too_many_arguments)]
pub(crate) fn continue_exponential<O: PointOperator>(
    problem: &Problem,
    op: &O,
    t: f64,
    scale: f64,
    from_beta: f64,
    from: &PeriodicField,
    beta: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_beta(beta)?;
    if !(from_beta >= 1.0 && from_beta < beta) {
        return Err(Error::InvalidArgument(format!(
            "continuation needs 1 ≤ from_beta < beta, got {from_beta} → {beta}"
        )));
    }
    let torus = problem.torus();
    let base = problem.background(t);
    let mut b = from_beta;
    let mut current: Option<SolveResult> = None;
    let mut factor = beta / from_beta;
    while b < beta {
        let next = if b * factor >= beta * (1.0 - 1e-12) { beta } else { b * factor };
        let warm = current.as_ref().map_or(from, |r| &r.phi);
        match newton_solve(torus, op, &base, RightSide::Exponential { scale, beta: next }, warm, opts) {
            Ok(r) => {
                current = Some(r);
                b = next;
            }
            Err(e @ (Error::NonConvergence { .. } | Error::PositivityLoss { .. } | Error::ConeLoss { .. })) => {
                factor = factor.sqrt();
                if factor < 1.01 {
                    return Err(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(current.expect("at least one step taken"))
}

pub(crate) fn det_operator(problem: &Problem) -> DetOperator {
    DetOperator { g: *problem.metric(), n: problem.dim() }
}

/// `c_t e^F̂` on the grid.
fn ma_density(problem: &Problem, c_t: f64) -> Vec<f64> {
    problem.f_hat().values().iter().map(|f| c_t * f.exp()).collect()
}

/// Solves `det(g⁻¹(ĝ_t + i∂∂̄φ)) = c_t e^F̂` with `sup φ = 0`.
pub fn solve_ma(problem: &Problem, t: f64, opts: &SolverOptions) -> Result<SolveResult> {
    solve_ma_from(problem, t, None, opts)
}

/// [`solve_ma`] with an optional admissible warm start.
pub fn solve_ma_from(
    problem: &Problem,
    t: f64,
    init: Option<&PeriodicField>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_t(t)?;
    let c_t = problem.cohomology_constant(t, problem.dim())?;
    let density = ma_density(problem, c_t);
    let op = det_operator(problem);
    let base = problem.background(t);
    let fallback = problem.kahler_potential();
    let init = pick_init(problem.torus(), &op, &base, init, &fallback);
    solve_density(problem.torus(), &op, &base, &density, init, opts)
}

/// Uses the warm start when it is admissible, the Kähler potential otherwise.
pub(crate) fn pick_init<'a, O: PointOperator>(
    torus: &Torus,
    op: &O,
    base: &HermitianField,
    warm: Option<&'a PeriodicField>,
    fallback: &'a PeriodicField,
) -> &'a PeriodicField {
    if let Some(w) = warm {
        if w.grid() == torus.grid() {
            let h = torus.complex_hessian(w);
            let ok = base.matrices().iter().zip(h.matrices()).all(|(b, m)| op.margin(&(*b + *m)) > 0.0);
            if ok {
                return w;
            }
        }
    }
    fallback
}

/// Solves `det(g⁻¹(ĝ_t + i∂∂̄u)) = e^{βu}`; the equation fixes constants, so
/// no normalization is applied.
pub fn solve_beta_ma(
    problem: &Problem,
    t: f64,
    beta: f64,
    init: Option<&PeriodicField>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_t(t)?;
    solve_exponential(problem, &det_operator(problem), t, 1.0, beta, init, opts)
}

/// Output of the auxiliary solve: the potential `ψ` (with `sup ψ = 0`) and
/// the normalizing integral `A = ∫ τ_k(−φ_t + u_β − s) e^F̂ ωⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryResult {
    pub solve: SolveResult,
    pub a_skb: f64,
}

/// `∫ τ_k(−φ + u − s) e^F̂ ωⁿ` together with the pointwise values of `τ_k`.
pub fn auxiliary_weight(
    problem: &Problem,
    s: f64,
    k_smooth: u32,
    phi_t: &PeriodicField,
    u_beta: &PeriodicField,
) -> Result<(f64, Vec<f64>)> {
    let grid = problem.grid();
    if phi_t.grid() != grid || u_beta.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if k_smooth == 0 {
        return Err(Error::InvalidArgument("smoothing index must be ≥ 1".into()));
    }
    let taus: Vec<f64> =
        phi_t.values().iter().zip(u_beta.values()).map(|(p, u)| tau(k_smooth, -p + u - s)).collect();
    let weighted: Vec<f64> = taus.iter().zip(problem.f_hat().values()).map(|(t, f)| t * f.exp()).collect();
    Ok((problem.torus().integrate_values(&weighted), taus))
}

/// Solves `det(g⁻¹(ĝ_t + i∂∂̄ψ)) = c_t·Vol·τ_k(−φ_t + u_β − s)/A · e^F̂`
/// with `sup ψ = 0`.
pub fn solve_auxiliary(
    problem: &Problem,
    t: f64,
    s: f64,
    k_smooth: u32,
    phi_t: &PeriodicField,
    u_beta: &PeriodicField,
    opts: &SolverOptions,
) -> Result<AuxiliaryResult> {
    check_t(t)?;
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("s must be ≥ 0, got {s}")));
    }
    let (a_skb, taus) = auxiliary_weight(problem, s, k_smooth, phi_t, u_beta)?;
    let c_t = problem.cohomology_constant(t, problem.dim())?;
    let factor = c_t * problem.volume() / a_skb;
    let density: Vec<f64> =
        taus.iter().zip(problem.f_hat().values()).map(|(tau, f)| factor * tau * f.exp()).collect();
    let op = det_operator(problem);
    let base = problem.background(t);
    let init = problem.kahler_potential();
    let solve = solve_density(problem.torus(), &op, &base, &density, &init, opts)?;
    Ok(AuxiliaryResult { solve, a_skb })
}

/// `C_t = sup log(Op(ĝ_t)/scale)` over points where `ĝ_t` itself is
/// admissible; `−∞` when there are none.
pub(crate) fn measured_c_t<O: PointOperator>(problem: &Problem, op: &O, t: f64, scale: f64) -> f64 {
    problem
        .background(t)
        .matrices()
        .iter()
        .filter(|m| op.margin(m) > 0.0)
        .map(|m| (op.value(m) / scale).ln())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `C_t` for the Monge-Ampère β-equation: `sup log det(g⁻¹ĝ_t)` over the
/// points where `ĝ_t > 0`.
pub fn beta_constant_ma(problem: &Problem, t: f64) -> f64 {
    measured_c_t(problem, &det_operator(problem), t, 1.0)
}
