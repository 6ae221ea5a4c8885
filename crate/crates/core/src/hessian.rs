//! Complex σ_k-Hessian equations `(ĝ_t + i∂∂̄φ)^k ∧ ω^{n−k} = c_t e^F̂ ωⁿ`,
//! their exponential β-approximations, Γ_k-cone membership, and the barrier
//! comparison used to bound `u_β` from below.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{check_k, HermitianField, PeriodicField, Problem};
use crate::herm::{self, HermMat};
use crate::ma::{continue_exponential, det_operator, measured_c_t, pick_init, solve_density, solve_exponential};
use crate::newton::{SigmaOperator, SolveResult, SolverOptions};

/// Pointwise Γ_k membership summary for a form field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeMembership {
    pub k: usize,
    /// `min_x min_{j≤k} σ_j(λ(x))/C(n,j)`.
    pub margin: f64,
    /// Grid point attaining the margin.
    pub worst_index: usize,
}

impl ConeMembership {
    pub fn admissible(&self) -> bool {
        self.margin > 0.0
    }
}

pub fn gamma_k_check(a: &HermitianField, g: &HermMat, k: usize) -> Result<ConeMembership> {
    let n = a.grid().dim();
    check_k(n, k)?;
    let mut margin = f64::INFINITY;
    let mut worst_index = 0;
    for (i, m) in a.matrices().iter().enumerate() {
        let c = herm::cone_margin_at(m, g, n, k);
        if c < margin {
            margin = c;
            worst_index = i;
        }
    }
    Ok(ConeMembership { k, margin, worst_index })
}

/// Γ_k membership of `ĝ_t + i∂∂̄u`.
pub fn potential_cone(problem: &Problem, t: f64, u: &PeriodicField, k: usize) -> Result<ConeMembership> {
    if u.grid() != problem.grid() {
        return Err(Error::GridMismatch);
    }
    let forms = problem.background(t).add_scaled(&problem.torus().complex_hessian(u), 1.0)?;
    gamma_k_check(&forms, problem.metric(), k)
}

/// Solves `σ_k(g⁻¹(ĝ_t + i∂∂̄φ))/C(n,k) = c_t e^F̂` with `sup φ = 0`.
pub fn solve_sigma_k(problem: &Problem, t: f64, k: usize, opts: &SolverOptions) -> Result<SolveResult> {
    solve_sigma_k_from(problem, t, k, None, opts)
}

/// [`solve_sigma_k`] with an optional admissible warm start.
pub fn solve_sigma_k_from(
    problem: &Problem,
    t: f64,
    k: usize,
    init: Option<&PeriodicField>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("t must lie in (0, 1], got {t}")));
    }
    let c_t = problem.cohomology_constant(t, k)?;
    let density: Vec<f64> = problem.f_hat().values().iter().map(|f| c_t * f.exp()).collect();
    let op = SigmaOperator::new(*problem.metric(), problem.dim(), k);
    let base = problem.background(t);
    let fallback = problem.kahler_potential();
    let init = pick_init(problem.torus(), &op, &base, init, &fallback);
    solve_density(problem.torus(), &op, &base, &density, init, opts)
}

/// Which exponential approximation is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `(ĝ_t + i∂∂̄u)ⁿ = e^{βu} ωⁿ`.
    MongeAmpere,
    /// `(ĝ_t + i∂∂̄u)^k ∧ ω^{n−k} = c_t e^{βu} ωⁿ`.
    Hessian(usize),
}

/// An exponential β-equation `Op_k(ĝ_t + i∂∂̄u) = scale·e^{βu}` at fixed `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEquation {
    pub family: Family,
    pub t: f64,
    pub k: usize,
    pub scale: f64,
}

impl BetaEquation {
    pub fn new(problem: &Problem, t: f64, family: Family) -> Result<Self> {
        let n = problem.dim();
        match family {
            Family::MongeAmpere => {
                if !(t > 0.0 && t <= 1.0) {
                    return Err(Error::InvalidArgument(format!("t must lie in (0, 1], got {t}")));
                }
                Ok(Self { family, t, k: n, scale: 1.0 })
            }
            Family::Hessian(k) => {
                let scale = problem.cohomology_constant(t, k)?;
                Ok(Self { family, t, k, scale })
            }
        }
    }

    pub fn solve(
        &self,
        problem: &Problem,
        beta: f64,
        init: Option<&PeriodicField>,
        opts: &SolverOptions,
    ) -> Result<SolveResult> {
        match self.family {
            Family::MongeAmpere => {
                solve_exponential(problem, &det_operator(problem), self.t, 1.0, beta, init, opts)
            }
            Family::Hessian(k) => {
                let op = SigmaOperator::new(*problem.metric(), problem.dim(), k);
                solve_exponential(problem, &op, self.t, self.scale, beta, init, opts)
            }
        }
    }

    /// Carries a converged `u_{from_beta}` to `beta` through intermediate
    /// warm-started solves.
    pub fn continue_from(
        &self,
        problem: &Problem,
        from_beta: f64,
        from: &PeriodicField,
        beta: f64,
        opts: &SolverOptions,
    ) -> Result<SolveResult> {
        if from.grid() != problem.grid() {
            return Err(Error::GridMismatch);
        }
        match self.family {
            Family::MongeAmpere => continue_exponential(
                problem,
                &det_operator(problem),
                self.t,
                1.0,
                from_beta,
                from,
                beta,
                opts,
            ),
            Family::Hessian(k) => {
                let op = SigmaOperator::new(*problem.metric(), problem.dim(), k);
                continue_exponential(problem, &op, self.t, self.scale, from_beta, from, beta, opts)
            }
        }
    }

    /// `C_t = sup log(ratio_k(ĝ_t)/scale)` over points where `ĝ_t ∈ Γ_k`,
    /// so that `β·sup u_β ≤ C_t`.
    pub fn c_t(&self, problem: &Problem) -> f64 {
        let op = SigmaOperator::new(*problem.metric(), problem.dim(), self.k);
        measured_c_t(problem, &op, self.t, self.scale)
    }

    /// `σ_k/C(n,k)` of `ĝ_t + i∂∂̄u` at every point.
    pub fn ratio(&self, problem: &Problem, u: &PeriodicField) -> Result<PeriodicField> {
        let forms = problem.background(self.t).add_scaled(&problem.torus().complex_hessian(u), 1.0)?;
        crate::geometry::sigma_k_ratio(&forms, problem.metric(), self.k)
    }

    /// Barrier constant `C'_t = max(0, k log β + log(scale/m))/log β` with
    /// `m = min ratio_k(ĝ_t + i∂∂̄u)` for a Kähler potential `u`; for `β = 1`
    /// any constant works and 0 is returned.
    pub fn barrier_constant(&self, problem: &Problem, u_kahler: &PeriodicField, beta: f64) -> Result<f64> {
        let m = self.ratio(problem, u_kahler)?.min();
        if !(m > 0.0) {
            return Err(Error::AdmissibilityFailure { what: "u_kahler", margin: m, index: 0 });
        }
        let lb = beta.ln();
        if lb <= 0.0 {
            return Ok(0.0);
        }
        Ok((self.k as f64 * lb + (self.scale / m).ln()).max(0.0) / lb)
    }
}

/// `u_β` for the σ_k family; see [`BetaEquation`].
pub fn solve_beta_sigma_k(
    problem: &Problem,
    t: f64,
    k: usize,
    beta: f64,
    init: Option<&PeriodicField>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    BetaEquation::new(problem, t, Family::Hessian(k))?.solve(problem, beta, init, opts)
}

/// Numerical check of the barrier `ũ = u/β + (1−1/β)v − C'_t log β/β`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub beta: f64,
    pub c_prime: f64,
    /// `min_x [ratio(ũ) − β^{−k} ratio(u)]`; nonnegative by concavity.
    pub concavity_margin: f64,
    /// The same with the weaker factor `β^{−n}`.
    pub concavity_margin_n: f64,
    /// `min_x [ratio(ũ) − scale·e^{βũ}]`: ũ is a subsolution when ≥ 0.
    pub subsolution_margin: f64,
    /// `min_x [u_β − ũ]`; the comparison principle predicts ≥ 0.
    pub comparison_margin: f64,
    pub barrier: PeriodicField,
}

/// Builds the barrier from a Kähler potential `u_kahler` (with
/// `ĝ_t + i∂∂̄u > 0`, `u ≤ 0`) and a Γ_k-admissible `v ≤ 0`, and measures
/// each inequality in the comparison argument against `u_beta`.
pub fn barrier_verify(
    problem: &Problem,
    eq: &BetaEquation,
    beta: f64,
    u_kahler: &PeriodicField,
    v: &PeriodicField,
    u_beta: &PeriodicField,
) -> Result<BarrierReport> {
    const SLACK: f64 = 1e-12;
    if !(beta >= 1.0) {
        return Err(Error::InvalidArgument(format!("beta must be ≥ 1, got {beta}")));
    }
    let grid = problem.grid();
    if u_kahler.grid() != grid || v.grid() != grid || u_beta.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let n = problem.dim();
    let kahler = potential_cone(problem, eq.t, u_kahler, n)?;
    if !kahler.admissible() {
        return Err(Error::AdmissibilityFailure {
            what: "u_kahler",
            margin: kahler.margin,
            index: kahler.worst_index,
        });
    }
    let cone = potential_cone(problem, eq.t, v, eq.k)?;
    if cone.margin < -SLACK {
        return Err(Error::AdmissibilityFailure { what: "v", margin: cone.margin, index: cone.worst_index });
    }
    for (what, f) in [("u_kahler", u_kahler), ("v", v)] {
        if f.max() > SLACK {
            return Err(Error::AdmissibilityFailure { what, margin: -f.max(), index: f.argmax() });
        }
    }

    let c_prime = eq.barrier_constant(problem, u_kahler, beta)?;
    let shift = c_prime * beta.ln() / beta;
    let barrier = u_kahler.zip_map(v, |u, w| u / beta + (1.0 - 1.0 / beta) * w - shift)?;

    let r_tilde = eq.ratio(problem, &barrier)?;
    let r_u = eq.ratio(problem, u_kahler)?;
    let fk = beta.powi(-(eq.k as i32));
    let fn_ = beta.powi(-(n as i32));
    let mut concavity_margin = f64::INFINITY;
    let mut concavity_margin_n = f64::INFINITY;
    let mut subsolution_margin = f64::INFINITY;
    for ((rt, ru), ut) in r_tilde.values().iter().zip(r_u.values()).zip(barrier.values()) {
        concavity_margin = concavity_margin.min(rt - fk * ru);
        concavity_margin_n = concavity_margin_n.min(rt - fn_ * ru);
        subsolution_margin = subsolution_margin.min(rt - eq.scale * (beta * ut).exp());
    }
    let comparison_margin =
        u_beta.values().iter().zip(barrier.values()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
    Ok(BarrierReport {
        beta,
        c_prime,
        concavity_margin,
        concavity_margin_n,
        subsolution_margin,
        comparison_margin,
        barrier,
    })
}
