//! Damped Newton iteration for pointwise Hessian equations
//! `Op(ĝ + i∂∂̄u) = rhs(u)` with a cone safeguard.
//!
//! Each step linearizes `Op` to the second-order operator `δ ↦ tr(T·i∂∂̄δ)`
//! (for the determinant this is `det·Δ_u`), subtracts the derivative of the
//! right side, and solves the linear system with BiCGSTAB preconditioned by the
//! inverse of the averaged constant-coefficient operator, which is diagonal in
//! Fourier space. The step is halved until the iterate stays in the open cone
//! and the residual decreases.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{pairwise_sum, HermitianField, PeriodicField, Torus, Workspace};
use crate::herm::{self, binomial, HermMat};
use crate::krylov::{bicgstab, LinearSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the sup-norm of the (non-logarithmic) residual is below this.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_linear_iterations: usize,
    pub max_backtracks: usize,
    /// Iterates whose cone margin is above `−(cone_floor·(1 + |ĝ|) + tol)`
    /// count as admissible. Nearly degenerate solutions (large β) have forms
    /// below the rounding level of the Hessian on part of the grid.
    pub cone_floor: f64,
}

impl SolverOptions {
    /// Residual tolerance 1e-9 for `n = 1` and 1e-7 for `n = 2`.
    pub fn for_dim(n: usize) -> Self {
        Self {
            tol: if n == 1 { 1e-9 } else { 1e-7 },
            max_iterations: 60,
            max_linear_iterations: 400,
            max_backtracks: 30,
            cone_floor: 1e-12,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub phi: PeriodicField,
    /// Sup-norm of `LHS − RHS` at the returned potential.
    pub residual_sup: f64,
    pub iterations: usize,
    /// Min over the grid of the smallest eigenvalue of `g⁻¹(ĝ + i∂∂̄φ)`.
    pub positivity_margin: f64,
    /// Min over the grid of `min_{j≤k} σ_j/C(n,j)` for the equation's `k`.
    pub cone_margin: f64,
    pub beta: Option<f64>,
    /// Sup-norm residual before the first step and after each step.
    pub residual_history: Vec<f64>,
    /// `∫ (LHS − RHS) ωⁿ`.
    pub mass_defect: f64,
    /// Krylov iterations summed over all Newton steps.
    pub linear_iterations: usize,
    /// Largest relative residual accepted from an inner linear solve.
    pub worst_linear_residual: f64,
}

impl SolveResult {
    /// Ratio of successive residuals over the last three iterates; `None`
    /// when fewer than three residuals were recorded.
    pub fn tail_contraction(&self) -> Option<f64> {
        let h = &self.residual_history;
        if h.len() < 3 {
            return None;
        }
        let tail = &h[h.len() - 3..];
        Some((tail[1] / tail[0]).max(tail[2] / tail[1]))
    }
}

/// Pointwise fully nonlinear operator evaluated on the matrix of the form.
pub(crate) trait PointOperator {
    fn dim(&self) -> usize;
    /// Degree of the operator (`n` for the determinant).
    fn degree(&self) -> usize;
    fn value(&self, a: &HermMat) -> f64;
    /// `T` such that the derivative in direction `X` is `tr(T X)`.
    fn derivative(&self, a: &HermMat) -> HermMat;
    /// Positive inside the admissible cone; homogeneous of degree one.
    fn margin(&self, a: &HermMat) -> f64;
    fn cone_error(&self, iteration: usize, residual: f64) -> Error;
}

/// `det(g⁻¹a)`, linearized through the adjugate.
pub(crate) struct DetOperator {
    pub g: HermMat,
    pub n: usize,
}

impl PointOperator for DetOperator {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.n
    }
    fn value(&self, a: &HermMat) -> f64 {
        herm::det_ratio_at(a, &self.g, self.n)
    }
    fn derivative(&self, a: &HermMat) -> HermMat {
        a.adjugate(self.n).scale(1.0 / self.g.det(self.n))
    }
    fn margin(&self, a: &HermMat) -> f64 {
        herm::min_eigenvalue_at(a, &self.g, self.n)
    }
    fn cone_error(&self, iteration: usize, residual: f64) -> Error {
        Error::PositivityLoss { iteration, residual }
    }
}

/// `σ_k(λ)/C(n,k)` computed from eigenvalues and linearized with Newton's
/// identities: `dσ_k = Σ_j (−1)^j σ_{k−1−j} (g⁻¹A)^j g⁻¹`.
pub(crate) struct SigmaOperator {
    pub g: HermMat,
    pub g_inv: HermMat,
    pub n: usize,
    pub k: usize,
}

impl SigmaOperator {
    pub(crate) fn new(g: HermMat, n: usize, k: usize) -> Self {
        let g_inv = g.inverse(n).expect("metric validated positive definite");
        Self { g, g_inv, n, k }
    }
}

impl PointOperator for SigmaOperator {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.k
    }
    fn value(&self, a: &HermMat) -> f64 {
        herm::sigma_ratio_at(a, &self.g, self.n, self.k)
    }
    fn derivative(&self, a: &HermMat) -> HermMat {
        let lambda = herm::relative_eigenvalues(a, &self.g, self.n);
        let lambda = &lambda[..self.n];
        let mut total = HermMat::ZERO;
        // term_j = (g⁻¹A)^j g⁻¹
        let mut term = self.g_inv;
        for j in 0..self.k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            total = total + term.scale(sign * herm::elementary_symmetric(lambda, self.k - 1 - j));
            term = HermMat::product3(&self.g_inv, a, &term, self.n);
        }
        total.scale(1.0 / binomial(self.n, self.k))
    }
    fn margin(&self, a: &HermMat) -> f64 {
        herm::cone_margin_linear_at(a, &self.g, self.n, self.k)
    }
    fn cone_error(&self, iteration: usize, residual: f64) -> Error {
        Error::ConeLoss { k: self.k, iteration, residual }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum RightSide<'a> {
    /// A fixed density; the equation then only determines `u` up to
    /// constants.
    Density(&'a [f64]),
    /// `scale · e^{βu}`.
    Exponential { scale: f64, beta: f64 },
}

impl RightSide<'_> {
    #[inline]
    fn value(&self, i: usize, u: f64) -> f64 {
        match *self {
            RightSide::Density(d) => d[i],
            RightSide::Exponential { scale, beta } => scale * (beta * u).exp(),
        }
    }

    #[inline]
    fn derivative(&self, u: f64) -> f64 {
        match *self {
            RightSide::Density(_) => 0.0,
            RightSide::Exponential { scale, beta } => scale * beta * (beta * u).exp(),
        }
    }

    fn beta(&self) -> Option<f64> {
        match *self {
            RightSide::Density(_) => None,
            RightSide::Exponential { beta, .. } => Some(beta),
        }
    }
}

struct Evaluation {
    forms: Vec<HermMat>,
    residual: Vec<f64>,
    sup: f64,
    l2: f64,
    margin: f64,
    finite: bool,
}

fn evaluate<O: PointOperator>(
    torus: &Torus,
    op: &O,
    base: &[HermMat],
    rhs: &RightSide<'_>,
    u: &[f64],
    ws: &mut Workspace,
    forms: &mut Vec<HermMat>,
) -> Evaluation {
    forms.resize(u.len(), HermMat::ZERO);
    torus.hessian_into(u, forms, ws);
    let mut residual = vec![0.0; u.len()];
    let mut margin = f64::INFINITY;
    let mut finite = true;
    for i in 0..u.len() {
        let a = base[i] + forms[i];
        forms[i] = a;
        margin = margin.min(op.margin(&a));
        let r = op.value(&a) - rhs.value(i, u[i]);
        finite &= r.is_finite();
        residual[i] = r;
    }
    let sup = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let sq: Vec<f64> = residual.iter().map(|r| r * r).collect();
    let l2 = (pairwise_sum(&sq) / u.len() as f64).sqrt();
    Evaluation { forms: core::mem::take(forms), residual, sup, l2, margin, finite }
}

struct Linearized<'a> {
    torus: &'a Torus,
    coeff: Vec<HermMat>,
    zeroth: Vec<f64>,
    mean_coeff: HermMat,
    mean_zeroth: f64,
    n: usize,
    ws: Workspace,
    hess: Vec<HermMat>,
}

impl LinearSystem for Linearized<'_> {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.torus.hessian_into(x, &mut self.hess, &mut self.ws);
        for i in 0..x.len() {
            y[i] = self.coeff[i].trace_product(&self.hess[i], self.n) - self.zeroth[i] * x[i];
        }
    }

    fn precondition(&mut self, x: &[f64], y: &mut [f64]) {
        let torus = self.torus;
        let (t, c, n) = (self.mean_coeff, self.mean_zeroth, self.n);
        torus.fourier_multiply(x, y, &mut self.ws, |i| {
            let s = t.trace_product(&torus.symbol(i), n) - c;
            if s.abs() < 1e-12 {
                0.0
            } else {
                1.0 / s
            }
        });
    }
}

fn mean_of(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

fn mean_matrix(ms: &[HermMat]) -> HermMat {
    let a11: Vec<f64> = ms.iter().map(|m| m.a11).collect();
    let a22: Vec<f64> = ms.iter().map(|m| m.a22).collect();
    let re: Vec<f64> = ms.iter().map(|m| m.a12.re).collect();
    let im: Vec<f64> = ms.iter().map(|m| m.a12.im).collect();
    HermMat::new(mean_of(&a11), mean_of(&a22), num_complex::Complex64::new(mean_of(&re), mean_of(&im)))
}

/// Runs Newton from `init` (which must be admissible) on the background
/// form field `base`.
pub(crate) fn newton_solve<O: PointOperator>(
    torus: &Torus,
    op: &O,
    base: &HermitianField,
    rhs: RightSide<'_>,
    init: &PeriodicField,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let n = op.dim();
    let len = init.values().len();
    let base = base.matrices();
    let mut ws = Workspace::new(torus.grid());
    let mut scratch = vec![HermMat::ZERO; len];
    let mut u = init.values().to_vec();
    let mut state = evaluate(torus, op, base, &rhs, &u, &mut ws, &mut scratch);
    let scale = 1.0 + base.iter().map(|b| herm::relative_invariants(b, torus.metric(), n).0.abs() / n as f64).fold(0.0, f64::max);
    // A residual of size tol allows σ_k to undershoot a vanishing right side
    // by as much, which is tol^{1/k} on the degree-one scale of the margin.
    let floor = -(opts.cone_floor * scale + opts.tol.powf(1.0 / op.degree() as f64));
    // Operators linear in the form (n = 1, or k = 1) are elliptic for every
    // iterate, so the cone is only enforced from degree two on.
    let guarded = op.degree() >= 2;
    let admissible = |margin: f64| !guarded || margin > floor;
    if !admissible(state.margin) || !state.finite {
        return Err(op.cone_error(0, state.sup));
    }
    let singular = matches!(rhs, RightSide::Density(_));
    let mut history = vec![state.sup];
    let mut delta = vec![0.0; len];
    let mut iterations = 0;
    let mut linear_iterations = 0;
    let mut worst_linear_residual: f64 = 0.0;

    while state.sup > opts.tol {
        if iterations == opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual: state.sup,
                suggest_smaller_beta_step: !singular,
            });
        }
        iterations += 1;

        let coeff: Vec<HermMat> = state.forms.iter().map(|a| op.derivative(a)).collect();
        let zeroth: Vec<f64> = u.iter().map(|&v| rhs.derivative(v)).collect();
        let mut b: Vec<f64> = state.residual.iter().map(|r| -r).collect();
        if singular {
            // The constant mode is not in the range of the linearization.
            let m = mean_of(&b);
            b.iter_mut().for_each(|v| *v -= m);
        }
        let mut system = Linearized {
            torus,
            mean_coeff: mean_matrix(&coeff),
            mean_zeroth: mean_of(&zeroth),
            coeff,
            zeroth,
            n,
            ws: Workspace::new(torus.grid()),
            hess: vec![HermMat::ZERO; len],
        };
        let forcing = state.sup.min(1e-2).max(1e-13);
        let lin = bicgstab(&mut system, &b, &mut delta, forcing, opts.max_linear_iterations);
        linear_iterations += lin.iterations;
        worst_linear_residual = worst_linear_residual.max(lin.relative_residual);
        if singular {
            let m = mean_of(&delta);
            delta.iter_mut().for_each(|v| *v -= m);
        }
        drop(system);

        let mut theta = 1.0;
        let mut accepted = None;
        let mut saw_admissible = false;
        let mut forms_buf = core::mem::take(&mut scratch);
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + theta * d).collect();
            let cand = evaluate(torus, op, base, &rhs, &trial, &mut ws, &mut forms_buf);
            if admissible(cand.margin) && cand.finite {
                saw_admissible = true;
                if cand.l2 <= (1.0 - 1e-4 * theta) * state.l2 || cand.sup <= opts.tol {
                    accepted = Some((trial, cand));
                    break;
                }
            }
            forms_buf = cand.forms;
            theta *= 0.5;
        }
        match accepted {
            Some((trial, cand)) => {
                u = trial;
                scratch = core::mem::replace(&mut state, cand).forms;
                history.push(state.sup);
            }
            None if saw_admissible => {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: state.sup,
                    suggest_smaller_beta_step: !singular,
                })
            }
            None => return Err(op.cone_error(iterations, state.sup)),
        }
    }

    let g = torus.metric();
    let positivity_margin =
        state.forms.iter().map(|a| herm::min_eigenvalue_at(a, g, n)).fold(f64::INFINITY, f64::min);
    let cone_margin =
        state.forms.iter().map(|a| herm::cone_margin_at(a, g, n, op.degree())).fold(f64::INFINITY, f64::min);
    let mass_defect = torus.integrate_values(&state.residual);
    Ok(SolveResult {
        phi: PeriodicField::new(torus.grid(), u)?,
        residual_sup: state.sup,
        iterations,
        positivity_margin,
        cone_margin,
        beta: rhs.beta(),
        residual_history: history,
        mass_defect,
        linear_iterations,
        worst_linear_residual,
    })
}

/// Shifts a solve result so that `sup φ = 0`; the equations solved with a
/// density right side are invariant under constants.
pub(crate) fn normalize_sup(mut result: SolveResult) -> SolveResult {
    let m = result.phi.max();
    result.phi = result.phi.shifted(-m);
    result
}
