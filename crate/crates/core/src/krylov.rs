//! Right-preconditioned BiCGSTAB.

use alloc::vec;

use num_traits::Float;

use crate::geometry::pairwise_sum_by;

pub(crate) trait LinearSystem {
    fn apply(&mut self, x: &[f64], y: &mut [f64]);
    fn precondition(&mut self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KrylovOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum_by(a.len(), &|i| a[i] * b[i])
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` starting from `x = 0`. Returns the best iterate reached
/// within `max_iter`; the caller decides whether the achieved residual is
/// good enough.
pub(crate) fn bicgstab(
    system: &mut impl LinearSystem,
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let len = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return KrylovOutcome { iterations: 0, relative_residual: 0.0 };
    }
    let target = rtol * b_norm;
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut p = vec![0.0; len];
    let mut v = vec![0.0; len];
    let mut y = vec![0.0; len];
    let mut s = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut t = vec![0.0; len];
    let (mut rho_old, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut r_norm = b_norm;

    for it in 1..=max_iter {
        let mut rho = dot(&r_hat, &r);
        if rho.abs() < 1e-30 * r_norm * r_norm {
            // Shadow residual became orthogonal: restart from the current residual.
            r_hat.copy_from_slice(&r);
            rho = dot(&r_hat, &r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho_old = 1.0;
            alpha = 1.0;
            omega = 1.0;
        }
        let beta = (rho / rho_old) * (alpha / omega);
        for i in 0..len {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        system.precondition(&p, &mut y);
        system.apply(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            return KrylovOutcome { iterations: it, relative_residual: r_norm / b_norm };
        }
        alpha = rho / denom;
        for i in 0..len {
            s[i] = r[i] - alpha * v[i];
            x[i] += alpha * y[i];
        }
        let s_norm = norm(&s);
        if s_norm <= target {
            return KrylovOutcome { iterations: it, relative_residual: s_norm / b_norm };
        }
        system.precondition(&s, &mut z);
        system.apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..len {
            x[i] += omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        r_norm = norm(&r);
        if r_norm <= target || omega == 0.0 {
            return KrylovOutcome { iterations: it, relative_residual: r_norm / b_norm };
        }
        rho_old = rho;
    }
    KrylovOutcome { iterations: max_iter, relative_residual: r_norm / b_norm }
}
