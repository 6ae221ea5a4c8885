//! The four verbs. Independent values of `t` run on a pool of scoped worker
//! threads; results are collected in `t_list` order, so reports do not depend
//! on scheduling.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use neflab_core::envelope::{compute_envelope, monotonicity_violation, EnvelopeResult};
use neflab_core::estimates::{
    alpha0_estimate, default_s_grid, estimate_report, phi_comparison_check, Deficit, EstimateReport,
    FrozenConstants,
};
use neflab_core::hessian::{potential_cone, solve_sigma_k, BetaEquation, Family};
use neflab_core::ma::{solve_auxiliary, solve_ma};
use neflab_core::{PeriodicField, Problem, SolveResult, SolverOptions};

use crate::config::{Artifacts, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::neff;
use crate::report::{
    levels_csv, t_tag, AuxSummary, Calibration, EnvelopeSummary, EstimateSummary, Location, Report, RunError,
    SolveSummary, Suite, SweepSummary, TRun, Timing, Timings,
};

/// Result of a verb: the deterministic report and the wall-clock timings.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub timings: Timings,
}

impl Outcome {
    /// Writes `<verb>.json` and `<verb>_timings.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let verb = &self.report.verb;
        let path = Report::path(dir, verb);
        std::fs::write(&path, self.report.to_json()).map_err(LabError::io(&path))?;
        let path = Timings::path(dir, verb);
        let text = serde_json::to_string_pretty(&self.timings).expect("timings serialize");
        std::fs::write(&path, text).map_err(LabError::io(&path))
    }
}

/// Maps `f` over `items` on up to `available_parallelism` threads,
/// preserving order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64())
}

/// A validated configuration with its problem built.
pub struct Lab {
    pub config: ExperimentConfig,
    pub problem: Problem,
    pub opts: SolverOptions,
}

impl Lab {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let problem = config.build_problem()?;
        let opts = config.solver_options();
        Ok(Self { config, problem, opts })
    }

    pub fn family(&self) -> Family {
        if self.config.is_ma() {
            Family::MongeAmpere
        } else {
            Family::Hessian(self.config.k())
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output_dir
    }

    fn artifact(&self, kind: &str, t: f64) -> PathBuf {
        self.out_dir().join(format!("{kind}_{}.neff", t_tag(t)))
    }

    fn nu(&self) -> usize {
        self.problem.spec().nef.nu()
    }

    fn c_t(&self, t: f64) -> f64 {
        self.problem.cohomology_constant(t, self.config.k()).unwrap_or(f64::NAN)
    }

    /// `φ_t` with `sup φ_t = 0`.
    pub fn solve_phi(&self, t: f64) -> neflab_core::Result<SolveResult> {
        if self.config.is_ma() {
            solve_ma(&self.problem, t, &self.opts)
        } else {
            solve_sigma_k(&self.problem, t, self.config.k(), &self.opts)
        }
    }

    pub fn envelope(&self, t: f64) -> neflab_core::Result<EnvelopeResult> {
        compute_envelope(&self.problem, t, self.family(), &self.config.beta_schedule, &self.opts)
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(self.out_dir()).map_err(LabError::io(self.out_dir()))
    }

    fn report(&self, verb: &str) -> Report {
        Report::new(verb, &self.config, self.nu())
    }
}

fn core_error(report: &mut Report, t: f64, stage: &str, e: impl std::fmt::Display) {
    report.errors.push(RunError { t: Some(t), stage: stage.into(), message: e.to_string() });
}

fn timings(verb: &str, total: f64, per_t: impl IntoIterator<Item = (f64, f64)>) -> Timings {
    Timings {
        verb: verb.into(),
        total_seconds: total,
        per_t: per_t.into_iter().map(|(t, seconds)| Timing { t, seconds }).collect(),
    }
}

/// Solves `φ_t` for every `t` and dumps it as `phi_t<t>.neff`.
pub fn run_solve(config: ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let lab = Lab::new(config)?;
    lab.prepare_out()?;
    let t_list = lab.config.t_list.clone();
    let results = par_map(&t_list, |&t| timed(|| lab.solve_phi(t)));
    let mut report = lab.report("solve");
    let tol = lab.opts.tol;
    for (&t, (res, _)) in t_list.iter().zip(&results) {
        let mut run = TRun::new(t, lab.c_t(t));
        match res {
            Ok(r) => {
                neff::write(&lab.artifact("phi", t), &r.phi)?;
                run.solve = Some(SolveSummary::from(r));
                push_solve_suites(&mut report, &lab, t, r, tol);
            }
            Err(e) => core_error(&mut report, t, "solve", e),
        }
        report.runs.push(run);
    }
    let per_t = t_list.iter().zip(&results).map(|(&t, (_, s))| (t, *s));
    let timings = timings("solve", start.elapsed().as_secs_f64(), per_t);
    Ok(Outcome { report, timings })
}

fn push_solve_suites(report: &mut Report, lab: &Lab, t: f64, r: &SolveResult, tol: f64) {
    report.suites.push(Suite::new(
        "solve_residual",
        Some(t),
        tol - r.residual_sup,
        None,
        format!("sup residual {:e} against tolerance {tol:e}", r.residual_sup),
    ));
    let cone = potential_cone(&lab.problem, t, &r.phi, lab.config.k());
    if let Ok(cone) = cone {
        let slack = lab.config.tolerances.admissibility;
        report.suites.push(Suite::new(
            "solve_admissible",
            Some(t),
            cone.margin + slack,
            Some(Location::point(lab.problem.grid(), cone.worst_index)),
            format!("Γ_{} margin {:e}", cone.k, cone.margin),
        ));
    }
}

fn envelope_summary(lab: &Lab, env: &EnvelopeResult) -> EnvelopeSummary {
    let index = potential_cone(&lab.problem, env.t, &env.v, env.k).map(|c| c.worst_index).unwrap_or(0);
    EnvelopeSummary::new(env, index)
}

fn push_envelope_suites(report: &mut Report, lab: &Lab, t: f64, env: &EnvelopeSummary) {
    let tol = &lab.config.tolerances;
    let worst = |f: fn(&crate::report::StepSummary) -> f64| {
        env.steps.iter().map(|s| (f(s), s.beta)).fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a })
    };
    let (lower, lower_beta) = worst(|s| s.lower_margin);
    report.suites.push(Suite::new(
        "sandwich_lower",
        Some(t),
        lower + tol.sandwich,
        Some(Location::Beta { beta: lower_beta }),
        format!("min_β min_x [V − (u_β − C_t/β)] = {lower:e}"),
    ));
    let (upper, upper_beta) = worst(|s| s.upper_margin);
    report.suites.push(Suite::new(
        "sandwich_upper",
        Some(t),
        upper + tol.sandwich,
        Some(Location::Beta { beta: upper_beta }),
        format!("min_β min_x [u_β + (C' log β + sup(−u_K))/β − (1 − 1/β)V] = {upper:e}"),
    ));
    let rate_margin = if env.gaps_decreasing { tol.fit_residual - env.fit_residual } else { -1.0 };
    report.suites.push(Suite::new(
        "rate_fit",
        Some(t),
        rate_margin,
        None,
        format!(
            "gaps {:?} fit C = {} with relative residual {} (decreasing: {})",
            env.sup_gaps, env.fitted_c, env.fit_residual, env.gaps_decreasing
        ),
    ));
    report.suites.push(Suite::new(
        "envelope_admissible",
        Some(t),
        env.admissibility_margin + tol.admissibility,
        Some(Location::point(lab.problem.grid(), env.admissibility_index)),
        format!("Γ_k margin of the envelope {:e}", env.admissibility_margin),
    ));
}

fn push_monotonicity(report: &mut Report, lab: &Lab, envelopes: &[(f64, &PeriodicField)]) {
    if envelopes.len() < 2 {
        return;
    }
    match monotonicity_violation(envelopes) {
        Ok(m) => {
            let location = m.worst.map(|(t_small, t_large, index)| Location::Pair {
                t_small,
                t_large,
                index,
                coords: lab.problem.grid().coords(index)[..lab.problem.grid().axes()].to_vec(),
            });
            report.suites.push(Suite::new(
                "envelope_monotone",
                None,
                lab.config.tolerances.monotonicity - m.violation,
                location,
                format!("max (V_s − V_t)⁺ over s < t is {:e}", m.violation),
            ));
        }
        Err(e) => report.errors.push(RunError { t: None, stage: "monotonicity".into(), message: e.to_string() }),
    }
}

/// Computes `V_t` for every `t`, dumping `V_t<t>.neff` and `u_beta_t<t>.neff`
/// (the solution at `β_max`).
pub fn run_envelope(config: ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let lab = Lab::new(config)?;
    lab.prepare_out()?;
    let t_list = lab.config.t_list.clone();
    let results = par_map(&t_list, |&t| timed(|| lab.envelope(t)));
    let mut report = lab.report("envelope");
    let mut done = Vec::new();
    for (&t, (res, _)) in t_list.iter().zip(&results) {
        let mut run = TRun::new(t, lab.c_t(t));
        match res {
            Ok(env) => {
                neff::write(&lab.artifact("V", t), &env.v)?;
                neff::write(&lab.artifact("u_beta", t), &env.last.phi)?;
                let summary = envelope_summary(&lab, env);
                push_envelope_suites(&mut report, &lab, t, &summary);
                run.envelope = Some(summary);
                done.push((t, &env.v));
            }
            Err(e) => core_error(&mut report, t, "envelope", e),
        }
        report.runs.push(run);
    }
    push_monotonicity(&mut report, &lab, &done);
    let per_t = t_list.iter().zip(&results).map(|(&t, (_, s))| (t, *s));
    let timings = timings("envelope", start.elapsed().as_secs_f64(), per_t);
    Ok(Outcome { report, timings })
}

/// Fields and summaries for one `t` before the estimates are run.
struct Stage {
    phi: PeriodicField,
    solve: Option<SolveSummary>,
    v: PeriodicField,
    envelope: EnvelopeSummary,
    auxiliary: Vec<AuxSummary>,
    candidates: Vec<PeriodicField>,
    /// `(stage, message)` of a failed auxiliary solve; the rest is kept.
    aux_errors: Vec<(String, String)>,
}

fn stage_inputs(lab: &Lab, t: f64, prior: Option<&Report>) -> Result<(PeriodicField, Option<SolveSummary>, PeriodicField, PeriodicField, EnvelopeSummary)> {
    match lab.config.artifacts {
        Artifacts::Load => {
            let phi = neff::read(&lab.artifact("phi", t))?;
            let v = neff::read(&lab.artifact("V", t))?;
            let u = neff::read(&lab.artifact("u_beta", t))?;
            for f in [&phi, &v, &u] {
                if f.grid() != lab.problem.grid() {
                    return Err(LabError::Config(format!(
                        "artifact for t = {t} has a different grid than the configuration"
                    )));
                }
            }
            let path = Report::path(lab.out_dir(), "envelope");
            let envelope = prior
                .and_then(|r| r.run(t))
                .and_then(|r| r.envelope.clone())
                .ok_or(LabError::MissingArtifacts { path })?;
            Ok((phi, None, v, u, envelope))
        }
        Artifacts::Compute => {
            let solve = lab.solve_phi(t)?;
            let env = lab.envelope(t)?;
            let summary = envelope_summary(lab, &env);
            Ok((solve.phi.clone(), Some(SolveSummary::from(&solve)), env.v, env.last.phi, summary))
        }
    }
}

fn run_stage(lab: &Lab, t: f64, prior: Option<&Report>) -> Result<Stage> {
    let (phi, solve, v, u_max, envelope) = stage_inputs(lab, t, prior)?;
    let mut stage =
        Stage { phi, solve, v, envelope, auxiliary: Vec::new(), candidates: Vec::new(), aux_errors: Vec::new() };
    let aux = &lab.config.auxiliary;
    if !(aux.enabled && lab.config.is_ma()) {
        return Ok(stage);
    }
    let beta = lab.config.aux_beta();
    let u_beta = if beta == lab.config.beta_max() {
        u_max
    } else {
        let eq = BetaEquation::new(&lab.problem, t, Family::MongeAmpere)?;
        match eq.solve(&lab.problem, beta, Some(&u_max), &lab.opts) {
            Ok(r) => r.phi,
            Err(e) => {
                stage.aux_errors.push(("auxiliary_beta".into(), e.to_string()));
                return Ok(stage);
            }
        }
    };
    let n = lab.problem.dim();
    let vol = lab.problem.volume();
    for &s in &aux.s_values {
        let res = solve_auxiliary(&lab.problem, t, s, aux.k_smooth, &stage.phi, &u_beta, &lab.opts).and_then(|r| {
            let check = phi_comparison_check(&stage.phi, &u_beta, &r.solve.phi, &stage.v, s, r.a_skb / vol, n)?;
            Ok((r, check))
        });
        match res {
            Ok((r, check)) => {
                stage.auxiliary.push(AuxSummary::new(s, beta, aux.k_smooth, r.a_skb, &r.solve, &check));
                stage.candidates.push(r.solve.phi);
            }
            Err(e) => stage.aux_errors.push((format!("auxiliary s={s}"), e.to_string())),
        }
    }
    Ok(stage)
}

fn estimates_for(lab: &Lab, stage: &Stage, alpha0: f64, c: f64) -> Result<EstimateReport> {
    let est = &lab.config.estimates;
    let frozen = FrozenConstants { p: lab.problem.spec().p, alpha0, c_key: c, weight_exponent: est.weight_exponent };
    let torus = lab.problem.torus();
    let f_hat = lab.problem.f_hat();
    let deficit = Deficit::new(torus, &stage.phi, &stage.v, f_hat, est.weight_exponent)?;
    let s_grid = default_s_grid(deficit.sup().max(0.0), lab.config.s_grid.points, lab.config.s_grid.factor);
    Ok(estimate_report(torus, &stage.phi, &stage.v, f_hat, &s_grid, &frozen)?)
}

fn push_estimate_suites(report: &mut Report, lab: &Lab, t: f64, stage: &Stage, est: &EstimateReport) {
    let tol = &lab.config.tolerances;
    if !stage.auxiliary.is_empty() {
        let worst = stage.auxiliary.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).expect("nonempty");
        report.suites.push(Suite::new(
            "phi_comparison",
            Some(t),
            worst.margin + tol.phi,
            Some(Location::point(lab.problem.grid(), worst.argmax)),
            format!("sup Φ = {:e} against ε_β = {:e} at s = {}", worst.sup_phi, worst.eps_beta, worst.s),
        ));
    }
    report.suites.push(Suite::new(
        "young",
        Some(t),
        if est.young.violations == 0 { 0.0 } else { -(est.young.violations as f64) },
        None,
        format!("{} violations, max excess {:e}", est.young.violations, est.young.max_violation),
    ));
    let bound = est.fitted_c_key * (est.fitted_c_key * est.e_t).exp();
    let (worst_i, worst_lhs) = est
        .trudinger_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    report.suites.push(Suite::new(
        "trudinger",
        Some(t),
        bound - worst_lhs,
        est.stats.s_values.get(worst_i).map(|&s| Location::Level { s }),
        format!("max LHS {worst_lhs:e} against C e^{{C E}} = {bound:e} (C = {}, E = {:e})", est.fitted_c_key, est.e_t),
    ));
    report.suites.push(Suite::new(
        "holder_b0",
        Some(t),
        est.holder.b0_margin,
        Some(Location::Level { s: est.holder.worst_s }),
        format!("A_s ≤ B₀ tail^{{1+δ₀}} with B₀ = {:e}, δ₀ = {}", est.b0, est.delta0),
    ));
    report.suites.push(Suite::new(
        "degiorgi_relation",
        Some(t),
        est.degiorgi_margin,
        None,
        "r·tail(s + r) ≤ B₀ tail(s)^{1+δ₀}".into(),
    ));
    let (margin, detail) = match est.s_infinity {
        Some(s_inf) => (s_inf - est.sup_deficit, format!("sup d = {:e} against S∞ = {s_inf:e}", est.sup_deficit)),
        None => (-1.0, "no level with 2B₀ tail^δ₀ ≤ 1 on the s grid".into()),
    };
    report.suites.push(Suite::new("uniform_bound", Some(t), margin, None, detail));
}

/// Runs the whole chain: solves (or loads) `φ_t`, `V_t` and `u_β`, solves the
/// auxiliary equations, calibrates `α₀` and the Trudinger constant unless
/// frozen in the configuration, and checks every inequality.
pub fn run_verify(config: ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let lab = Lab::new(config)?;
    lab.prepare_out()?;
    let prior = match lab.config.artifacts {
        Artifacts::Load => Some(Report::load(&Report::path(lab.out_dir(), "envelope"))?),
        Artifacts::Compute => None,
    };
    let t_list = lab.config.t_list.clone();
    let results = par_map(&t_list, |&t| timed(|| run_stage(&lab, t, prior.as_ref())));
    let mut report = lab.report("verify");

    let mut stages: Vec<(f64, Stage)> = Vec::new();
    let mut per_t = Vec::with_capacity(t_list.len());
    for (&t, (res, seconds)) in t_list.iter().zip(results) {
        per_t.push((t, seconds));
        match res {
            Ok(stage) => {
                for (what, msg) in &stage.aux_errors {
                    core_error(&mut report, t, what, msg);
                }
                stages.push((t, stage));
            }
            Err(e @ (LabError::MissingArtifacts { .. } | LabError::Format { .. } | LabError::Io { .. })) => {
                return Err(e)
            }
            Err(e) => core_error(&mut report, t, "stage", e),
        }
    }

    let est_cfg = &lab.config.estimates;
    let alpha0 = match est_cfg.alpha0 {
        Some(a) => a,
        None => {
            let mut candidates: Vec<PeriodicField> = stages.iter().flat_map(|(_, s)| s.candidates.clone()).collect();
            if candidates.is_empty() {
                candidates = stages.iter().map(|(_, s)| s.phi.shifted(-s.phi.max())).collect();
            }
            if candidates.is_empty() {
                est_cfg.alpha0_cap
            } else {
                alpha0_estimate(lab.problem.torus(), &candidates, est_cfg.alpha0_cap)?
            }
        }
    };
    let provisional = est_cfg.trudinger_c.unwrap_or(1.0);
    let first: Vec<Result<EstimateReport>> = par_map(&stages, |(_, s)| estimates_for(&lab, s, alpha0, provisional));
    let c = match est_cfg.trudinger_c {
        Some(c) => c,
        None => first.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.best_c).fold(0.0, f64::max).max(f64::MIN_POSITIVE),
    };
    let estimates: Vec<Result<EstimateReport>> = if est_cfg.trudinger_c.is_some() {
        first
    } else {
        par_map(&stages, |(_, s)| estimates_for(&lab, s, alpha0, c))
    };
    report.calibration = Some(Calibration {
        alpha0,
        alpha0_frozen: est_cfg.alpha0.is_some(),
        trudinger_c: c,
        trudinger_c_frozen: est_cfg.trudinger_c.is_some(),
    });

    let mut done_v = Vec::new();
    let mut stage_iter = stages.iter().zip(estimates).peekable();
    for &t in &t_list {
        let mut run = TRun::new(t, lab.c_t(t));
        if let Some(((_, stage), est)) = stage_iter.next_if(|((st, _), _)| *st == t) {
            run.solve = stage.solve.clone();
            run.auxiliary = stage.auxiliary.clone();
            if let Some(solve) = &stage.solve {
                let tol = lab.opts.tol;
                report.suites.push(Suite::new(
                    "solve_residual",
                    Some(t),
                    tol - solve.residual_sup,
                    None,
                    format!("sup residual {:e} against tolerance {tol:e}", solve.residual_sup),
                ));
            }
            push_envelope_suites(&mut report, &lab, t, &stage.envelope);
            run.envelope = Some(stage.envelope.clone());
            done_v.push((t, &stage.v));
            match est {
                Ok(est) => {
                    let name = format!("levels_{}.csv", t_tag(t));
                    let path = lab.out_dir().join(&name);
                    std::fs::write(&path, levels_csv(&est.stats, &est.trudinger_values))
                        .map_err(LabError::io(&path))?;
                    push_estimate_suites(&mut report, &lab, t, stage, &est);
                    run.estimates = Some(EstimateSummary::new(&est, name));
                }
                Err(e) => core_error(&mut report, t, "estimates", e),
            }
        }
        report.runs.push(run);
    }
    push_monotonicity(&mut report, &lab, &done_v);
    let timings = timings("verify", start.elapsed().as_secs_f64(), per_t);
    Ok(Outcome { report, timings })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// Decades below the smallest swept `t` at which `c_t` is fitted. The
/// exponent is asymptotic and `c_t` needs no solve, so the fit goes well past
/// the swept range, where `χ₀`-dominated terms have not yet taken over.
const EXPONENT_FIT_DECADES: i32 = 3;

/// Tracks `c_t`, `sup(−φ_t)` and `sup(V_t − φ_t)` as `t → 0` and fits the
/// exponent of `c_t`.
pub fn run_sweep(config: ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let lab = Lab::new(config)?;
    lab.prepare_out()?;
    let t_list = lab.config.t_list.clone();
    let weight = lab.config.estimates.weight_exponent;
    let results = par_map(&t_list, |&t| {
        timed(|| -> neflab_core::Result<(SolveResult, EnvelopeResult, f64)> {
            let solve = lab.solve_phi(t)?;
            let env = lab.envelope(t)?;
            let d = Deficit::new(lab.problem.torus(), &solve.phi, &env.v, lab.problem.f_hat(), weight)?;
            Ok((solve, env, d.sup()))
        })
    });
    let mut report = lab.report("sweep");
    let (mut ts, mut sup_d, mut sup_neg_phi) = (Vec::new(), Vec::new(), Vec::new());
    for (&t, (res, _)) in t_list.iter().zip(&results) {
        let mut run = TRun::new(t, lab.c_t(t));
        match res {
            Ok((solve, env, d)) => {
                run.solve = Some(SolveSummary::from(solve));
                run.envelope = Some(envelope_summary(&lab, env));
                ts.push(t);
                sup_d.push(*d);
                sup_neg_phi.push(-solve.phi.min());
            }
            Err(e) => core_error(&mut report, t, "sweep", e),
        }
        report.runs.push(run);
    }

    let k = lab.config.k();
    let nu = lab.nu();
    let expected = k.saturating_sub(nu) as f64;
    let t_min = t_list.iter().copied().fold(f64::INFINITY, f64::min);
    let fit_t: Vec<f64> = (1..=EXPONENT_FIT_DECADES).map(|j| t_min * 10f64.powi(-j)).collect();
    let c: Vec<f64> = fit_t.iter().map(|&t| lab.c_t(t)).collect();
    let fitted = c.iter().all(|v| *v > 0.0).then(|| log_log_slope(&fit_t, &c));
    if let Some(f) = fitted {
        report.suites.push(Suite::new(
            "numerical_dimension",
            None,
            lab.config.tolerances.exponent - (f - expected).abs(),
            None,
            format!("c_t ~ t^{f} against k − min(k, ν) = {expected} (ν = {nu})"),
        ));
    }
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    // Identically vanishing deficits count as perfectly uniform.
    let deficit_spread = match (max(&sup_d), min(&sup_d)) {
        (hi, _) if hi <= 0.0 => 1.0,
        (hi, lo) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    };
    let neg_phi_growth = match (sup_neg_phi.first(), sup_neg_phi.last()) {
        (Some(a), Some(b)) => b / a,
        _ => f64::NAN,
    };
    if sup_d.len() >= 2 {
        report.suites.push(Suite::new(
            "uniform_deficit",
            None,
            lab.config.tolerances.deficit_spread - deficit_spread,
            None,
            format!("sup(V_t − φ_t) = {sup_d:?}"),
        ));
    }
    report.sweep = Some(SweepSummary {
        k,
        nu,
        expected_exponent: expected,
        fitted_exponent: fitted,
        fit_t,
        sup_deficit: sup_d,
        sup_neg_phi,
        deficit_spread,
        neg_phi_growth,
    });
    let per_t = t_list.iter().zip(&results).map(|(&t, (_, s))| (t, *s));
    let timings = timings("sweep", start.elapsed().as_secs_f64(), per_t);
    Ok(Outcome { report, timings })
}

/// Which verb to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Solve,
    Envelope,
    Verify,
    Sweep,
}

impl Verb {
    pub fn run(self, config: ExperimentConfig) -> Result<Outcome> {
        match self {
            Self::Solve => run_solve(config),
            Self::Envelope => run_envelope(config),
            Self::Verify => run_verify(config),
            Self::Sweep => run_sweep(config),
        }
    }
}
