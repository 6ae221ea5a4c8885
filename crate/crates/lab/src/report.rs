//! Run reports. `report.json`-style files hold only deterministic content;
//! wall-clock timings go to a separate file so identical runs produce
//! byte-identical reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use neflab_core::envelope::{BetaStep, EnvelopeResult};
use neflab_core::estimates::{EstimateReport, LevelStats, PhiReport};
use neflab_core::{Grid, SolveResult};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

pub const SCHEMA: &str = "nef-lab-report/1";

/// Serde adapter for reals that may be infinite or NaN (vacuous margins,
/// empty minima): finite values stay JSON numbers, the others become the
/// strings `"inf"`, `"-inf"` and `"nan"`.
pub mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a real: {other:?}"))),
            },
        }
    }
}

/// Where a check attains its margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    GridPoint { index: usize, coords: Vec<f64> },
    Level { s: f64 },
    Beta { beta: f64 },
    Pair { t_small: f64, t_large: f64, index: usize, coords: Vec<f64> },
}

impl Location {
    pub fn point(grid: Grid, index: usize) -> Self {
        Self::GridPoint { index, coords: grid.coords(index)[..grid.axes()].to_vec() }
    }
}

/// One named check. `margin ≥ 0` exactly when the check passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub t: Option<f64>,
    pub passed: bool,
    #[serde(with = "real")]
    pub margin: f64,
    pub location: Option<Location>,
    pub detail: String,
}

impl Suite {
    pub fn new(name: &str, t: Option<f64>, margin: f64, location: Option<Location>, detail: String) -> Self {
        Self { name: name.into(), t, passed: margin >= 0.0, margin, location, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub t: Option<f64>,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub linear_iterations: usize,
    pub residual_sup: f64,
    #[serde(with = "real")]
    pub positivity_margin: f64,
    #[serde(with = "real")]
    pub cone_margin: f64,
    pub mass_defect: f64,
    pub sup_neg_phi: f64,
    pub residual_history: Vec<f64>,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        Self {
            iterations: r.iterations,
            linear_iterations: r.linear_iterations,
            residual_sup: r.residual_sup,
            positivity_margin: r.positivity_margin,
            cone_margin: r.cone_margin,
            mass_defect: r.mass_defect,
            sup_neg_phi: -r.phi.min(),
            residual_history: r.residual_history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub beta: f64,
    pub iterations: usize,
    pub linear_iterations: usize,
    pub residual_sup: f64,
    #[serde(with = "real")]
    pub positivity_margin: f64,
    pub sup_u: f64,
    #[serde(with = "real")]
    pub lower_margin: f64,
    #[serde(with = "real")]
    pub upper_margin: f64,
    #[serde(with = "real")]
    pub upper_margin_bare: f64,
}

impl From<&BetaStep> for StepSummary {
    fn from(s: &BetaStep) -> Self {
        Self {
            beta: s.beta,
            iterations: s.iterations,
            linear_iterations: s.linear_iterations,
            residual_sup: s.residual_sup,
            positivity_margin: s.positivity_margin,
            sup_u: s.sup_u,
            lower_margin: s.lower_margin,
            upper_margin: s.upper_margin,
            upper_margin_bare: s.upper_margin_bare,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub beta_schedule: Vec<f64>,
    pub sup_gaps: Vec<f64>,
    pub gaps_decreasing: bool,
    #[serde(with = "real")]
    pub fitted_c: f64,
    #[serde(with = "real")]
    pub fit_residual: f64,
    #[serde(with = "real")]
    pub c_t: f64,
    pub c_prime: f64,
    #[serde(with = "real")]
    pub admissibility_margin: f64,
    pub admissibility_index: usize,
    #[serde(with = "real")]
    pub error_bar: f64,
    pub steps: Vec<StepSummary>,
}

impl EnvelopeSummary {
    pub fn new(env: &EnvelopeResult, admissibility_index: usize) -> Self {
        Self {
            beta_schedule: env.beta_schedule.clone(),
            sup_gaps: env.sup_gaps.clone(),
            gaps_decreasing: env.gaps_decreasing(),
            fitted_c: env.fitted_c,
            fit_residual: env.fit_residual,
            c_t: env.c_t,
            c_prime: env.c_prime,
            admissibility_margin: env.admissibility_margin,
            admissibility_index,
            error_bar: env.error_bar,
            steps: env.steps.iter().map(StepSummary::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxSummary {
    pub s: f64,
    pub beta: f64,
    pub k_smooth: u32,
    pub a_skb: f64,
    pub iterations: usize,
    pub residual_sup: f64,
    #[serde(with = "real")]
    pub sup_phi: f64,
    pub eps_beta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    #[serde(with = "real")]
    pub margin: f64,
    pub argmax: usize,
}

impl AuxSummary {
    pub fn new(s: f64, beta: f64, k_smooth: u32, a_skb: f64, solve: &SolveResult, phi: &PhiReport) -> Self {
        Self {
            s,
            beta,
            k_smooth,
            a_skb,
            iterations: solve.iterations,
            residual_sup: solve.residual_sup,
            sup_phi: phi.sup_phi,
            eps_beta: phi.eps_beta,
            epsilon: phi.constants.epsilon,
            lambda: phi.constants.lambda,
            margin: phi.margin,
            argmax: phi.argmax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungSummary {
    pub c_p: f64,
    #[serde(with = "real")]
    pub max_violation: f64,
    pub violations: usize,
    #[serde(with = "real")]
    pub exact_step_max_violation: f64,
    pub exact_step_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub e_t: f64,
    pub orlicz_p: f64,
    pub alpha0: f64,
    pub trudinger_c: f64,
    #[serde(with = "real")]
    pub best_c: f64,
    pub trudinger_ok: bool,
    pub b0: f64,
    pub delta0: f64,
    pub q: f64,
    pub s0: Option<f64>,
    pub s_infinity: Option<f64>,
    #[serde(with = "real")]
    pub sup_deficit: f64,
    #[serde(with = "real")]
    pub min_deficit: f64,
    #[serde(with = "real")]
    pub moment_margin: f64,
    #[serde(with = "real")]
    pub moment_margin_calibrated: f64,
    #[serde(with = "real")]
    pub holder_margin: f64,
    #[serde(with = "real")]
    pub b0_margin: f64,
    pub worst_s: f64,
    #[serde(with = "real")]
    pub degiorgi_margin: f64,
    pub young: YoungSummary,
    pub s_values: Vec<f64>,
    pub a_s: Vec<f64>,
    pub tail: Vec<f64>,
    pub omega_measure: Vec<f64>,
    pub trudinger_lhs: Vec<f64>,
    /// File name of the level table, relative to the output directory.
    pub levels_csv: String,
}

impl EstimateSummary {
    pub fn new(r: &EstimateReport, levels_csv: String) -> Self {
        Self {
            e_t: r.e_t,
            orlicz_p: r.orlicz_p,
            alpha0: r.alpha0,
            trudinger_c: r.fitted_c_key,
            best_c: r.best_c,
            trudinger_ok: r.trudinger_ok,
            b0: r.b0,
            delta0: r.delta0,
            q: r.q,
            s0: r.s0,
            s_infinity: r.s_infinity,
            sup_deficit: r.sup_deficit,
            min_deficit: r.min_deficit,
            moment_margin: r.holder.moment_margin,
            moment_margin_calibrated: r.holder.moment_margin_calibrated,
            holder_margin: r.holder.holder_margin,
            b0_margin: r.holder.b0_margin,
            worst_s: r.holder.worst_s,
            degiorgi_margin: r.degiorgi_margin,
            young: YoungSummary {
                c_p: r.young.c_p,
                max_violation: r.young.max_violation,
                violations: r.young.violations,
                exact_step_max_violation: r.young.exact_step_max_violation,
                exact_step_samples: r.young.exact_step_samples,
            },
            s_values: r.stats.s_values.clone(),
            a_s: r.stats.a_s.clone(),
            tail: r.stats.tail.clone(),
            omega_measure: r.stats.omega_measure.clone(),
            trudinger_lhs: r.trudinger_values.clone(),
            levels_csv,
        }
    }
}

/// Everything computed for one value of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TRun {
    pub t: f64,
    #[serde(with = "real")]
    pub c_t: f64,
    pub solve: Option<SolveSummary>,
    pub envelope: Option<EnvelopeSummary>,
    pub auxiliary: Vec<AuxSummary>,
    pub estimates: Option<EstimateSummary>,
}

impl TRun {
    pub fn new(t: f64, c_t: f64) -> Self {
        Self { t, c_t, solve: None, envelope: None, auxiliary: Vec::new(), estimates: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha0: f64,
    pub alpha0_frozen: bool,
    pub trudinger_c: f64,
    pub trudinger_c_frozen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub k: usize,
    pub nu: usize,
    pub expected_exponent: f64,
    /// Slope of `log c_t` against `log t` over `fit_t`.
    pub fitted_exponent: Option<f64>,
    pub fit_t: Vec<f64>,
    pub sup_deficit: Vec<f64>,
    pub sup_neg_phi: Vec<f64>,
    /// `max sup d / min sup d` over the sweep.
    #[serde(with = "real")]
    pub deficit_spread: f64,
    /// `sup(−φ)` at the smallest `t` over its value at the largest.
    #[serde(with = "real")]
    pub neg_phi_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub verb: String,
    pub n: usize,
    pub points: usize,
    pub k: usize,
    pub nu: usize,
    pub config: ExperimentConfig,
    pub runs: Vec<TRun>,
    pub calibration: Option<Calibration>,
    pub sweep: Option<SweepSummary>,
    pub suites: Vec<Suite>,
    pub errors: Vec<RunError>,
}

impl Report {
    pub fn new(verb: &str, config: &ExperimentConfig, nu: usize) -> Self {
        Self {
            schema: SCHEMA.into(),
            verb: verb.into(),
            n: config.problem.n,
            points: config.problem.points,
            k: config.k(),
            nu,
            config: config.clone(),
            runs: Vec::new(),
            calibration: None,
            sweep: None,
            suites: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.suites.iter().all(|s| s.passed)
    }

    pub fn run(&self, t: f64) -> Option<&TRun> {
        self.runs.iter().find(|r| r.t == t)
    }

    pub fn suite(&self, name: &str, t: Option<f64>) -> Option<&Suite> {
        self.suites.iter().find(|s| s.name == name && s.t == t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn path(dir: &Path, verb: &str) -> PathBuf {
        dir.join(format!("{verb}.json"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(LabError::MissingArtifacts { path: path.to_path_buf() })
            }
            Err(e) => return Err(LabError::io(path)(e)),
        };
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub t: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub verb: String,
    pub total_seconds: f64,
    pub per_t: Vec<Timing>,
}

impl Timings {
    pub fn path(dir: &Path, verb: &str) -> PathBuf {
        dir.join(format!("{verb}_timings.json"))
    }
}

/// Columns `s, A_s, tail, omega_measure, trudinger_lhs`.
pub fn levels_csv(stats: &LevelStats, trudinger_lhs: &[f64]) -> String {
    let mut out = String::from("s,A_s,tail,omega_measure,trudinger_lhs\n");
    for i in 0..stats.len() {
        let lhs = trudinger_lhs.get(i).copied().unwrap_or(f64::NAN);
        writeln!(out, "{},{},{},{},{}", stats.s_values[i], stats.a_s[i], stats.tail[i], stats.omega_measure[i], lhs)
            .expect("writing to a string");
    }
    out
}

/// File-name fragment for a value of `t`.
pub fn t_tag(t: f64) -> String {
    format!("t{t}")
}
