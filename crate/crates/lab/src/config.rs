//! JSON experiment configuration.
//!
//! A configuration fixes the geometry (dimension, grid, `g`, `χ₀`, `ρ`), the
//! density, the Hessian index and every schedule and tolerance of a run. All
//! fields except `problem` and `t_list` have defaults.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use neflab_core::{Grid, HermMat, NefClassSpec, PeriodicField, Problem, ProblemSpec, SolverOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A Hermitian matrix: either a scalar multiple of the identity or explicit
/// diagonal entries plus the upper off-diagonal entry `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Entries {
        diag: Vec<f64>,
        #[serde(default)]
        offdiag: [f64; 2],
    },
}

impl MatrixSpec {
    pub fn build(&self, n: usize, name: &str) -> Result<HermMat> {
        let m = match self {
            Self::Scalar(a) => HermMat::identity(n).scale(*a),
            Self::Entries { diag, offdiag } => {
                if diag.len() != n {
                    return Err(LabError::Config(format!("{name}.diag must have n = {n} entries")));
                }
                if n == 1 && offdiag != &[0.0, 0.0] {
                    return Err(LabError::Config(format!("{name}.offdiag must be zero when n = 1")));
                }
                if n == 1 {
                    HermMat::scalar(diag[0])
                } else {
                    HermMat::new(diag[0], diag[1], Complex64::new(offdiag[0], offdiag[1]))
                }
            }
        };
        if !m.is_finite() {
            return Err(LabError::Config(format!("{name} must be finite")));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Cos,
    Sin,
}

/// `amplitude·cos(2π⟨wave, x⟩)` (or `sin`) over the real axes `(x1, y1, x2, y2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub amplitude: f64,
    pub wave: Vec<i32>,
    #[serde(default)]
    pub phase: Phase,
}

impl Mode {
    fn eval(&self, x: &[f64; 4]) -> f64 {
        let arg: f64 = self.wave.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>() * 2.0 * PI;
        self.amplitude
            * match self.phase {
                Phase::Cos => arg.cos(),
                Phase::Sin => arg.sin(),
            }
    }
}

fn sum_modes(modes: &[Mode], x: &[f64; 4]) -> f64 {
    modes.iter().map(|m| m.eval(x)).sum()
}

/// The raw log-density `F` (normalized later so that `∫e^F̂ωⁿ = Vol`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Zero,
    /// `F = Σ modes`.
    Fourier { modes: Vec<Mode> },
    /// `F = log(offset + Σ modes)`; the argument must stay positive.
    LogFourier { offset: f64, modes: Vec<Mode> },
    /// `F = height·exp(−|x − center|²/(2 width²))` with periodic distance.
    Bump { center: Vec<f64>, width: f64, height: f64 },
    /// Smoothed indicator of the slab `|x1| < fraction/2`:
    /// `F = contrast·(1 + tanh(sharpness·(cos 2πx1 − cos πfraction)))/2`.
    TwoLevel { contrast: f64, fraction: f64, sharpness: f64 },
    /// `modes` random Fourier terms with wave numbers in `[−2, 2]` and
    /// amplitudes uniform in `[−amplitude, amplitude]`, drawn from the
    /// configuration seed.
    Random { modes: usize, amplitude: f64 },
}

impl DensitySpec {
    pub fn build(&self, grid: Grid, seed: u64) -> Result<PeriodicField> {
        let field = |f: &dyn Fn(&[f64; 4]) -> f64| PeriodicField::from_fn(grid, f).map_err(LabError::from);
        match self {
            Self::Zero => Ok(PeriodicField::zeros(grid)),
            Self::Fourier { modes } => field(&|x| sum_modes(modes, x)),
            Self::LogFourier { offset, modes } => {
                let arg = field(&|x| offset + sum_modes(modes, x))?;
                if !(arg.min() > 0.0) {
                    return Err(LabError::Config(
                        "log_fourier density needs offset + Σ modes > 0 on the grid".into(),
                    ));
                }
                Ok(arg.map(f64::ln)?)
            }
            Self::Bump { center, width, height } => {
                if !(*width > 0.0) {
                    return Err(LabError::Config("bump density needs width > 0".into()));
                }
                let axes = grid.axes();
                field(&|x| {
                    let r2: f64 = (0..axes)
                        .map(|a| {
                            let d = (x[a] - center.get(a).copied().unwrap_or(0.0)).rem_euclid(1.0);
                            d.min(1.0 - d).powi(2)
                        })
                        .sum();
                    height * (-r2 / (2.0 * width * width)).exp()
                })
            }
            Self::TwoLevel { contrast, fraction, sharpness } => {
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(LabError::Config("two_level density needs 0 < fraction < 1".into()));
                }
                let edge = (PI * fraction).cos();
                field(&|x| contrast * 0.5 * (1.0 + (sharpness * ((2.0 * PI * x[0]).cos() - edge)).tanh()))
            }
            Self::Random { modes, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let axes = grid.axes();
                let terms: Vec<Mode> = (0..*modes)
                    .map(|_| Mode {
                        amplitude: amplitude * rng.gen_range(-1.0..=1.0),
                        wave: (0..axes).map(|_| rng.gen_range(-2..=2)).collect(),
                        phase: if rng.gen_bool(0.5) { Phase::Cos } else { Phase::Sin },
                    })
                    .collect();
                field(&|x| sum_modes(&terms, x))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub points: usize,
    #[serde(default = "one")]
    pub g: MatrixSpec,
    pub chi0: MatrixSpec,
    /// Fourier modes of the perturbation `ρ`.
    #[serde(default)]
    pub rho: Vec<Mode>,
    #[serde(default = "zero_density")]
    pub density: DensitySpec,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn one() -> MatrixSpec {
    MatrixSpec::Scalar(1.0)
}

fn zero_density() -> DensitySpec {
    DensitySpec::Zero
}

fn default_p() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SGrid {
    pub points: usize,
    /// The grid covers `[0, factor·sup d]`.
    pub factor: f64,
}

impl Default for SGrid {
    fn default() -> Self {
        Self { points: 64, factor: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Newton residual tolerance; defaults to 1e-9 (n = 1) or 1e-7 (n = 2).
    pub newton: Option<f64>,
    /// Slack for the two sandwich inequalities.
    pub sandwich: f64,
    pub admissibility: f64,
    pub fit_residual: f64,
    /// Slack for `sup Φ ≤ ε_β`.
    pub phi: f64,
    pub monotonicity: f64,
    /// Allowed error of the fitted `c_t` exponent.
    pub exponent: f64,
    /// Bound on `max sup d / min sup d` across a sweep.
    pub deficit_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            newton: None,
            sandwich: 1e-6,
            admissibility: 1e-8,
            fit_residual: 0.5,
            phi: 1e-6,
            monotonicity: 1e-6,
            exponent: 0.1,
            deficit_spread: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuxiliaryConfig {
    pub enabled: bool,
    pub s_values: Vec<f64>,
    pub k_smooth: u32,
    /// β of the `u_β` entering the auxiliary density; defaults to the last
    /// schedule entry.
    pub beta: Option<f64>,
}

impl Default for AuxiliaryConfig {
    fn default() -> Self {
        Self { enabled: true, s_values: vec![0.0, 0.01, 0.03], k_smooth: 10, beta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatesConfig {
    /// `w` in the weight `e^{wF̂}` of the sublevel statistics.
    pub weight_exponent: f64,
    /// Frozen Trudinger exponent; estimated from the run when absent.
    pub alpha0: Option<f64>,
    pub alpha0_cap: f64,
    /// Frozen Trudinger constant; calibrated on the run when absent.
    pub trudinger_c: Option<f64>,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        Self { weight_exponent: 1.0, alpha0: None, alpha0_cap: 64.0, trudinger_c: None }
    }
}

/// Where `verify` gets `φ_t`, `V_t` and `u_β` from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifacts {
    /// Solve everything in-process.
    #[default]
    Compute,
    /// Load the dumps and `envelope.json` written by earlier `solve` and
    /// `envelope` runs into the output directory.
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    /// Decreasing values in `(0, 1]`.
    pub t_list: Vec<f64>,
    #[serde(default = "default_schedule")]
    pub beta_schedule: Vec<f64>,
    /// Hessian index; `k = n` (the default) selects the Monge-Ampère family.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub s_grid: SGrid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub auxiliary: AuxiliaryConfig,
    #[serde(default)]
    pub estimates: EstimatesConfig,
    #[serde(default)]
    pub artifacts: Artifacts,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn default_schedule() -> Vec<f64> {
    vec![50.0, 100.0, 200.0, 400.0, 800.0]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        Self::from_json(&text)
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(self.problem.n)
    }

    /// True when the run uses the Monge-Ampère family.
    pub fn is_ma(&self) -> bool {
        self.k() == self.problem.n
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_schedule.last().copied().unwrap_or(f64::NAN)
    }

    pub fn aux_beta(&self) -> f64 {
        self.auxiliary.beta.unwrap_or_else(|| self.beta_max())
    }

    pub fn solver_options(&self) -> SolverOptions {
        let opts = SolverOptions::for_dim(self.problem.n);
        match self.tolerances.newton {
            Some(tol) => opts.with_tol(tol),
            None => opts,
        }
    }

    /// Checks every invariant that does not require building the problem.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(LabError::Config(msg));
        let p = &self.problem;
        if !(p.n == 1 || p.n == 2) {
            return fail(format!("n ∈ {{1, 2}} is required (got n = {})", p.n));
        }
        if p.points < 8 || !p.points.is_power_of_two() {
            return fail(format!("points must be a power of two ≥ 8 (got {})", p.points));
        }
        if !(p.p > p.n as f64) {
            return fail(format!("p > n is required (got p = {}, n = {})", p.p, p.n));
        }
        for m in &p.rho {
            if m.wave.len() > 2 * p.n {
                return fail(format!("rho wave vectors have at most 2n = {} entries", 2 * p.n));
            }
        }
        let k = self.k();
        if !(1..=p.n).contains(&k) {
            return fail(format!("1 ≤ k ≤ n is required (got k = {k}, n = {})", p.n));
        }
        if self.t_list.is_empty() {
            return fail("t_list must be nonempty".into());
        }
        if self.t_list.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return fail(format!("t_list entries must lie in (0, 1] (got {:?})", self.t_list));
        }
        if self.t_list.windows(2).any(|w| !(w[1] < w[0])) {
            return fail(format!("t_list must be strictly decreasing (got {:?})", self.t_list));
        }
        if self.beta_schedule.len() < 3 {
            return fail(format!("beta_schedule needs at least 3 entries (got {})", self.beta_schedule.len()));
        }
        if self.beta_schedule[0] < 1.0 || self.beta_schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return fail(format!("beta_schedule must be increasing and ≥ 1 (got {:?})", self.beta_schedule));
        }
        if self.s_grid.points < 2 || !(self.s_grid.factor > 0.0) {
            return fail("s_grid needs points ≥ 2 and factor > 0".into());
        }
        if let Some(tol) = self.tolerances.newton {
            if !(tol > 0.0) {
                return fail(format!("tolerances.newton must be positive (got {tol})"));
            }
        }
        let aux = &self.auxiliary;
        if aux.k_smooth == 0 {
            return fail("auxiliary.k_smooth ≥ 1 is required".into());
        }
        if aux.s_values.iter().any(|&s| !(s >= 0.0)) {
            return fail("auxiliary.s_values must be ≥ 0".into());
        }
        if let Some(b) = aux.beta {
            if !(b >= 1.0) {
                return fail(format!("auxiliary.beta ≥ 1 is required (got {b})"));
            }
        }
        let est = &self.estimates;
        if !(est.weight_exponent > 0.0 && est.weight_exponent <= 1.0) {
            return fail(format!("estimates.weight_exponent must lie in (0, 1] (got {})", est.weight_exponent));
        }
        if !(est.alpha0_cap > 0.0) || est.alpha0.is_some_and(|a| !(a > 0.0)) {
            return fail("estimates.alpha0 and alpha0_cap must be positive".into());
        }
        if est.trudinger_c.is_some_and(|c| !(c > 0.0)) {
            return fail("estimates.trudinger_c must be positive".into());
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let p = &self.problem;
        let grid = Grid::new(p.n, p.points)?;
        let g = p.g.build(p.n, "g")?;
        let chi0 = p.chi0.build(p.n, "chi0")?;
        let rho = PeriodicField::from_fn(grid, |x| sum_modes(&p.rho, x))?;
        let f_raw = p.density.build(grid, self.seed)?;
        let nef = NefClassSpec::new(chi0, rho)?;
        Ok(Problem::new(ProblemSpec::new(grid, g, nef, f_raw, p.p)?)?)
    }
}
