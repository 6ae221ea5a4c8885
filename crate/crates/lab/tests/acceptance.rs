//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
//! status if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use neflab::config::ExperimentConfig;
use neflab::pipeline::log_log_slope;
use neflab::report::Suite;
use neflab::{run_sweep, run_verify, Report};
use neflab_core::estimates::phi_constants;
use neflab_core::geometry::det_ratio;
use neflab_core::herm::min_eigenvalue_at;
use neflab_core::{hessian, ma, Grid, HermMat, NefClassSpec, PeriodicField, Problem, ProblemSpec, SolverOptions, Torus};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn problem(grid: Grid, g: HermMat, chi0: HermMat, rho: PeriodicField, f: PeriodicField) -> Problem {
    let nef = NefClassSpec::new(chi0, rho).unwrap();
    Problem::new(ProblemSpec::new(grid, g, nef, f, 3.0).unwrap()).unwrap()
}

fn field(grid: Grid, f: impl Fn(&[f64; 4]) -> f64) -> PeriodicField {
    PeriodicField::from_fn(grid, f).unwrap()
}

fn skew_metric() -> HermMat {
    HermMat::new(1.0, 1.4, c(0.2, -0.3))
}

/// Random real trigonometric polynomial with wave numbers in `[-max, max]`.
fn random_trig(grid: Grid, rng: &mut ChaCha8Rng, modes: usize, max: i32, amp: f64) -> PeriodicField {
    let axes = grid.axes();
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..modes)
        .map(|_| {
            let wave = (0..axes).map(|_| rng.gen_range(-max..=max) as f64).collect();
            (wave, rng.gen_range(-amp..amp), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    field(grid, |x| {
        terms
            .iter()
            .map(|(w, a, ph)| a * (2.0 * PI * w.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>() + ph).cos())
            .sum()
    })
}

/// Problem whose normalized MA solution at `t` is `star − max star`.
fn manufactured(grid: Grid, g: HermMat, chi0: HermMat, rho: PeriodicField, star: &PeriodicField, t: f64) -> Problem {
    let base = problem(grid, g, chi0, rho.clone(), PeriodicField::zeros(grid));
    let form = base.background(t).add_scaled(&base.torus().complex_hessian(star), 1.0).unwrap();
    let f = det_ratio(&form, &g).map(f64::ln).unwrap();
    problem(grid, g, chi0, rho, f)
}

fn criterion1() -> Check {
    let mut out = Vec::new();
    let cases: [(usize, usize, f64); 2] = [(1, 256, 1e-7), (2, 32, 1e-5)];
    for (n, points, tol) in cases {
        let grid = Grid::new(n, points).unwrap();
        let (p, star, t) = if n == 1 {
            let star = field(grid, |x| 0.03 * (2.0 * PI * x[0]).cos() + 0.005 * (2.0 * PI * (x[0] + 2.0 * x[1])).sin());
            let rho = field(grid, |x| 0.02 * (2.0 * PI * x[1]).cos());
            (manufactured(grid, HermMat::scalar(1.0), HermMat::scalar(0.2), rho, &star, 1.0), star, 1.0)
        } else {
            let star = field(grid, |x| {
                0.004 * (2.0 * PI * (x[0] + x[3])).cos() + 0.003 * (2.0 * PI * (2.0 * x[1] - x[2])).sin()
            });
            let rho = field(grid, |x| 0.01 * (2.0 * PI * (x[0] + x[3])).sin());
            (manufactured(grid, skew_metric(), HermMat::diag(0.3, 0.0), rho, &star, 0.5), star, 0.5)
        };
        let star = star.shifted(-star.max());
        let start = Instant::now();
        let r = ma::solve_ma(&p, t, &SolverOptions::for_dim(n)).map_err(|e| format!("n={n}: {e}"))?;
        let secs = start.elapsed().as_secs_f64();
        let err = r.phi.sup_distance(&star).unwrap();
        let line = format!("n={n} N={points}: sup error {err:.2e} (≤ {tol:e}) in {secs:.1} s (≤ 60 s)");
        if err > tol || secs > 60.0 {
            return Err(line);
        }
        out.push(line);
    }
    Ok(out.join("; "))
}

/// Naive separable DFT along every axis; `sign` is the exponent sign.
fn dft_nd(data: &mut [Complex64], points: usize, axes: usize, sign: f64) {
    let mut line = vec![c(0.0, 0.0); points];
    for axis in 0..axes {
        let stride = points.pow((axes - 1 - axis) as u32);
        for start in 0..data.len() {
            if (start / stride) % points != 0 {
                continue;
            }
            for (k, out) in line.iter_mut().enumerate() {
                *out = (0..points)
                    .map(|j| {
                        let ang = sign * 2.0 * PI * (j * k) as f64 / points as f64;
                        data[start + j * stride] * c(ang.cos(), ang.sin())
                    })
                    .sum();
            }
            for (j, v) in line.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
    }
}

fn as_matrix(m: &HermMat) -> [[Complex64; 2]; 2] {
    [[c(m.a11, 0.0), m.a12], [m.a12.conj(), c(m.a22, 0.0)]]
}

/// Solves the linear `k = 1` equation by dividing by the Hessian symbol.
fn sigma_one_oracle(p: &Problem, rho: &PeriodicField, t: f64) -> PeriodicField {
    let grid = p.grid();
    let points = grid.points();
    let c_t = p.cohomology_constant(t, 1).unwrap();
    let gi = as_matrix(&p.metric().inverse(2).unwrap());
    let m = as_matrix(&p.constant_form(t));
    let base: f64 = (0..2).flat_map(|j| (0..2).map(move |k| (j, k))).map(|(j, k)| (gi[k][j] * m[j][k]).re).sum::<f64>() / 2.0;
    let mut spec: Vec<Complex64> = p.f_hat().values().iter().map(|v| c(c_t * v.exp() - base, 0.0)).collect();
    dft_nd(&mut spec, points, 4, -1.0);
    let half = points / 2;
    let wave = |i: usize| if i <= half { i as f64 } else { i as f64 - points as f64 };
    // Off-diagonal entries use first derivatives, whose Nyquist wavenumber is 0.
    let first = |i: usize| if i == half { 0.0 } else { wave(i) };
    for (idx, z) in spec.iter_mut().enumerate() {
        let d = [idx / points.pow(3), (idx / points.pow(2)) % points, (idx / points) % points, idx % points];
        if d.iter().all(|&v| v == 0) {
            *z = c(0.0, 0.0);
            continue;
        }
        let mut symbol = c(0.0, 0.0);
        for j in 0..2 {
            for k in 0..2 {
                let h = if j == k {
                    let (a, b) = (wave(d[2 * j]), wave(d[2 * j + 1]));
                    c(-PI * PI * (a * a + b * b), 0.0)
                } else {
                    let (aj, bj) = (first(d[2 * j]), first(d[2 * j + 1]));
                    let (ak, bk) = (first(d[2 * k]), first(d[2 * k + 1]));
                    c(bj, aj) * c(-bk, ak) * (PI * PI)
                };
                symbol += gi[k][j] * h;
            }
        }
        *z /= symbol.re / 2.0;
    }
    dft_nd(&mut spec, points, 4, 1.0);
    let total = spec.len() as f64;
    let phi: Vec<f64> = spec.iter().zip(rho.values()).map(|(w, r)| w.re / total - r).collect();
    let phi = PeriodicField::new(grid, phi).unwrap();
    phi.shifted(-phi.max())
}

fn criterion2() -> Check {
    let grid = Grid::new(2, 16).unwrap();
    let rho = field(grid, |x| 0.05 * (2.0 * PI * (x[0] + x[3])).sin());
    let f = field(grid, |x| 0.4 * (2.0 * PI * x[1]).cos() + 0.2 * (2.0 * PI * (x[2] - x[0])).sin());
    let p = problem(grid, skew_metric(), HermMat::diag(0.3, 0.0), rho.clone(), f);
    let opts = SolverOptions::for_dim(2).with_tol(1e-11);
    let t = 0.4;
    let sigma1 = hessian::solve_sigma_k(&p, t, 1, &opts).map_err(|e| e.to_string())?;
    let lin = sigma1.phi.sup_distance(&sigma_one_oracle(&p, &rho, t)).unwrap();

    let f = field(grid, |x| (1.0 - 0.5 * (2.0 * PI * x[0]).cos()).ln() + 0.3 * (2.0 * PI * x[3]).sin());
    let p = problem(grid, skew_metric(), HermMat::diag(1.0, 0.0), rho, f);
    let sn = hessian::solve_sigma_k(&p, 0.5, 2, &opts).map_err(|e| e.to_string())?;
    let mae = ma::solve_ma(&p, 0.5, &opts).map_err(|e| e.to_string())?;
    let eq = sn.phi.sup_distance(&mae.phi).unwrap();
    let line = format!("σ₁ vs direct spectral solve {lin:.2e} (≤ 1e-8); σ₂ vs MA {eq:.2e} (≤ 1e-6)");
    if lin <= 1e-8 && eq <= 1e-6 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_mass = 0.0f64;
    for n in [1, 2] {
        let grid = Grid::new(n, 16).unwrap();
        let g = skew_metric_for(n);
        let torus = Torus::new(grid, g).unwrap();
        for _ in 0..20 {
            let u = random_trig(grid, &mut rng, 6, 3, 0.05);
            let mass = torus.integrate(&det_ratio(&torus.complex_hessian(&u).add_constant(g), &g));
            worst_mass = worst_mass.max((mass - torus.volume()).abs() / torus.volume());
        }
    }
    let mut worst_ct = 0.0f64;
    let grid = Grid::new(2, 16).unwrap();
    let f = random_trig(grid, &mut rng, 4, 2, 0.3);
    let flat = problem(grid, skew_metric(), HermMat::diag(0.3, 0.1), PeriodicField::zeros(grid), f.clone());
    for _ in 0..5 {
        let rho = random_trig(grid, &mut rng, 6, 3, 0.05);
        let p = problem(grid, skew_metric(), HermMat::diag(0.3, 0.1), rho, f.clone());
        for t in [1.0, 0.1, 0.01] {
            for k in [1, 2] {
                let (a, b) = (p.cohomology_constant(t, k).unwrap(), flat.cohomology_constant(t, k).unwrap());
                worst_ct = worst_ct.max((a - b).abs() / b);
            }
        }
    }
    let line = format!("40 random u: max |∫det − Vol|/Vol = {worst_mass:.2e}; c_t under ρ: max rel change {worst_ct:.2e} (≤ 1e-8)");
    if worst_mass <= 1e-8 && worst_ct <= 1e-8 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let classes = [
        (1, HermMat::ZERO),
        (1, HermMat::scalar(0.1)),
        (2, HermMat::ZERO),
        (2, HermMat::diag(1.0, 0.0)),
        (2, HermMat::new(0.5, 0.5, c(0.5, 0.0))),
        (2, HermMat::identity(2)),
    ];
    let ts = [1e-2, 1e-3, 1e-4];
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, chi0) in classes {
        let grid = Grid::new(n, 16).unwrap();
        let rho = random_trig(grid, &mut rng, 4, 2, 0.02);
        let p = problem(grid, skew_metric_for(n), chi0, rho, PeriodicField::zeros(grid));
        let nu = p.spec().nef.nu();
        let c: Vec<f64> = ts.iter().map(|&t| p.cohomology_constant(t, n).unwrap()).collect();
        let slope = log_log_slope(&ts, &c);
        let expected = (n - nu) as f64;
        ok &= (slope - expected).abs() <= 0.1;
        parts.push(format!("n={n} ν={nu}: {slope:.4} vs {expected}"));
    }
    let line = parts.join("; ");
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn skew_metric_for(n: usize) -> HermMat {
    if n == 1 {
        HermMat::scalar(1.3)
    } else {
        skew_metric()
    }
}

fn suites<'a>(report: &'a Report, name: &'a str) -> impl Iterator<Item = &'a Suite> {
    report.suites.iter().filter(move |s| s.name == name)
}

/// All suites named in `names` pass and exist for every `t`; returns the
/// smallest margin per name.
fn require(report: &Report, label: &str, names: &[&str], per_t: bool) -> Check {
    let mut parts = Vec::new();
    for name in names {
        let found: Vec<&Suite> = suites(report, name).collect();
        let expect = if per_t { report.runs.len() } else { 1 };
        if found.len() < expect {
            return Err(format!("{label}: {name} present for {} of {expect} runs; errors {:?}", found.len(), report.errors));
        }
        let worst = found.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).expect("nonempty");
        if !found.iter().all(|s| s.passed) {
            return Err(format!("{label}: {name} fails at t={:?}: {}", worst.t, worst.detail));
        }
        parts.push(format!("{name} min margin {:.2e}", worst.margin));
    }
    Ok(format!("{label}: {}", parts.join(", ")))
}

fn both(a: Check, b: Check) -> Check {
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(format!("{a}; {b}")),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

struct Frozen {
    label: &'static str,
    config: ExperimentConfig,
    /// Trudinger constant a half-resolution calibration would have given.
    coarse_c: f64,
    report: Report,
}

/// Calibrates `α₀` and the Trudinger constant on the reference configuration,
/// freezes both and verifies again with the frozen values.
fn frozen_verify(label: &'static str, file: &str, out: &Path) -> Result<Frozen, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(file);
    let mut config = ExperimentConfig::load(&path).map_err(|e| e.to_string())?;
    let calibrate = |mut cfg: ExperimentConfig, dir: &str| {
        cfg.output_dir = out.join(dir);
        let report = run_verify(cfg).map_err(|e| e.to_string())?.report;
        report.calibration.ok_or_else(|| format!("{dir}: no constants calibrated"))
    };
    let cal = calibrate(config.clone(), &format!("{label}_calibration"))?;
    let mut coarse = config.clone();
    coarse.problem.points /= 2;
    let coarse = calibrate(coarse, &format!("{label}_coarse"))?;
    config.estimates.alpha0 = Some(cal.alpha0);
    config.estimates.trudinger_c = Some(cal.trudinger_c);
    config.output_dir = out.join(label);
    let report = run_verify(config.clone()).map_err(|e| e.to_string())?.report;
    Ok(Frozen { label, config, coarse_c: coarse.trudinger_c, report })
}

fn criterion5(runs: &[Frozen]) -> Check {
    runs.iter()
        .map(|r| require(&r.report, r.label, &["rate_fit", "sandwich_lower"], true))
        .reduce(both)
        .expect("runs")
}

fn criterion6(runs: &[Frozen]) -> Check {
    let k = phi_constants(2.0, 1);
    if k.epsilon != 2.0 || k.lambda != 1.0 {
        return Err(format!("constants at n = 1, A = 2: ε = {}, Λ = {}", k.epsilon, k.lambda));
    }
    let ma: Vec<&Frozen> = runs.iter().filter(|r| r.config.is_ma()).collect();
    if ma.is_empty() {
        return Err("no Monge-Ampère reference run".into());
    }
    let aux: usize = ma.iter().flat_map(|r| &r.report.runs).map(|r| r.auxiliary.len()).sum();
    let checks = ma.iter().map(|r| require(&r.report, r.label, &["phi_comparison"], true)).reduce(both).expect("runs");
    checks.map(|s| format!("ε = 2, Λ = 1 at (n = 1, A = 2); {aux} auxiliary solves; {s}"))
}

fn criterion7(runs: &[Frozen]) -> Check {
    let mut parts = Vec::new();
    for r in runs {
        let cal = r.report.calibration.as_ref().ok_or("no calibration")?;
        if !(cal.alpha0_frozen && cal.trudinger_c_frozen) {
            return Err(format!("{}: constants not frozen", r.label));
        }
        let family = if r.config.is_ma() { "MA".to_string() } else { format!("σ_{}", r.config.k()) };
        let s = require(&r.report, r.label, &["trudinger"], true)?;
        parts.push(format!(
            "{s} ({family}, frozen α₀ = {:.3}, C = {:.3}; half-resolution calibration gives C = {:.3})",
            cal.alpha0, cal.trudinger_c, r.coarse_c
        ));
    }
    if runs.iter().all(|r| r.config.is_ma()) || runs.iter().all(|r| !r.config.is_ma()) {
        return Err("needs both an MA and a σ_k reference".into());
    }
    Ok(parts.join("; "))
}

fn criterion8(runs: &[Frozen]) -> Check {
    runs.iter()
        .map(|r| require(&r.report, r.label, &["young", "holder_b0", "degiorgi_relation", "uniform_bound"], true))
        .reduce(both)
        .expect("runs")
}

fn criterion9(reference: &Frozen) -> Check {
    let p = reference.config.build_problem().map_err(|e| e.to_string())?;
    // χ = χ₀ + i∂∂̄ρ must fail to be semipositive somewhere.
    let chi = p.torus().complex_hessian(p.spec().nef.rho()).add_constant(*p.spec().nef.chi0());
    let n = p.dim();
    let min_chi = chi.matrices().iter().map(|m| min_eigenvalue_at(m, p.metric(), n)).fold(f64::INFINITY, f64::min);
    let sweep = run_sweep(reference.config.clone()).map_err(|e| e.to_string())?.report;
    let s = sweep.sweep.as_ref().ok_or("sweep summary missing")?;
    let line = format!(
        "t = {:?}: sup(V − φ) = {:.4?} spread {:.3} (≤ 3); sup(−φ) = {:.4?} growth {:.3} (≥ 3); min eig χ = {min_chi:.3}",
        reference.config.t_list, s.sup_deficit, s.deficit_spread, s.sup_neg_phi, s.neg_phi_growth
    );
    let complete = s.sup_deficit.len() == reference.config.t_list.len();
    if complete && min_chi < 0.0 && s.deficit_spread <= 3.0 && s.neg_phi_growth >= 3.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion10(reference: &Frozen) -> Check {
    let again = run_verify(reference.config.clone()).map_err(|e| e.to_string())?.report;
    let (a, b) = (reference.report.to_json(), again.to_json());
    if a == b {
        Ok(format!("{}: two verify runs give identical {}-byte reports", reference.label, a.len()))
    } else {
        let at = a.bytes().zip(b.bytes()).position(|(x, y)| x != y).unwrap_or(a.len().min(b.len()));
        Err(format!("{}: reports differ from byte {at}", reference.label))
    }
}

fn main() {
    let out = tempfile::tempdir().expect("temporary directory");
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |id: usize, check: Check| {
        let (tag, text) = match check {
            Ok(t) => ("PASS", t),
            Err(t) => {
                failed += 1;
                ("FAIL", t)
            }
        };
        println!("{tag} criterion {id}: {text}");
    };
    report(1, criterion1());
    report(2, criterion2());
    report(3, criterion3());
    report(4, criterion4());

    let runs: Result<Vec<Frozen>, String> = [("n1_reference", "n1_reference.json"), ("n2_sigma1", "n2_sigma1.json")]
        .into_iter()
        .map(|(label, file)| frozen_verify(label, file, out.path()))
        .collect();
    match runs {
        Ok(runs) => {
            report(5, criterion5(&runs));
            report(6, criterion6(&runs));
            report(7, criterion7(&runs));
            report(8, criterion8(&runs));
            report(9, criterion9(&runs[0]));
            report(10, criterion10(&runs[0]));
        }
        Err(e) => {
            for id in 5..=10 {
                report(id, Err(format!("reference runs failed: {e}")));
            }
        }
    }
    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
