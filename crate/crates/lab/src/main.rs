use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neflab::{ExperimentConfig, Verb};

#[derive(Parser)]
#[command(name = "neflab", version, about = "Monge-Ampère and σ_k-Hessian experiments on flat tori")]
struct Cli {
    #[command(subcommand)]
    verb: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the degenerate equation for every t.
    Solve(Args),
    /// Compute envelopes through the β-scheme.
    Envelope(Args),
    /// Run the full inequality chain; exits nonzero if any check fails.
    Verify(Args),
    /// Sweep t → 0 and fit the cohomology constant exponent.
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per axis (overrides the configuration).
    #[arg(long)]
    grid_override: Option<usize>,
    /// Newton residual tolerance (overrides the configuration).
    #[arg(long)]
    tol_override: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match cli.verb {
        Command::Solve(a) => (Verb::Solve, a),
        Command::Envelope(a) => (Verb::Envelope, a),
        Command::Verify(a) => (Verb::Verify, a),
        Command::Sweep(a) => (Verb::Sweep, a),
    };
    match run(verb, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(verb: Verb, args: Args) -> neflab::Result<bool> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = args.out {
        config.output_dir = dir;
    }
    if let Some(points) = args.grid_override {
        config.problem.points = points;
    }
    if let Some(tol) = args.tol_override {
        config.tolerances.newton = Some(tol);
    }
    let dir = config.output_dir.clone();
    let outcome = verb.run(config)?;
    outcome.write(&dir)?;
    let report = &outcome.report;
    for s in &report.suites {
        let t = s.t.map(|t| format!(" t={t}")).unwrap_or_default();
        println!("{} {}{t}: margin {:e}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.margin);
    }
    for e in &report.errors {
        let t = e.t.map(|t| format!(" t={t}")).unwrap_or_default();
        println!("ERROR {}{t}: {}", e.stage, e.message);
    }
    println!("report written to {}", neflab::Report::path(&dir, &report.verb).display());
    Ok(report.passed())
}
