use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use ebb_core::config::{parse_config, LoadedConfig, DEFAULT_EQUIVALENCE_POINTS, DEFAULT_SWEEP_POINTS};
use ebb_core::fluxes::integrate_fluxes;
use ebb_core::output::{self, OutputDir, RunManifest};
use ebb_core::scan::{classify_transport, energy_sweep, equivalence_report, l_sweep};
use ebb_core::validate::run_validation;
use ebb_core::Error;

/// Residual above which a pipeline evaluation counts as an invariant failure.
const UNITARITY_LIMIT: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "ebb", version, about = "Steady-state transport through a finite tight-binding sample")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Replace the seed of a random potential.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Stop at the first invariant failure instead of writing results and failing at exit.
    #[arg(long)]
    fail_fast: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrated energy, charge and entropy fluxes.
    Fluxes(Common),
    /// Transmission and spectral densities on an energy grid.
    SweepE(Common),
    /// Densities and transfer norms over growing sample lengths at one energy.
    SweepL(Common),
    /// Length sweeps over an energy grid with the persistent/vanishing classification.
    Equivalence(Common),
    /// Built-in invariant suite.
    Validate(Common),
}

enum Failure {
    Config(Error),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. }
            | Error::Io { .. }
            | Error::Parse { .. }
            | Error::InvalidInput(_)
            | Error::Domain { .. } => Failure::Config(e),
            other => Failure::Invariant(other.to_string()),
        }
    }
}

type Outcome = Result<Vec<String>, Failure>;

fn load(common: &Common) -> Result<LoadedConfig, Failure> {
    let mut cfg = parse_config(&common.config)?;
    if let Some(seed) = common.seed_override {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn fluxes(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let result = integrate_fluxes(&cfg.system()?)?;
    let mut problems = Vec::new();
    if result.max_unitarity_residual > UNITARITY_LIMIT {
        problems.push(format!("unitarity residual {:e}", result.max_unitarity_residual));
    }
    if result.entropy_flux < -result.quadrature_error_estimate {
        problems.push(format!("negative entropy flux {:e}", result.entropy_flux));
    }
    let mut out = OutputDir::create(&common.out)?;
    out.write_json("fluxes.json", &output::fluxes_json(&result))?;
    let mut manifest = RunManifest::new("fluxes", &cfg.config);
    manifest.max_unitarity_residual = result.max_unitarity_residual;
    manifest.details = json!({
        "energy_flux_r": result.energy_flux_r,
        "charge_flux_r": result.charge_flux_r,
        "converged": result.converged,
    });
    out.finish(manifest)?;
    println!(
        "entropy_flux = {} (error estimate {:e}, {} evaluations{})",
        result.entropy_flux,
        result.quadrature_error_estimate,
        result.evaluations,
        if result.converged { "" } else { ", not converged" }
    );
    Ok(problems)
}

fn sweep_e(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let grid = cfg.energies(DEFAULT_SWEEP_POINTS);
    let records = energy_sweep(cfg.potential(), cfg.config.sample.length, &cfg.lead_l, &cfg.lead_r, cfg.thermo(), &grid)?;
    let summary = output::sweep_e_json(&records);
    let max_residual = summary["max_unitarity_residual"].as_f64().unwrap_or(0.0);
    let mut problems: Vec<String> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("E = {}: {e}", r.energy)))
        .collect();
    if max_residual > UNITARITY_LIMIT {
        problems.push(format!("unitarity residual {max_residual:e}"));
    }
    if common.fail_fast && !problems.is_empty() {
        return Err(Failure::Invariant(problems.remove(0)));
    }
    let mut out = OutputDir::create(&common.out)?;
    out.write_text("sweep_e.csv", &output::sweep_e_csv(&records))?;
    out.write_json("sweep_e.json", &summary)?;
    let mut manifest = RunManifest::new("sweep-e", &cfg.config);
    manifest.max_unitarity_residual = max_residual;
    manifest.details = json!({ "energies": grid.len() });
    out.finish(manifest)?;
    println!("{} energies, {} failed, max unitarity residual {max_residual:e}", records.len(), problems.len());
    Ok(problems)
}

fn sweep_l(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let energy = cfg.sweep_energy()?;
    let checkpoints = cfg.checkpoints();
    let points = l_sweep(cfg.potential(), energy, &cfg.lead_l, &cfg.lead_r, cfg.thermo(), &checkpoints)?;
    let (classification, note) = match classify_transport(&points, &cfg.config.sweep.thresholds) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let max_residual = points.iter().map(|p| p.unitarity_residual).fold(0.0, f64::max);
    let mut problems = Vec::new();
    if max_residual > UNITARITY_LIMIT {
        problems.push(format!("unitarity residual {max_residual:e}"));
    }
    let mut out = OutputDir::create(&common.out)?;
    out.write_text("sweep_l.csv", &output::sweep_l_csv(&points))?;
    out.write_json("sweep_l.json", &output::sweep_l_json(energy, &points, classification.as_ref(), note))?;
    let mut manifest = RunManifest::new("sweep-l", &cfg.config);
    manifest.max_unitarity_residual = max_residual;
    manifest.details = json!({ "checkpoints": checkpoints });
    out.finish(manifest)?;
    match classification {
        Some(c) => println!("classification = {:?} (L_max = {})", c.label, c.l_max),
        None => println!("classification unavailable"),
    }
    Ok(problems)
}

fn equivalence(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let grid = cfg.energies(DEFAULT_EQUIVALENCE_POINTS);
    let checkpoints = cfg.checkpoints();
    let report = equivalence_report(
        cfg.potential(),
        &grid,
        &cfg.lead_l,
        &cfg.lead_r,
        cfg.thermo(),
        &checkpoints,
        &cfg.config.sweep.thresholds,
    )?;
    let mut problems = Vec::new();
    if report.contradictions > 0 {
        problems.push(format!("{} contradictions", report.contradictions));
    }
    if report.failed > 0 {
        problems.push(format!("{} energies failed", report.failed));
    }
    if report.max_unitarity_residual() > UNITARITY_LIMIT {
        problems.push(format!("unitarity residual {:e}", report.max_unitarity_residual()));
    }
    if common.fail_fast && !problems.is_empty() {
        return Err(Failure::Invariant(problems.remove(0)));
    }
    let mut out = OutputDir::create(&common.out)?;
    out.write_text("equivalence.csv", &output::equivalence_csv(&report))?;
    out.write_json("equivalence.json", &report)?;
    let mut manifest = RunManifest::new("equivalence", &cfg.config);
    manifest.max_unitarity_residual = report.max_unitarity_residual();
    manifest.details = json!({ "checkpoints": checkpoints, "energies": grid.len() });
    out.finish(manifest)?;
    println!(
        "persistent {} / vanishing {} / indeterminate {} / failed {}, contradictions {}",
        report.persistent, report.vanishing, report.indeterminate, report.failed, report.contradictions
    );
    Ok(problems)
}

fn validate(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let report = run_validation(&cfg.lead_l, &cfg.lead_r, cfg.thermo());
    let mut out = OutputDir::create(&common.out)?;
    out.write_json("validate.json", &report)?;
    let mut manifest = RunManifest::new("validate", &cfg.config);
    manifest.max_unitarity_residual = report.max_unitarity_residual;
    manifest.details = json!({ "checks": report.checks.len(), "passed": report.passed });
    out.finish(manifest)?;
    let mut problems = Vec::new();
    for c in &report.checks {
        println!(
            "{} {:<48} worst {:.3e} (tolerance {:.0e}, {} points)",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance,
            c.points
        );
        if !c.passed {
            problems.push(c.name.clone());
        }
    }
    Ok(problems)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&Common) -> Outcome) = match &cli.command {
        Command::Fluxes(c) => (c, fluxes),
        Command::SweepE(c) => (c, sweep_e),
        Command::SweepL(c) => (c, sweep_l),
        Command::Equivalence(c) => (c, equivalence),
        Command::Validate(c) => (c, validate),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(common) {
        Ok(problems) if problems.is_empty() => ExitCode::SUCCESS,
        Ok(problems) => {
            for p in problems {
                eprintln!("invariant failure: {p}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(1)
        }
    }
}
