mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use commands::Run;
use config::ExperimentConfig;

/// Failure classes mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Config(_) => 3,
            CliError::Assumption(_) => 4,
        }
    }
}

impl From<strip_dirac::Error> for CliError {
    fn from(e: strip_dirac::Error) -> Self {
        match e {
            strip_dirac::Error::InvalidInput(m) => CliError::Config(m),
            strip_dirac::Error::Solver(m) => CliError::Solver(m),
            strip_dirac::Error::Assumption(m) => CliError::Assumption(m),
        }
    }
}

const AFTER_HELP: &str = "\
Exit codes: 0 ok, 1 i/o, 2 solver failure, 3 config error, 4 assumption violated.

Outputs (in --out, else the config's \"output\", else ./out):
  manifest.json            config hash, versions, timings, warnings, files written
  dispersion_h<h>.csv      xi, neg_1..neg_K (signed, negative), pos_1..pos_K
  dispersion_h<h>.svg      branches with the gap band between -lambda_ess^- and lambda_ess^+
  dispersion.json          per-h evenness defect, sampled minima and thresholds
  thresholds.json          per-h lambda_ess^+, lambda_ess^-, ratios, and a0
  a0.json                  half-line constant and diagnostics
  potential.json           minimum of phi, Hessian, structural flags, residuals
  potential_slice.csv      s, phi_at_t_min, phi0_at_t_min along the line t = t_min
  potential_grid.csv       s, t, phi at every grid node
  conformal.json           Cauchy-Riemann residual, deviation from the identity, disk map
  effective.json           effective eigenvalues (natural logs), ratios, gap margins
  effective.csv            h, k, ln_lambda_eff, ln_asymptote, ratio, ln_lambda_eff_refined
  effective_ratios.svg     ratio trends over the h ladder
  report.json              potential, conformal, thresholds and effective sections";

#[derive(Parser, Debug)]
#[command(name = "strip-dirac", version, about = "Spectra of magnetic Dirac operators on strips", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel sweeps (results do not depend on it).
    #[arg(long, global = true, env = "STRIP_DIRAC_WORKERS")]
    workers: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dispersion curves for each h, with thresholds, CSV and SVG.
    Dispersion(Common),
    /// Essential-spectrum thresholds for each h.
    Thresholds(Common),
    /// Half-line constant a0.
    A0(Common),
    /// Poisson potential and its minimum.
    Potential(Common),
    /// Conformal map onto the straight strip.
    Conformal(Common),
    /// Effective eigenvalues and their asymptotic ratios.
    Effective(Common),
    /// All of potential, conformal, thresholds and effective in one JSON.
    Report(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Dispersion(c) => ("dispersion", c),
            Command::Thresholds(c) => ("thresholds", c),
            Command::A0(c) => ("a0", c),
            Command::Potential(c) => ("potential", c),
            Command::Conformal(c) => ("conformal", c),
            Command::Effective(c) => ("effective", c),
            Command::Report(c) => ("report", c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (name, common) = cli.command.parts();
    let workers = match cli.workers {
        Some(0) => {
            eprintln!("config error: worker count must be positive");
            return ExitCode::from(3);
        }
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
    {
        log::warn!("thread pool already initialized: {e}");
    }
    let cfg = match ExperimentConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.code());
        }
    };
    let out = commands::output_dir(&cfg, common.out.as_deref());
    let mut run = match Run::new(cfg, out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.code());
        }
    };
    let result = match name {
        "dispersion" => commands::cmd_dispersion(&mut run),
        "thresholds" => commands::cmd_thresholds(&mut run),
        "a0" => commands::cmd_a0(&mut run),
        "potential" => commands::cmd_potential(&mut run),
        "conformal" => commands::cmd_conformal(&mut run),
        "effective" => commands::cmd_effective(&mut run),
        _ => commands::cmd_report(&mut run),
    };
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    for w in &run.warnings {
        log::warn!("{w}");
    }
    if let Err(e) = commands::write_manifest(&mut run, name, workers, &status) {
        eprintln!("{e}");
        return ExitCode::from(e.code());
    }
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
