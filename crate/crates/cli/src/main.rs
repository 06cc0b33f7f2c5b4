use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtorus::experiments::{run, write_output, Experiment, ExperimentConfig, Overrides};

/// Quantized Kronecker and perturbed Kronecker maps on the 2-torus.
///
/// Settings are layered: the experiment's preset, then the --config document,
/// then the flags below. Without --out the primary artifact goes to stdout.
#[derive(Parser, Debug)]
#[command(name = "qtorus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Remainders in the Kronecker eigenbasis over an N sweep (CSV).
    QueKron(Common),
    /// Slow-convergence construction and its simulated levels (JSON).
    SlowConv(Common),
    /// Remainders for the perturbed map, with the conjugated Egorov defect (CSV).
    Perturbed(Common),
    /// Slow-convergence levels transported by the perturbation (JSON).
    PerturbedSlow(Common),
    /// Egorov defect table for translation, shear and perturbed map (CSV).
    Egorov(Common),
    /// Finite diophantine scan of alpha (JSON).
    DiophScan(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration layered over the preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; sweeps also write <stem>.summary.json beside it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Number of geometric steps between --n-min and --n-max.
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest N for dense cross-checks.
    #[arg(long, value_name = "N")]
    max_dense: Option<usize>,
    /// Record wall-clock seconds in CSV rows.
    #[arg(long)]
    timing: bool,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

impl Command {
    fn split(&self) -> (Experiment, &Common) {
        match self {
            Command::QueKron(c) => (Experiment::QueKron, c),
            Command::SlowConv(c) => (Experiment::SlowConv, c),
            Command::Perturbed(c) => (Experiment::Perturbed, c),
            Command::PerturbedSlow(c) => (Experiment::PerturbedSlow, c),
            Command::Egorov(c) => (Experiment::Egorov, c),
            Command::DiophScan(c) => (Experiment::DiophScan, c),
        }
    }
}

fn configure(experiment: Experiment, c: &Common) -> qtorus::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(experiment, &std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::preset(experiment),
    };
    cfg.apply(&Overrides {
        out: c.out.clone(),
        n_min: c.n_min,
        n_max: c.n_max,
        n_steps: c.n_steps,
        seed: c.seed,
        max_dense: c.max_dense,
    })?;
    if c.timing {
        cfg.precision.timing = true;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = cli.command.split();
    let result = configure(experiment, common).and_then(|cfg| {
        if common.print_config {
            writeln!(std::io::stdout(), "{}", cfg.to_json()?)?;
            return Ok(());
        }
        let output = run(&cfg)?;
        match &cfg.out {
            Some(path) => write_output(&output, path),
            None => Ok(write!(std::io::stdout(), "{}", output.primary)?),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(qtorus::Error::Io(e)) if e.kind() == ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qtorus {}: {e}", experiment.name());
            ExitCode::FAILURE
        }
    }
}
