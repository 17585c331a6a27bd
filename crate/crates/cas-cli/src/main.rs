//! `cas-experiments`: run a waveform-design experiment and write its CSV.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use cas_cli::{parse_config, run_experiment, write_csv, ExperimentSpec, Scenario};

#[derive(Parser)]
#[command(
    name = "cas-experiments",
    about = "Waveform-design tradeoff experiments for communication-assisted sensing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file (key = value lines); defaults are used without it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base RNG seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path; defaults to <scenario>.csv in the working directory.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Channel draws per SNR point, overriding the config file.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Distortion vs power split on an IID sensing channel, across comm SNRs.
    SwIid,
    /// Distortion vs power split on a general sensing covariance, across sensing SNRs.
    SwSweep,
    /// Weighted-MI dual design, coarse vs fine weight grids.
    DwHmi,
    /// Independent subchannels: weighted-MI sweep vs direct gradient projection.
    DwMgp,
    /// Separated vs dual vs idealized-dual designs over a wide SNR range.
    Compare,
    /// Two-subchannel instances certified against an exhaustive lattice search.
    Oracle2d,
    /// Winning MI weight across the SNR grid.
    TableAlpha,
}

impl Command {
    fn scenario(&self) -> Scenario {
        match self {
            Command::SwIid => Scenario::SwIid,
            Command::SwSweep => Scenario::SwSweep,
            Command::DwHmi => Scenario::DwHmi,
            Command::DwMgp => Scenario::DwMgp,
            Command::Compare => Scenario::DwCompare,
            Command::Oracle2d => Scenario::Oracle2d,
            Command::TableAlpha => Scenario::TableAlpha,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let scenario = cli.command.scenario();

    let mut spec = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let spec = parse_config(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            if spec.scenario != scenario {
                bail!(
                    "config selects scenario `{}` but the command line asked for `{}`",
                    spec.scenario.name(),
                    scenario.name()
                );
            }
            spec
        }
        None => ExperimentSpec::defaults(scenario),
    };
    if let Some(seed) = cli.seed {
        spec.config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        spec.trials = trials;
    }
    spec.validate()?;

    let rows = run_experiment(&spec)?;
    let out_path = cli
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", scenario.name())));
    let file = fs::File::create(&out_path)
        .with_context(|| format!("creating {}", out_path.display()))?;
    let mut writer = BufWriter::new(file);
    write_csv(&rows, &mut writer)?;
    writer.flush()?;
    println!("{} rows -> {}", rows.len(), out_path.display());
    Ok(())
}
