use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ibrelay::commands;
use ibrelay::experiment::{ExperimentSpec, PARALLELISM_ENV};

#[derive(Parser)]
#[command(name = "ibrelay", version, about = "Oblivious relaying and noisy lossy coding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bottleneck curve IB(C) on the spec's C axis.
    IbCurve(Common),
    /// VIB, CVIB, Ṽ and C̃V on the spec's C and distortion axes.
    Dispersion(Common),
    /// Scheme guarantees per cell and second-order curves.
    Bounds(Common),
    /// Monte-Carlo noisy lossy coding.
    SimulateLossy(Common),
    /// Monte-Carlo relaying.
    SimulateRelay(Common),
    /// Any configured sweep, with plot.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the spec's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = PARALLELISM_ENV)]
    parallelism: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentSpec, ibrelay::Error> {
        let mut spec = ExperimentSpec::load(&self.spec)?;
        if let Some(s) = self.seed {
            spec.master_seed = s;
        }
        if self.parallelism.is_some() {
            spec.parallelism = self.parallelism;
        }
        Ok(spec)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::IbCurve(c)
        | Command::Dispersion(c)
        | Command::Bounds(c)
        | Command::SimulateLossy(c)
        | Command::SimulateRelay(c)
        | Command::Sweep(c) => c,
    };
    let spec = match common.load() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("spec error: {e}");
            return ExitCode::from(1);
        }
    };
    let out = &common.out;
    let result = match &cli.command {
        Command::IbCurve(_) => commands::ib_curve(&spec, out).map(|p| vec![p]),
        Command::Dispersion(_) => commands::dispersion(&spec, out).map(|p| vec![p]),
        Command::Bounds(_) => commands::bounds(&spec, out),
        Command::SimulateLossy(_) => commands::simulate(&spec, out, Some("noisy-vl")),
        Command::SimulateRelay(_) => commands::simulate(&spec, out, Some("relay")),
        Command::Sweep(_) => commands::simulate(&spec, out, None),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ ibrelay::Error::Config(_)) => {
            eprintln!("spec error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
