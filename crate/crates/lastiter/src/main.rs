use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lastiter::commands::{cmd_bound, cmd_plan, cmd_simulate, cmd_sweep, cmd_verify, Output};
use lastiter::config::RunConfig;
use lastiter::Result;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;

type Handler = fn(&RunConfig) -> Result<Output>;

#[derive(Parser)]
#[command(
    name = "lastiter",
    version,
    about = "Last-iterate Renyi-DP accounting for cyclic DP-SGD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file (a directory for `simulate`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's root seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Every bound regime, the best bound, the PABI line and DP conversions.
    Bound(Common),
    /// Noise calibration for targets.epsilon.
    Plan(Common),
    /// Coupled runs on the dataset and its neighbor.
    Simulate(Common),
    /// Property suites; exits 1 if any fails.
    Verify(Common),
    /// Cartesian sweep over the configured axes, as CSV.
    Sweep(Common),
}

fn write_output(out: &Output, target: Option<&Path>, as_dir: bool) -> Result<()> {
    match target {
        None => print!("{}", out.body),
        Some(dir) if as_dir => {
            std::fs::create_dir_all(dir)?;
            for (name, content) in &out.files {
                std::fs::write(dir.join(name), content)?;
            }
        }
        Some(path) => std::fs::write(path, &out.body)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let (common, f, as_dir): (&Common, Handler, bool) = match &cli.command {
        Command::Bound(c) => (c, cmd_bound, false),
        Command::Plan(c) => (c, cmd_plan, false),
        Command::Simulate(c) => (c, cmd_simulate, true),
        Command::Verify(c) => (c, cmd_verify, false),
        Command::Sweep(c) => (c, cmd_sweep, false),
    };
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = f(&cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    write_output(&out, common.out.as_deref(), as_dir)?;
    Ok(out.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
