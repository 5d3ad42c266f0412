use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modular_issf::commands::{cmd_montecarlo, cmd_simulate, cmd_sweep, CommandOptions};
use modular_issf::config::parse_override;
use modular_issf::estimation::GainLaw;

#[derive(Parser)]
#[command(name = "issf-sim", version, about = "Adaptive CLF/ISSf-HOCBF closed-loop experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single closed-loop run; writes trajectory.csv
    Simulate(Common),
    /// Sampled batch per estimator law; writes summary_<law>.csv and runs_<law>.csv
    Montecarlo(Common),
    /// Initial-estimate sweep comparing laws; writes sweep.csv
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set estimator.law=gd
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory, created if missing
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Shorthand for --set sim.seed=N
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for --set sim.runs=N
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated estimator laws
    #[arg(long, value_delimiter = ',')]
    laws: Option<Vec<GainLaw>>,
    /// Exit with code 4 when a safety or ordering monitor fails
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Montecarlo(c) => ("montecarlo", c),
        Command::Sweep(c) => ("sweep", c),
    };
    let overrides = match common.set.iter().map(|s| parse_override(s)).collect() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = CommandOptions {
        config_path: common.config.clone(),
        overrides,
        out_dir: common.out.clone(),
        seed: common.seed,
        runs: common.runs,
        laws: common.laws.clone(),
        strict: common.strict,
    };
    let result = match name {
        "simulate" => cmd_simulate(&opts),
        "montecarlo" => cmd_montecarlo(&opts),
        _ => cmd_sweep(&opts),
    };
    match result {
        Ok(report) => {
            for p in &report.outputs {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
