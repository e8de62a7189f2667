//! `fortsim`: run a simulated experiment and write its dataset and fit report.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{run, Kind};
use config::Config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Noise {
    On,
    Off,
}

/// Simulate two-site optical-tweezer qubit experiments.
///
/// Exit status: 0 on success, 2 on a config error, 3 when a fit did not
/// converge (its data are still written), 1 otherwise.
#[derive(Debug, Parser)]
#[command(name = "fortsim", version)]
struct Args {
    /// Experiment to run; `keys` lists the config keys.
    kind: Kind,
    /// Flat `key = value` config file, or any output file to rerun it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    noise: Option<Noise>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn resolve(args: &Args) -> Result<Config, config::ConfigError> {
    let mut cfg = Config::default();
    if let Some(path) = &args.config {
        cfg.load(path)?;
    }
    for pair in &args.set {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = args.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(noise) = args.noise {
        cfg.set("noise", if matches!(noise, Noise::On) { "on" } else { "off" })?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fortsim: config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(args.kind, &cfg, &args.out) {
        Ok(outcome) => {
            // a closed stdout pipe is not an error worth reporting
            let mut out = std::io::stdout().lock();
            let _ = write!(out, "{}", outcome.summary);
            for f in &outcome.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            for name in &outcome.unconverged {
                eprintln!("fortsim: {name}: fit did not converge");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            let kind = if e.exit_code() == 2 { "config error" } else { "error" };
            eprintln!("fortsim: {kind}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
