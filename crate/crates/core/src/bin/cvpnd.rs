use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvpnd::pipeline::{execute, RunConfig, RunMode};

#[derive(Parser)]
#[command(version, about = "Photon-number conditioning from dual-homodyne data")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; output is identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory with outputs of an earlier stage.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Write the Gaussian dataset as CVQS files.
    Simulate,
    /// Weighted histograms from samples.
    Condition,
    /// Wigner functions from marginal CSVs.
    Reconstruct,
    /// Exact Fock-basis references.
    Oracle,
    /// Invariant checks at this configuration.
    Verify,
    /// The whole protocol in one pass.
    Run,
}

fn config(cli: &Cli) -> cvpnd::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for (i, kv) in cli.overrides.iter().enumerate() {
        let (k, v) = kv.split_once('=').ok_or_else(|| cvpnd::Error::Config {
            line: i + 1,
            reason: format!("--set expects KEY=VALUE, got `{kv}`"),
        })?;
        cfg.set(k.trim(), v.trim())
            .map_err(|reason| cvpnd::Error::Config {
                line: i + 1,
                reason,
            })?;
    }
    cfg.mode = match cli.verb {
        Verb::Simulate => RunMode::Simulate,
        Verb::Condition => RunMode::Condition,
        Verb::Reconstruct => RunMode::Reconstruct,
        Verb::Oracle => RunMode::Oracle,
        Verb::Verify => RunMode::Verify,
        Verb::Run => RunMode::Run,
    };
    if let Some(s) = cli.seed {
        cfg.params.rng_seed = s;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if cli.input.is_some() {
        cfg.input_dir = cli.input.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| execute(&cfg));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report.to_text());
            eprint!("{}", outcome.timing.to_text());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
