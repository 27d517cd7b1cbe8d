//! `drlab`: batch runner for the invariant suites, rate sweeps and distinguishability runs.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::Config;
use output::Output;

#[derive(Parser)]
#[command(name = "drlab", version, about = "Doubly robust estimation and lower-bound construction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replications and trials.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run every invariant suite on the configured construction(s).
    Verify,
    /// Quantile-risk rate sweep: CSV, fitted slopes and a log-log plot.
    Rates,
    /// Likelihood-ratio distinguishability experiment.
    Distinguish,
    /// Build the configured family and dump its diagnostics.
    Adversary,
    /// Merge result CSVs in the output directory into a summary.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Rates => "rates",
            Command::Distinguish => "distinguish",
            Command::Adversary => "adversary",
            Command::Report => "report",
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let name = cli.command.name();
    if let Command::Report = cli.command {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        let (hash, seed) = match &cli.config {
            Some(p) => {
                let c = Config::load(p, cli.seed)?;
                (c.hash, c.seed)
            }
            None => ("none".to_string(), cli.seed.unwrap_or(0)),
        };
        let mut out = Output::new(&dir, &hash, seed, name)?;
        return finish(commands::report(&mut out), &mut out);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config(format!("`{name}` needs --config <path>")))?;
    let cfg = Config::load(path, cli.seed)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.raw.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Output::new(&dir, &cfg.hash, cfg.seed, name)?;
    let result = match cli.command {
        Command::Verify => commands::verify(&cfg, &mut out),
        Command::Rates => commands::rates(&cfg, &mut out),
        Command::Distinguish => commands::distinguish(&cfg, &mut out),
        Command::Adversary => commands::adversary(&cfg, &mut out),
        Command::Report => unreachable!(),
    };
    finish(result, &mut out)
}

fn finish(result: Result<(), Failure>, out: &mut Output) -> Result<(), Failure> {
    match result {
        Ok(()) => {
            for f in out.files() {
                println!("{}", f.display());
            }
            Ok(())
        }
        // Invariant failures keep their table; anything else leaves no partial output.
        Err(Failure::Invariant(m)) => Err(Failure::Invariant(m)),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
