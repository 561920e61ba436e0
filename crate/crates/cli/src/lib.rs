//! `erosion`: config-driven frontend for gap bounds, verification and
//! Monte Carlo experiments.
//!
//! Exit codes: 0 success or verified, 1 usage or config error, 2 unverified,
//! 3 falsified.

pub mod commands;
pub mod config;
pub mod output;
pub mod registry;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{Run, DEMOS};
use crate::config::LoadedConfig;
use crate::registry::Registry;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "erosion", version, about = "Set-erosion safety verification for stochastic systems")]
pub struct Cli {
    /// Experiment config (JSON). Required except for `demo`.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Overrides `trials` in the config.
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Per-step gap radii (sharp and worst case).
    Bound,
    /// Run the configured verifier; the exit code is the verdict.
    Verify,
    /// Monte Carlo failure frequency and gap statistics.
    Simulate,
    /// Closed-form failure threshold over the radius grid.
    Threshold,
    /// Run both built-in case studies end to end.
    Demo,
}

const LOG_LEVELS: [&str; 4] = ["error", "warn", "info", "debug"];

fn init_logging() {
    let level = std::env::var("EV_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    let known = LOG_LEVELS.contains(&level.to_ascii_lowercase().as_str());
    let _ = env_logger::Builder::new()
        .parse_filters(if known { &level } else { "warn" })
        .format_timestamp(None)
        .try_init();
    if !known {
        log::warn!("EV_LOG_LEVEL={level} is not one of {LOG_LEVELS:?}; using warn");
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(e.into()),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn out_root(cli: &Cli, loaded: &LoadedConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| loaded.config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(command: Command, run: &Run<'_>) -> anyhow::Result<i32> {
    match command {
        Command::Bound => run.bound(),
        Command::Verify => run.verify(),
        Command::Simulate => run.simulate(),
        Command::Threshold => run.threshold(),
        Command::Demo => unreachable!("demo is dispatched separately"),
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<i32> {
    let registry = Registry::builtin();
    if cli.command == Command::Demo {
        return demo(cli, &registry);
    }
    let Some(path) = &cli.config else {
        anyhow::bail!("--config PATH is required for this command");
    };
    let loaded = LoadedConfig::load(path)?.with_overrides(cli.seed, cli.trials)?;
    let run = Run::new(&loaded, out_root(cli, &loaded), &registry);
    execute(cli.command, &run)
}

/// Runs every built-in case study into `out/<name>/`. The exit code is the
/// largest one returned by any step.
fn demo(cli: &Cli, registry: &Registry) -> anyhow::Result<i32> {
    if cli.config.is_some() {
        log::warn!("demo uses built-in configs; --config is ignored");
    }
    let root = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut code = EXIT_OK;
    for (name, text, steps) in DEMOS {
        let loaded = LoadedConfig::parse(text, name)?.with_overrides(cli.seed, cli.trials)?;
        let dir = root.join(name);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("config.json"), text)?;
        let run = Run::new(&loaded, dir, registry);
        for step in *steps {
            println!("[{name}] {step}");
            let command = match *step {
                "bound" => Command::Bound,
                "verify" => Command::Verify,
                "simulate" => Command::Simulate,
                "threshold" => Command::Threshold,
                other => unreachable!("unknown demo step {other}"),
            };
            code = code.max(execute(command, &run)?);
        }
    }
    Ok(code)
}
