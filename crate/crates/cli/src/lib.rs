//! Command-line laboratory for traveling fronts of delayed nonlocal lattice
//! equations: configuration files, CSV/JSON artifacts and the `ldfront`
//! subcommands. The numerics live in `ldfront-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod selfcheck;
pub mod tabulated;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use crate::config::LoadedConfig;
use crate::config::{load_config, ExperimentConfig};
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "ldfront", version, about = "Traveling fronts of delayed nonlocal lattice equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Concurrent jobs for sweeps.
    #[arg(long, global = true, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,
    /// Progress on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Minimal speed, characteristic roots and decay rates.
    Analyze,
    /// Traveling-wave profile at one speed.
    Profile,
    /// Integrate the lattice equation from an initial history.
    Simulate,
    /// Perturb fronts and fit the decay of the perturbation.
    Stability,
    /// Lattice heat kernel and delayed exponentials.
    Green,
    /// Run the built-in sanity checks.
    Selfcheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Profile => "profile",
            Command::Simulate => "simulate",
            Command::Stability => "stability",
            Command::Green => "green",
            Command::Selfcheck => "selfcheck",
        }
    }
}

/// State shared by the steps of one invocation.
pub struct Context {
    pub cfg: LoadedConfig,
    pub out: OutputDir,
    pub jobs: usize,
    pub verbose: bool,
    timings: Vec<Timing>,
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    stage: String,
    seconds: f64,
}

impl Context {
    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg.config
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[ldfront] {}", msg.as_ref());
        }
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&Self) -> Result<T, CliError>) -> Result<T, CliError> {
        self.log(format!("{stage}..."));
        let start = Instant::now();
        let r = f(self);
        self.timings.push(Timing { stage: stage.to_string(), seconds: start.elapsed().as_secs_f64() });
        r
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    ldfront_version: &'a str,
    core_version: &'a str,
    config_path: String,
    /// The configuration after defaults were applied.
    config: &'a ExperimentConfig,
    jobs: usize,
    status: &'a str,
    error: Option<String>,
    timings: &'a [Timing],
    outputs: Vec<String>,
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.command == Command::Selfcheck {
        return selfcheck::run(cli.verbose);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("`{}` needs --config PATH", cli.command.name())))?;
    let cfg = load_config(path)?;
    let root = match (&cli.out, &cfg.config.output) {
        (Some(dir), _) | (None, Some(dir)) => dir.clone(),
        (None, None) => Path::new("ldfront-out").join(cli.command.name()),
    };
    let out = OutputDir::prepare(&root, cli.force)?;
    let mut ctx = Context { cfg, out, jobs: cli.jobs as usize, verbose: cli.verbose, timings: Vec::new() };
    let result = match cli.command {
        Command::Analyze => commands::analyze::run(&mut ctx),
        Command::Profile => commands::profile::run(&mut ctx),
        Command::Simulate => commands::simulate::run(&mut ctx),
        Command::Stability => commands::stability::run(&mut ctx),
        Command::Green => commands::green::run(&mut ctx),
        Command::Selfcheck => unreachable!(),
    };
    let (status, error) = match &result {
        Ok(_) => ("ok", None),
        Err(e) => ("failed", Some(e.to_string())),
    };
    if let Ok(summary) = &result {
        ctx.out.text("summary.txt", summary)?;
        print!("{summary}");
    }
    let meta = Metadata {
        command: cli.command.name(),
        ldfront_version: env!("CARGO_PKG_VERSION"),
        core_version: ldfront_core::VERSION,
        config_path: ctx.cfg.source.display().to_string(),
        config: &ctx.cfg.config,
        jobs: ctx.jobs,
        status,
        error,
        timings: &ctx.timings,
        outputs: list_files(ctx.out.path()),
    };
    ctx.out.json("metadata.json", &meta)?;
    result.map(|_| ())
}

/// Files below `root`, relative and sorted; `metadata.json` is left out.
fn list_files(root: &Path) -> Vec<String> {
    fn walk(dir: &Path, root: &Path, acc: &mut Vec<String>) {
        let Ok(entries) = fs::read_dir(dir) else { return };
        for entry in entries.flatten() {
            let p = entry.path();
            if p.is_dir() {
                walk(&p, root, acc);
            } else if let Ok(rel) = p.strip_prefix(root) {
                acc.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    let mut acc = Vec::new();
    walk(root, root, &mut acc);
    acc.retain(|f| f != "metadata.json");
    acc.sort();
    acc
}
