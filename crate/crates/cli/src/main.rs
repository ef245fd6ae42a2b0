//! `flisr` command line: validate utility files and run fault scenarios.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flisr_core::config::{load_scenario, load_topology, validate_scenario, ConfigError};
use flisr_core::sim::{exit_code, run, SimConfig};

const CONFIG_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "flisr", version, about = "Agent-team FLISR simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fault scenario and write the event log.
    Run(RunArgs),
    /// Check a topology file and list every problem found.
    Validate {
        #[arg(long)]
        topology: PathBuf,
    },
}

#[derive(Parser)]
struct RunArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Message latency in ticks.
    #[arg(long, default_value_t = 1)]
    latency: u64,
    /// Overrides the scenario tick budget.
    #[arg(long)]
    max_ticks: Option<u64>,
    /// Event log destination; stdout when omitted.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    /// Writes the FLISR report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Text,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { topology } => validate(&topology),
        Command::Run(args) => run_scenario(&args),
    };
    ExitCode::from(code)
}

fn config_error(e: impl std::fmt::Display) -> u8 {
    eprintln!("{e}");
    CONFIG_ERROR
}

fn validate(topology: &Path) -> u8 {
    match load_topology(topology) {
        Ok(u) => {
            println!(
                "{}: ok ({} sources, {} switches, {} loads)",
                topology.display(),
                u.topology.sources().len(),
                u.topology.switches().len(),
                u.topology.loads().len()
            );
            0
        }
        Err(e) => config_error(e),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn run_scenario(args: &RunArgs) -> u8 {
    let utility = match load_topology(&args.topology) {
        Ok(u) => u,
        Err(e) => return config_error(e),
    };
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let issues = validate_scenario(&utility, &scenario);
    if !issues.is_empty() {
        return config_error(ConfigError::Invalid {
            path: args.scenario.display().to_string(),
            issues,
        });
    }
    let cfg = SimConfig {
        latency: args.latency,
        tick_budget: args.max_ticks,
        seed: args.seed,
        ..SimConfig::default()
    };
    let out = match run(&utility, &scenario, &cfg) {
        Ok(o) => o,
        Err(e) => return config_error(e),
    };
    let log = match args.format {
        Format::Jsonl => out.jsonl(),
        Format::Text => out.text(),
    };
    if let Err(e) = write_out(args.log.as_deref(), &log) {
        return config_error(format!("{}: {e}", args.log.as_deref().unwrap_or(Path::new("-")).display()));
    }
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&out.report).expect("report serializes");
        if let Err(e) = fs::write(path, json + "\n") {
            return config_error(format!("{}: {e}", path.display()));
        }
    }
    eprintln!("outcome {:?} after {} ticks ({:?})", out.report.outcome, out.ticks, out.status);
    for v in &out.violations {
        eprintln!("invariant violation at t={}: {} {}", v.t, v.kind, v.detail);
    }
    exit_code(&out) as u8
}
