//! `qmeasure`: computes quantum measures of history events, simulates the
//! ancilla protocol that measures them, and cross-checks the two.

mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spec::{parse_event_list, Mode, OutputFormat, RawSpec, RunSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Semantic(String),
    #[error("{0}")]
    Resource(String),
    #[error(transparent)]
    Core(#[from] qmeasure_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse(_) => 2,
            Self::Semantic(_) => 3,
            Self::Resource(_) => 4,
            Self::Core(qmeasure_core::Error::Resource(_)) => 4,
            Self::Core(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qmeasure", version, about = "Quantum measures of Stern-Gerlach history events")]
struct Args {
    /// JSON run spec; flags below override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// paper-zx, random-walk-8 or random:N
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Residual threshold for simulate, synth and verify
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    #[arg(long)]
    seed: Option<u64>,
    /// Truncate the measure table to the largest N measures
    #[arg(long, value_name = "N")]
    max_rows: Option<usize>,
    /// Events as "00,10;01,11"
    #[arg(long, allow_hyphen_values = true)]
    events: Option<String>,
    /// Append N random non-empty events drawn from the seed
    #[arg(long, value_name = "N")]
    random_events: Option<usize>,
    /// Verify mode self-test: corrupt every reduced plan
    #[arg(long)]
    corrupt_test: bool,
}

fn build_spec(args: &Args) -> Result<RunSpec, CliError> {
    let mut raw = match &args.config {
        Some(path) => RawSpec::from_file(path)?,
        None => RawSpec::default(),
    };
    if let Some(p) = &args.preset {
        raw.preset = Some(p.clone());
        raw.analyzers = None;
    }
    if let Some(m) = args.mode {
        raw.mode = Some(m);
    }
    if let Some(t) = args.tolerance {
        raw.tolerance = Some(t);
    }
    if let Some(o) = args.output {
        raw.output = Some(o);
    }
    if let Some(s) = args.seed {
        raw.seed = Some(s);
    }
    if let Some(r) = args.max_rows {
        raw.max_rows = Some(r);
    }
    if let Some(ev) = &args.events {
        raw.events = Some(parse_event_list(ev));
    }
    if let Some(r) = args.random_events {
        raw.random_events = Some(r);
    }
    RunSpec::resolve(raw)
}

fn run(args: &Args) -> Result<Vec<String>, CliError> {
    let spec = build_spec(args)?;
    for w in &spec.warnings {
        eprintln!("warning: {w}");
    }
    let report = commands::run(&spec, args.corrupt_test)?;
    match spec.output {
        OutputFormat::Text => print!("{}", report.text),
        OutputFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"))
        }
    }
    if !report.passed && report.failures.is_empty() {
        return Ok(vec!["residuals at or above tolerance".into()]);
    }
    Ok(report.failures)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("verification failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
