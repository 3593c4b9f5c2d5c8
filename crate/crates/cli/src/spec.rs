use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use num_complex::Complex64;
use qmeasure_core::{max_steps, Direction64, Event, ExperimentConfig64, QubitState64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Initial states within this distance of unit norm are renormalized with a warning.
const AUTO_NORMALIZE_SLACK: f64 = 1e-6;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_SEED: u64 = 1;

/// Above this many analyzers the default "every event" list is not built.
const MAX_N_FOR_ALL_EVENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Measure,
    Simulate,
    Synth,
    Interfere,
    Classify,
    Table,
    Verify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

/// An analyzer as written in a config: alias ("Z", "-Y"), `[θ, φ]` or `[x, y, z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnalyzerSpec {
    Alias(String),
    Angles([f64; 2]),
    Cartesian([f64; 3]),
}

/// The config file as written. Every field is optional; command-line flags
/// fill in or override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// `[[re, im], [re, im]]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyzers: Option<Vec<AnalyzerSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_events: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rows: Option<usize>,
}

impl RawSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
            CliError::Parse(format!("line {}, column {}: {msg}", e.line(), e.column()))
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config: ExperimentConfig64,
    pub events: Vec<Event>,
    pub mode: Mode,
    pub tolerance: f64,
    pub output: OutputFormat,
    pub seed: u64,
    pub max_rows: Option<usize>,
    pub warnings: Vec<String>,
}

fn semantic(msg: impl Into<String>) -> CliError {
    CliError::Semantic(msg.into())
}

fn analyzer(spec: &AnalyzerSpec) -> Result<Direction64, CliError> {
    Ok(match spec {
        AnalyzerSpec::Alias(name) => {
            Direction64::from_alias(name).ok_or_else(|| semantic(format!("unknown analyzer alias {name:?}")))?
        }
        AnalyzerSpec::Angles([theta, phi]) => Direction64::new(*theta, *phi)?,
        AnalyzerSpec::Cartesian([x, y, z]) => Direction64::from_cartesian(*x, *y, *z)?,
    })
}

fn preset_analyzers(name: &str, rng: &mut ChaCha8Rng) -> Result<(Vec<Direction64>, bool), CliError> {
    let random_walk = [Direction64::z(), Direction64::y(), Direction64::minus_z(), Direction64::minus_y()];
    match name {
        "paper-zx" => Ok((vec![Direction64::z(), Direction64::x()], false)),
        "random-walk-8" => Ok(((0..8).map(|i| random_walk[i % 4]).collect(), false)),
        _ => {
            let n = name
                .strip_prefix("random:")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| {
                    semantic(format!("unknown preset {name:?} (known: paper-zx, random-walk-8, random:N)"))
                })?;
            if n == 0 {
                return Err(semantic("random preset needs at least one analyzer"));
            }
            check_cap(n)?;
            Ok(((0..n).map(|_| qmeasure_core::histories::random_direction(rng)).collect(), true))
        }
    }
}

fn check_cap(n: usize) -> Result<(), CliError> {
    let cap = max_steps();
    if n > cap {
        return Err(CliError::Resource(format!(
            "{n} analyzers exceed the cap of {cap}; raise it with QMEASURE_MAX_N"
        )));
    }
    Ok(())
}

fn initial_state(raw: [[f64; 2]; 2], warnings: &mut Vec<String>) -> Result<QubitState64, CliError> {
    let psi = QubitState64::new(Complex64::new(raw[0][0], raw[0][1]), Complex64::new(raw[1][0], raw[1][1]));
    let off = (psi.norm_sqr() - 1.0).abs();
    if psi.is_normalized() {
        return Ok(psi);
    }
    if off < AUTO_NORMALIZE_SLACK {
        warnings.push(format!("initial state norm² off by {off:e}; renormalized"));
        return Ok(psi.normalized()?);
    }
    Err(semantic(format!("initial state is not normalized (|a0|²+|a1|² = {})", psi.norm_sqr())))
}

/// Parses `"00,10;01,11"`: events separated by `;`, chains by `,`. An empty
/// segment is the empty event.
pub fn parse_event_list(text: &str) -> Vec<Vec<String>> {
    text.split(';')
        .map(|ev| ev.split(',').map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect())
        .collect()
}

impl RunSpec {
    pub fn resolve(raw: RawSpec) -> Result<Self, CliError> {
        let seed = raw.seed.unwrap_or(DEFAULT_SEED);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut warnings = Vec::new();

        let (analyzers, random_preset) = match (&raw.preset, &raw.analyzers) {
            (Some(_), Some(_)) => return Err(semantic("give either a preset or an analyzer list, not both")),
            (Some(name), None) => preset_analyzers(name, &mut rng)?,
            (None, Some(list)) => (list.iter().map(analyzer).collect::<Result<Vec<_>, _>>()?, false),
            (None, None) => return Err(semantic("no analyzers: give a preset or an analyzer list")),
        };
        let n = analyzers.len();
        if n == 0 {
            return Err(semantic("at least one analyzer is required"));
        }
        check_cap(n)?;

        let initial = match raw.initial {
            Some(v) => initial_state(v, &mut warnings)?,
            None if random_preset => qmeasure_core::histories::random_qubit(&mut rng),
            None if raw.preset.is_some() => QubitState64::from_real(0.6, 0.8),
            None => return Err(semantic("initial state required when analyzers are listed explicitly")),
        };
        let config = ExperimentConfig64::new(initial, analyzers)?;

        let mode = raw.mode.unwrap_or(Mode::Measure);
        let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(semantic(format!("tolerance must be positive, got {tolerance}")));
        }

        let mut events = raw
            .events
            .unwrap_or_default()
            .iter()
            .map(|chains| Event::parse(n, chains))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(count) = raw.random_events {
            for _ in 0..count {
                if n > 24 {
                    return Err(CliError::Resource(format!("random events over {n} analyzers not supported")));
                }
                let k = rng.random_range(1..=1usize << n);
                events.push(Event::random(&mut rng, n, k)?);
            }
        }
        if events.is_empty() && !matches!(mode, Mode::Table) {
            if n > MAX_N_FOR_ALL_EVENTS {
                return Err(CliError::Resource(format!(
                    "{n} analyzers give 2^{} events; choose some with --events or --random-events",
                    1u64 << n
                )));
            }
            events = qmeasure_core::enumerate_all_events(n)?;
        }

        Ok(Self {
            config,
            events,
            mode,
            tolerance,
            output: raw.output.unwrap_or(OutputFormat::Text),
            seed,
            max_rows: raw.max_rows,
            warnings,
        })
    }

    pub fn steps(&self) -> usize {
        self.config.steps()
    }

    /// Fully explicit config that parses back to this run.
    pub fn echo(&self) -> RawSpec {
        let a = self.config.initial;
        RawSpec {
            preset: None,
            initial: Some([[a.a0.re, a.a0.im], [a.a1.re, a.a1.im]]),
            analyzers: Some(self.config.analyzers.iter().map(|d| AnalyzerSpec::Angles([d.theta(), d.phi()])).collect()),
            events: Some(self.events.iter().map(|e| e.iter().map(|c| c.to_string()).collect()).collect()),
            random_events: None,
            mode: Some(self.mode),
            tolerance: Some(self.tolerance),
            output: Some(self.output),
            seed: Some(self.seed),
            max_rows: self.max_rows,
        }
    }
}
