//! Command-line pipeline over the `collabnet` engine: streaming ingest into
//! a persisted aggregate cache, analysis steps rendered as CSV tables, and a
//! run manifest sufficient to reproduce every output byte.

pub mod cache;
pub mod config;
pub mod ingest;
pub mod scenario;
pub mod steps;
pub mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use collabnet::aggregate::Aggregates;
use collabnet::epoch::{default_epochs, BaselineKind, EpochDefinition};
use collabnet::Year;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::ingest::{Format, IngestOptions, IngestSummary};
use crate::steps::{Context, StepStatus};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(
        "no aggregate cache for {events} (key {key}); run `collabnet ingest` with the same --events, --tau-project and year range first"
    )]
    CacheMiss { events: String, key: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "collabnet", version, about = "Temporal collaboration-network analysis pipeline")]
pub struct Cli {
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the event file and build the aggregate cache.
    Ingest(IngestCmd),
    /// Node, event, team-size, single-year and per-capita series.
    Series(AnalysisCmd),
    /// Addition/removal timescales and their response to epochs.
    Timescales(AnalysisCmd),
    /// Yearly power-law and Weibull fits plus growth regimes.
    Fit(AnalysisCmd),
    /// Disruption, recovery and excess growth per epoch.
    Epochs(AnalysisCmd),
    /// Generate a synthetic event file from a scenario.
    Synth(SynthCmd),
    /// Ingest if needed and run every analysis step.
    Report(ReportCmd),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 2)]
    pub tau_project: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub year_min: Option<Year>,
    #[arg(long, allow_hyphen_values = true)]
    pub year_max: Option<Year>,
    /// Fatal when more than this percentage of records is malformed.
    #[arg(long, default_value_t = 1.0)]
    pub max_malformed_pct: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_baseline(s: &str) -> Result<BaselineKind, String> {
    match s {
        "log-linear" => Ok(BaselineKind::LogLinear),
        "mean" => Ok(BaselineKind::Mean),
        _ => Err(format!("unknown baseline `{s}` (log-linear or mean)")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// CSV with header `year,population`.
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// CSV with header `name,start,end`; five historical windows by default.
    #[arg(long)]
    pub epochs: Option<PathBuf>,
    /// Years at the end of the data without removal timescales.
    #[arg(long, default_value_t = collabnet::timescale::DEFAULT_CENSOR_WINDOW)]
    pub censor_window: u32,
    #[arg(long, default_value_t = collabnet::fit::MIN_FIT_SIZE)]
    pub min_fit_size: usize,
    /// Treat pairs still active at the end of the data as complete.
    #[arg(long)]
    pub no_censoring: bool,
    /// Fit gross pair spans instead of spans net of tau_project.
    #[arg(long)]
    pub gross_durations: bool,
    #[arg(long, default_value_t = 1)]
    pub xmin: u32,
    /// Choose xmin in 1..=N by minimum KS distance.
    #[arg(long)]
    pub xmin_scan_max: Option<u32>,
    #[arg(long, default_value = "log-linear", value_parser = parse_baseline)]
    pub baseline: BaselineKind,
    #[arg(long, default_value_t = collabnet::epoch::DEFAULT_BASELINE_WINDOW)]
    pub baseline_window: u32,
    #[arg(long, default_value_t = collabnet::epoch::DEFAULT_TOLERANCE_PCT)]
    pub tolerance_pct: f64,
    #[arg(long, default_value_t = collabnet::series::DEFAULT_SIZE_CAP)]
    pub size_cap: u32,
}

#[derive(Debug, Clone, Args)]
pub struct IngestCmd {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthCmd {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Synthesise `<out>/events.jsonl` from this scenario when --events is
    /// not given.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Re-run with the configuration recorded in an earlier manifest; all
    /// other analysis flags are ignored.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn run_config(input: &InputArgs, analysis: Option<&AnalysisArgs>) -> RunConfig {
    let mut c = RunConfig {
        events: input.events.clone(),
        format: input.format,
        tau_project: input.tau_project,
        year_min: input.year_min,
        year_max: input.year_max,
        max_malformed_pct: input.max_malformed_pct,
        ..RunConfig::default()
    };
    if let Some(a) = analysis {
        c.population = a.population.clone();
        c.epochs = a.epochs.clone();
        c.censor_window = a.censor_window;
        c.min_fit_size = a.min_fit_size;
        c.censoring = !a.no_censoring;
        c.net_of_tau = !a.gross_durations;
        c.xmin = a.xmin;
        c.xmin_scan_max = a.xmin_scan_max;
        c.baseline = a.baseline;
        c.baseline_window = a.baseline_window;
        c.tolerance_pct = a.tolerance_pct;
        c.size_cap = a.size_cap;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Contains no timestamps, thread
/// counts or cache state, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub cache_format: u32,
    pub command: String,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, InputRecord>,
    pub epochs_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestSummary>,
    pub steps: Vec<StepStatus>,
    /// File name to SHA-256.
    pub outputs: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.json";

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Outcome of a command: whether every step succeeded.
#[derive(Debug)]
pub struct Outcome {
    pub steps: Vec<StepStatus>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.steps.iter().all(StepStatus::ok) {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(outcome) => {
            for s in outcome.steps.iter().filter(|s| !s.ok()) {
                eprintln!("step {} failed: {}", s.name, s.problems.join("; "));
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))?;
    pool.install(|| execute(cli.command))
}

fn execute(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Ingest(c) => ingest_command(&c),
        Command::Series(c) => analysis_command("series", &c),
        Command::Timescales(c) => analysis_command("timescales", &c),
        Command::Fit(c) => analysis_command("fit", &c),
        Command::Epochs(c) => analysis_command("epochs", &c),
        Command::Synth(c) => synth_command(&c),
        Command::Report(c) => report_command(&c),
    }
}

struct Events {
    path: PathBuf,
    format: Format,
    sha256: String,
    cache_dir: PathBuf,
}

fn resolve_events(config: &RunConfig, out: &Path) -> Result<Events, CliError> {
    let path = config
        .events
        .clone()
        .ok_or_else(|| CliError::Input("--events is required".into()))?;
    if !path.is_file() {
        return Err(CliError::Input(format!("events file {} not found", path.display())));
    }
    let format = match config.format {
        Some(f) => f,
        None => Format::infer(&path)?,
    };
    let sha256 = cache::sha256_file(&path)?;
    let key = cache::cache_key(&sha256, format, config);
    Ok(Events {
        cache_dir: cache::cache_root(out).join(key),
        path,
        format,
        sha256,
    })
}

fn ingest_into_cache(config: &RunConfig, events: &Events) -> Result<(Aggregates, IngestSummary), CliError> {
    let opts = IngestOptions {
        format: events.format,
        tau_project: config.tau_project,
        year_min: config.year_min,
        year_max: config.year_max,
        max_malformed_pct: config.max_malformed_pct,
        shards: rayon::current_num_threads(),
    };
    let ingested = ingest::ingest_events(&events.path, &opts)?;
    cache::store(&events.cache_dir, &ingested)?;
    let s = &ingested.summary;
    eprintln!(
        "ingested {}: {} records, {} accepted, {} malformed, {} out of range, {} contributors",
        events.path.display(),
        s.records,
        s.accepted,
        s.malformed,
        s.out_of_range,
        s.contributors
    );
    if s.duplicate_members > 0 {
        eprintln!("warning: {} duplicate member entries dropped", s.duplicate_members);
    }
    Ok((ingested.aggregates, ingested.summary))
}

fn load_cached(events: &Events) -> Result<(Aggregates, IngestSummary), CliError> {
    cache::load(&events.cache_dir).ok_or_else(|| CliError::CacheMiss {
        events: events.path.display().to_string(),
        key: events
            .cache_dir
            .file_name()
            .map(|k| k.to_string_lossy().into_owned())
            .unwrap_or_default(),
    })
}

fn epochs_for(config: &RunConfig) -> Result<(Vec<EpochDefinition>, String), CliError> {
    match &config.epochs {
        Some(p) => Ok((ingest::parse_epochs(p)?, format!("file {}", p.display()))),
        None => {
            let epochs = default_epochs();
            let names: Vec<String> = epochs
                .iter()
                .map(|e| format!("{} {}-{}", e.name, e.start, e.end))
                .collect();
            Ok((epochs, format!("default: {}", names.join(", "))))
        }
    }
}

fn input_records(config: &RunConfig, events: &Events) -> Result<BTreeMap<String, InputRecord>, CliError> {
    let mut inputs = BTreeMap::new();
    inputs.insert(
        "events".to_string(),
        InputRecord {
            path: events.path.clone(),
            sha256: events.sha256.clone(),
        },
    );
    for (name, path) in [
        ("population", &config.population),
        ("epochs", &config.epochs),
        ("scenario", &config.scenario),
    ] {
        if let Some(p) = path {
            inputs.insert(
                name.to_string(),
                InputRecord {
                    path: p.clone(),
                    sha256: cache::sha256_file(p)?,
                },
            );
        }
    }
    Ok(inputs)
}

struct RunRecord<'a> {
    command: &'a str,
    config: &'a RunConfig,
    inputs: BTreeMap<String, InputRecord>,
    epochs_source: String,
    ingest: Option<IngestSummary>,
}

fn write_outputs(
    out: &Path,
    record: RunRecord<'_>,
    results: Vec<steps::StepResult>,
) -> Result<Outcome, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut outputs = BTreeMap::new();
    let mut statuses = Vec::new();
    for r in results {
        for o in &r.outputs {
            let path = out.join(&o.name);
            fs::write(&path, &o.bytes).map_err(|e| CliError::io(&path, e))?;
            outputs.insert(o.name.clone(), cache::sha256_bytes(&o.bytes));
        }
        statuses.push(r.status);
    }
    let manifest = Manifest {
        tool: "collabnet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        cache_format: cache::CACHE_FORMAT,
        command: record.command.into(),
        config: record.config.clone(),
        inputs: record.inputs,
        epochs_source: record.epochs_source,
        ingest: record.ingest,
        steps: statuses.clone(),
        outputs,
    };
    let path = out.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).expect("serialisable");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(Outcome { steps: statuses })
}

fn ingest_command(c: &IngestCmd) -> Result<Outcome, CliError> {
    let config = run_config(&c.input, None);
    let events = resolve_events(&config, &c.input.out)?;
    let (_, summary) = ingest_into_cache(&config, &events)?;
    eprintln!("cache written to {}", events.cache_dir.display());
    let record = RunRecord {
        command: "ingest",
        config: &config,
        inputs: input_records(&config, &events)?,
        epochs_source: String::new(),
        ingest: Some(summary),
    };
    let status = steps::StepResult {
        status: StepStatus {
            name: "ingest".into(),
            status: "ok".into(),
            problems: Vec::new(),
        },
        outputs: Vec::new(),
    };
    write_outputs(&c.input.out, record, vec![status])
}

fn analyse(
    command: &str,
    which: &[&str],
    config: &RunConfig,
    out: &Path,
    events: &Events,
    aggregates: Aggregates,
    summary: IngestSummary,
) -> Result<Outcome, CliError> {
    let population = config
        .population
        .as_deref()
        .map(ingest::parse_population)
        .transpose()?;
    let (epochs, epochs_source) = epochs_for(config)?;
    let ctx = Context {
        aggregates: &aggregates,
        config,
        population: population.as_ref(),
        epochs: &epochs,
    };
    let results = steps::run_steps(&ctx, which);
    let record = RunRecord {
        command,
        config,
        inputs: input_records(config, events)?,
        epochs_source,
        ingest: Some(summary),
    };
    write_outputs(out, record, results)
}

fn analysis_command(name: &str, c: &AnalysisCmd) -> Result<Outcome, CliError> {
    let config = run_config(&c.input, Some(&c.analysis));
    let events = resolve_events(&config, &c.input.out)?;
    let (aggregates, summary) = load_cached(&events)?;
    analyse(name, &[name], &config, &c.input.out, &events, aggregates, summary)
}

fn synth_command(c: &SynthCmd) -> Result<Outcome, CliError> {
    let scenario = scenario::load_scenario(&c.scenario, c.seed)?;
    fs::create_dir_all(&c.out).map_err(|e| CliError::io(&c.out, e))?;
    let path = c.out.join(format!("events.{}", c.format.extension()));
    let stats = scenario::write_synthetic(scenario, &path, c.format)?;
    eprintln!(
        "wrote {} events ({} closing) for {} contributors to {}",
        stats.events,
        stats.closing_events,
        stats.contributors,
        path.display()
    );
    Ok(Outcome { steps: Vec::new() })
}

const ALL_STEPS: [&str; 4] = ["series", "timescales", "fit", "epochs"];

fn report_command(c: &ReportCmd) -> Result<Outcome, CliError> {
    let out = &c.input.out;
    let (config, expected) = match &c.manifest {
        Some(m) => {
            let manifest = Manifest::read(m)?;
            (manifest.config, Some(manifest.inputs))
        }
        None => {
            let mut config = run_config(&c.input, Some(&c.analysis));
            config.scenario = c.scenario.clone();
            config.seed = c.seed;
            if config.events.is_none() {
                if let Some(s) = &config.scenario {
                    let format = config.format.unwrap_or(Format::Jsonl);
                    let path = out.join(format!("events.{}", format.extension()));
                    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
                    scenario::write_synthetic(scenario::load_scenario(s, c.seed)?, &path, format)?;
                    config.events = Some(path);
                }
            }
            (config, None)
        }
    };
    if let (Some(expected), Some(events), Some(s)) = (&expected, &config.events, &config.scenario) {
        // a reproduction may regenerate the synthetic input it recorded
        if !events.exists() && expected.contains_key("events") {
            let format = config.format.unwrap_or(Format::Jsonl);
            scenario::write_synthetic(scenario::load_scenario(s, config.seed)?, events, format)?;
        }
    }
    let events = resolve_events(&config, out)?;
    let inputs = input_records(&config, &events)?;
    if let Some(expected) = &expected {
        for (name, rec) in expected {
            match inputs.get(name) {
                Some(now) if now.sha256 == rec.sha256 => {}
                _ => {
                    return Err(CliError::Input(format!(
                        "input `{name}` ({}) differs from the manifest",
                        rec.path.display()
                    )))
                }
            }
        }
    }
    let (aggregates, summary) = match cache::load(&events.cache_dir) {
        Some(hit) => {
            eprintln!("using cached aggregates in {}", events.cache_dir.display());
            hit
        }
        None => ingest_into_cache(&config, &events)?,
    };
    analyse("report", &ALL_STEPS, &config, out, &events, aggregates, summary)
}
