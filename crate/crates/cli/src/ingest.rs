//! Streaming readers for event, population and epoch files.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use collabnet::aggregate::Aggregates;
use collabnet::epoch::EpochDefinition;
use collabnet::series::{EventAggregator, PopulationTable};
use collabnet::{ContributorId, GraphBuilder, GraphConfig, GraphError, ProjectEvent, Year};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    pub fn infer(path: &Path) -> Result<Format, CliError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => Ok(Format::Jsonl),
            Some("csv") => Ok(Format::Csv),
            _ => Err(CliError::Input(format!(
                "cannot infer the format of {}; pass --format jsonl or --format csv",
                path.display()
            ))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        }
    }
}

/// Bijection between source contributor keys and dense ids, in order of
/// first appearance.
#[derive(Debug, Default)]
pub struct Dictionary {
    ids: HashMap<String, u32>,
    keys: Vec<String>,
}

impl Dictionary {
    pub fn id(&mut self, key: &str) -> ContributorId {
        if let Some(&id) = self.ids.get(key) {
            return ContributorId(id);
        }
        let id = u32::try_from(self.keys.len()).expect("more than 2^32 contributors");
        self.ids.insert(key.to_string(), id);
        self.keys.push(key.to_string());
        ContributorId(id)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, id: ContributorId) -> Option<&str> {
        self.keys.get(id.index()).map(String::as_str)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["id", "key"])?;
        for (i, k) in self.keys.iter().enumerate() {
            w.write_record([i.to_string().as_str(), k.as_str()])?;
        }
        w.flush()
    }
}

pub(crate) fn csv_writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    pub line: u64,
    pub message: String,
}

const KEPT_ERRORS: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records: u64,
    pub accepted: u64,
    pub malformed: u64,
    pub out_of_range: u64,
    pub single_member: u64,
    /// Member entries dropped as repeats within their project.
    pub duplicate_members: u64,
    pub contributors: u64,
    /// The first few malformed records.
    pub errors: Vec<RecordError>,
}

impl IngestSummary {
    fn reject(&mut self, line: u64, message: impl Into<String>) {
        self.malformed += 1;
        if self.errors.len() < KEPT_ERRORS {
            self.errors.push(RecordError {
                line,
                message: message.into(),
            });
        }
    }

    fn check_threshold(&self, max_pct: f64) -> Result<(), CliError> {
        if self.records == 0 || self.malformed as f64 * 100.0 <= max_pct * self.records as f64 {
            return Ok(());
        }
        let listed: Vec<String> = self
            .errors
            .iter()
            .map(|e| format!("line {}: {}", e.line, e.message))
            .collect();
        Err(CliError::Input(format!(
            "{} of {} records malformed ({:.2}%), above the {}% limit; first errors:\n  {}",
            self.malformed,
            self.records,
            100.0 * self.malformed as f64 / self.records as f64,
            max_pct,
            listed.join("\n  ")
        )))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Key {
    Str(String),
    Int(i64),
}

impl Key {
    fn into_string(self) -> String {
        match self {
            Key::Str(s) => s,
            Key::Int(i) => i.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct RawEvent {
    project_id: Key,
    year: i64,
    members: Vec<Key>,
}

/// One syntactically valid record before id remapping.
struct Record {
    line: u64,
    project_id: String,
    year: i64,
    members: Vec<String>,
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

/// Calls `on_record` for every line-level record, `Err(message)` for
/// malformed ones.
fn read_jsonl(
    path: &Path,
    mut on_record: impl FnMut(u64, Result<Record, String>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut reader = BufReader::with_capacity(1 << 16, open(path)?);
    let mut buf = Vec::new();
    let mut line = 0u64;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            return Ok(());
        }
        line += 1;
        let text = match std::str::from_utf8(&buf) {
            Ok(t) => t.trim(),
            Err(_) => {
                on_record(line, Err("invalid UTF-8".into()))?;
                continue;
            }
        };
        if text.is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawEvent>(text)
            .map(|raw| Record {
                line,
                project_id: raw.project_id.into_string(),
                year: raw.year,
                members: raw.members.into_iter().map(Key::into_string).collect(),
            })
            .map_err(|e| e.to_string());
        on_record(line, parsed)?;
    }
}

const CSV_HEADER: [&str; 3] = ["project_id", "year", "members"];

fn read_csv(
    path: &Path,
    mut on_record: impl FnMut(u64, Result<Record, String>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::with_capacity(1 << 16, open(path)?));
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: unreadable header: {e}", path.display())))?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(CliError::Input(format!(
            "{}: malformed header `{}`, expected `{}`",
            path.display(),
            header.iter().collect::<Vec<_>>().join(","),
            CSV_HEADER.join(",")
        )));
    }
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => return Ok(()),
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                if record.len() == 1 && record[0].is_empty() {
                    continue;
                }
                if record.len() != 3 {
                    on_record(line, Err(format!("expected 3 fields, found {}", record.len())))?;
                    continue;
                }
                let parsed = record[1]
                    .parse::<i64>()
                    .map(|year| Record {
                        line,
                        project_id: record[0].to_string(),
                        year,
                        members: record[2]
                            .split(';')
                            .map(str::trim)
                            .filter(|m| !m.is_empty())
                            .map(String::from)
                            .collect(),
                    })
                    .map_err(|_| format!("year `{}` is not an integer", &record[1]));
                on_record(line, parsed)?;
            }
            Err(e) => {
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(CliError::Input(format!("{}: {e}", path.display())));
                }
                let line = e.position().map_or(0, |p| p.line());
                on_record(line, Err(e.to_string()))?;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub format: Format,
    pub tau_project: u32,
    pub year_min: Option<Year>,
    pub year_max: Option<Year>,
    pub max_malformed_pct: f64,
    /// Partitions accumulated in parallel per batch.
    pub shards: usize,
}

const BATCH: usize = 1 << 16;

pub struct Ingested {
    pub aggregates: Aggregates,
    pub summary: IngestSummary,
    pub dictionary: Dictionary,
}

/// Streams `path` into the graph builder in fixed-size batches. Memory is
/// bounded by the graph and dictionary, not by the file.
pub fn ingest_events(path: &Path, opts: &IngestOptions) -> Result<Ingested, CliError> {
    let mut builder = GraphBuilder::new(GraphConfig::with_tau(opts.tau_project));
    let mut events = EventAggregator::new();
    let mut dictionary = Dictionary::default();
    let mut summary = IngestSummary::default();
    let mut batch: Vec<ProjectEvent> = Vec::with_capacity(BATCH);

    let flush = |batch: &mut Vec<ProjectEvent>, builder: &mut GraphBuilder| {
        let r = builder.extend_sharded(batch, opts.shards);
        batch.clear();
        r.map_err(|e| match e {
            GraphError::DuplicateProject(id) => {
                CliError::Input(format!("duplicate project id `{id}`"))
            }
            other => CliError::Input(other.to_string()),
        })
    };

    let mut on_record = |line: u64, rec: Result<Record, String>| -> Result<(), CliError> {
        summary.records += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(msg) => {
                summary.reject(line, msg);
                return Ok(());
            }
        };
        if rec.project_id.is_empty() {
            summary.reject(rec.line, "empty project_id");
            return Ok(());
        }
        if rec.members.is_empty() {
            summary.reject(rec.line, format!("project `{}` has no members", rec.project_id));
            return Ok(());
        }
        let Ok(year) = Year::try_from(rec.year) else {
            summary.reject(rec.line, format!("year {} out of bounds", rec.year));
            return Ok(());
        };
        if opts.year_min.is_some_and(|lo| year < lo) || opts.year_max.is_some_and(|hi| year > hi) {
            summary.out_of_range += 1;
            return Ok(());
        }
        let members = rec.members.iter().map(|m| dictionary.id(m)).collect();
        let (event, dropped) = ProjectEvent::with_dedup_count(rec.project_id, year, members)
            .expect("members checked non-empty");
        summary.duplicate_members += dropped as u64;
        summary.accepted += 1;
        if event.size() < 2 {
            summary.single_member += 1;
        }
        events.add(&event);
        batch.push(event);
        if batch.len() == BATCH {
            flush(&mut batch, &mut builder)?;
        }
        Ok(())
    };
    match opts.format {
        Format::Jsonl => read_jsonl(path, &mut on_record)?,
        Format::Csv => read_csv(path, &mut on_record)?,
    }
    flush(&mut batch, &mut builder)?;
    summary.check_threshold(opts.max_malformed_pct)?;
    summary.contributors = dictionary.len() as u64;
    let graph = builder.finish();
    Ok(Ingested {
        aggregates: Aggregates::from_graph(&graph, events),
        summary,
        dictionary,
    })
}

/// Parses a `year,population` CSV. Rows may come in any order.
pub fn parse_population(path: &Path) -> Result<PopulationTable, CliError> {
    let rows = read_small_csv(path, &["year", "population"])?;
    let mut anchors = BTreeMap::new();
    for (line, row) in rows {
        let bad = || CliError::Input(format!("{}:{line}: expected integer year and numeric population", path.display()));
        let year: Year = row[0].parse().map_err(|_| bad())?;
        let pop: f64 = row[1].parse().map_err(|_| bad())?;
        if anchors.insert(year, pop).is_some() {
            return Err(CliError::Input(format!(
                "{}:{line}: duplicate year {year}",
                path.display()
            )));
        }
    }
    PopulationTable::new(anchors).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses a `name,start,end` CSV of epoch windows.
pub fn parse_epochs(path: &Path) -> Result<Vec<EpochDefinition>, CliError> {
    let rows = read_small_csv(path, &["name", "start", "end"])?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let year = |s: &str| {
            s.parse::<Year>().map_err(|_| {
                CliError::Input(format!("{}:{line}: `{s}` is not an integer year", path.display()))
            })
        };
        let epoch = EpochDefinition::new(row[0].clone(), year(&row[1])?, year(&row[2])?)
            .map_err(|e| CliError::Input(format!("{}:{line}: {e}", path.display())))?;
        out.push(epoch);
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no epochs", path.display())));
    }
    Ok(out)
}

fn read_small_csv(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .iter()
        .map(String::from)
        .collect();
    if found != header {
        return Err(CliError::Input(format!(
            "{}: malformed header `{}`, expected `{}`",
            path.display(),
            found.join(","),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(String::from).collect()));
    }
    Ok(rows)
}
