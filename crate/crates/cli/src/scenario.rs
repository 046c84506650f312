//! Scenario files (TOML) and synthetic event output.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use collabnet::synth::{EventGenerator, GenerationStats, GroundTruth, ScenarioConfig};
use collabnet::ProjectEvent;
use serde::Serialize;

use crate::ingest::{csv_writer, Format};
use crate::CliError;

pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut config: ScenarioConfig = toml::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(config)
}

pub fn member_key(id: collabnet::ContributorId) -> String {
    format!("c{}", id.0)
}

#[derive(Serialize)]
struct JsonEvent<'a> {
    project_id: &'a str,
    year: i32,
    members: Vec<String>,
}

fn write_event(w: &mut dyn Write, format: Format, e: &ProjectEvent) -> std::io::Result<()> {
    let members: Vec<String> = e.members().iter().map(|&m| member_key(m)).collect();
    match format {
        Format::Jsonl => {
            serde_json::to_writer(
                &mut *w,
                &JsonEvent {
                    project_id: &e.project_id,
                    year: e.year,
                    members,
                },
            )?;
            w.write_all(b"\n")
        }
        Format::Csv => {
            let mut c = csv_writer(&mut *w);
            c.write_record([e.project_id.as_str(), &e.year.to_string(), &members.join(";")])?;
            c.flush()
        }
    }
}

#[derive(Serialize)]
struct TruthFile<'a> {
    truth: &'a GroundTruth,
    stats: GenerationStats,
}

/// Streams the scenario to `events_path` year by year and writes the
/// planted parameters next to it as `ground_truth.json`.
pub fn write_synthetic(
    config: ScenarioConfig,
    events_path: &Path,
    format: Format,
) -> Result<GenerationStats, CliError> {
    let mut generator = EventGenerator::new(config).map_err(|e| CliError::Input(e.to_string()))?;
    let f = fs::File::create(events_path).map_err(|e| CliError::io(events_path, e))?;
    let mut w = BufWriter::with_capacity(1 << 16, f);
    let io = |e| CliError::io(events_path, e);
    if format == Format::Csv {
        w.write_all(b"project_id,year,members\n").map_err(io)?;
    }
    while let Some((_, events)) = generator.next_year() {
        for e in &events {
            write_event(&mut w, format, e).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;
    let stats = generator.stats();
    let truth_path = events_path.with_file_name("ground_truth.json");
    let truth = TruthFile {
        truth: &generator.truth(),
        stats,
    };
    let mut text = serde_json::to_string_pretty(&truth).expect("serialisable");
    text.push('\n');
    fs::write(&truth_path, text).map_err(|e| CliError::io(&truth_path, e))?;
    Ok(stats)
}
