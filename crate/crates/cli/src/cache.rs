//! Aggregate cache written by `ingest`, keyed by a content hash of the
//! event file, the graph parameters and the code version.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use collabnet::aggregate::Aggregates;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::ingest::{Format, IngestSummary, Ingested};
use crate::CliError;

pub const CACHE_FORMAT: u32 = 1;
pub const CACHE_DIR_ENV: &str = "COLLABNET_CACHE_DIR";

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// `$COLLABNET_CACHE_DIR`, else `<out>/cache`.
pub fn cache_root(out: &Path) -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => out.join("cache"),
    }
}

pub fn cache_key(events_sha256: &str, format: Format, config: &RunConfig) -> String {
    let text = format!(
        "collabnet-cache {CACHE_FORMAT}\nversion {}\nevents {events_sha256}\nformat {}\ntau {}\nyear_min {:?}\nyear_max {:?}\n",
        env!("CARGO_PKG_VERSION"),
        format.extension(),
        config.tau_project,
        config.year_min,
        config.year_max,
    );
    sha256_bytes(text.as_bytes())
}

#[derive(Deserialize)]
struct Entry {
    summary: IngestSummary,
    aggregates: Aggregates,
}

#[derive(Serialize)]
struct EntryRef<'a> {
    summary: &'a IngestSummary,
    aggregates: &'a Aggregates,
}

const AGGREGATES: &str = "aggregates.json";
const DICTIONARY: &str = "dictionary.csv";

pub fn load(dir: &Path) -> Option<(Aggregates, IngestSummary)> {
    let f = fs::File::open(dir.join(AGGREGATES)).ok()?;
    let entry: Entry = serde_json::from_reader(BufReader::new(f)).ok()?;
    Some((entry.aggregates, entry.summary))
}

fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    let f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    let mut w = BufWriter::new(f);
    write(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn store(dir: &Path, ingested: &Ingested) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_atomic(&dir.join(DICTIONARY), |w| ingested.dictionary.write_csv(w))?;
    let entry = EntryRef {
        summary: &ingested.summary,
        aggregates: &ingested.aggregates,
    };
    write_atomic(&dir.join(AGGREGATES), |w| {
        serde_json::to_writer(w, &entry).map_err(std::io::Error::other)
    })
}
