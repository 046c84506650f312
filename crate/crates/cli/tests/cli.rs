use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use collabnet_cli::table::{parse_series, series_table, Table};
use collabnet_cli::Manifest;

const SCENARIO: &str = r#"
seed = 7
start_year = 1870
end_year = 1960
entrant_share = 0.5

[growth]
alpha = 1.2
scale = 3.0

[team_size]
kind = "categorical"
sizes = [1, 2, 3, 4]
weights = [0.2, 0.4, 0.3, 0.1]

[career]
weibull_k = 1.0
weibull_lambda = 10.0

[[shock]]
name = "war"
start = 1914
end = 1918
entry_multiplier = 0.6
recovery_ramp_years = 4
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_collabnet"));
    c.env_remove("COLLABNET_CACHE_DIR");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path) -> PathBuf {
    let scenario = dir.join("s.toml");
    fs::write(&scenario, SCENARIO).unwrap();
    let o = run(bin().args(["synth", "--scenario"]).arg(&scenario).arg("--out").arg(dir));
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("events.jsonl")
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn synth_then_report_writes_full_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let events = synth(tmp.path());
    assert!(tmp.path().join("ground_truth.json").exists());
    let out = tmp.path().join("out");
    let o = run(bin().args(["report", "--events"]).arg(&events).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let files = csv_files(&out);
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    for expected in [
        "epochs.csv",
        "event_series.csv",
        "fit_growth.csv",
        "fit_power_law.csv",
        "fit_skips.csv",
        "fit_weibull.csv",
        "new_fraction.csv",
        "node_series.csv",
        "single_year.csv",
        "team_size_fractions.csv",
        "team_size_stats.csv",
        "timescale_shocks.csv",
        "timescales.csv",
    ] {
        assert!(names.contains(&expected), "missing {expected} in {names:?}");
    }
    let manifest = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.outputs.len(), files.len());
    assert!(manifest.steps.iter().all(|s| s.status == "ok"));

    // every file has a header and re-emits byte for byte; year-keyed
    // tables also survive the series round trip
    for (name, bytes) in &files {
        let table = Table::parse(bytes).unwrap();
        assert!(!table.header.is_empty(), "{name}");
        assert_eq!(&table.to_csv(), bytes, "{name}");
        let wide = [
            "node_series.csv",
            "new_fraction.csv",
            "single_year.csv",
            "event_series.csv",
            "team_size_fractions.csv",
            "timescales.csv",
        ];
        if wide.contains(&name.as_str()) {
            let series = parse_series(&table).unwrap();
            let again = series_table(&series.iter().collect::<Vec<_>>()).to_csv();
            assert_eq!(&again, bytes, "{name}");
        }
    }
}

#[test]
fn rerun_and_thread_count_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let events = synth(tmp.path());
    let mut dirs = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let o = run(bin()
            .args(["--threads", threads, "report", "--events"])
            .arg(&events)
            .arg("--out")
            .arg(&out));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        dirs.push(out);
    }
    let reference = csv_files(&dirs[0]);
    for d in &dirs[1..] {
        assert_eq!(csv_files(d), reference);
        assert_eq!(
            fs::read(d.join("manifest.json")).unwrap(),
            fs::read(dirs[0].join("manifest.json")).unwrap()
        );
    }
    // second run in the same directory hits the cache
    let o = run(bin().args(["report", "--events"]).arg(&events).arg("--out").arg(&dirs[0]));
    assert!(stderr(&o).contains("cached"), "{}", stderr(&o));
    assert_eq!(csv_files(&dirs[0]), reference);
}

#[test]
fn manifest_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let events = synth(tmp.path());
    let a = tmp.path().join("a");
    let o = run(bin()
        .args(["report", "--tau-project", "1", "--min-fit-size", "30", "--events"])
        .arg(&events)
        .arg("--out")
        .arg(&a));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let b = tmp.path().join("b");
    let o = run(bin()
        .args(["--threads", "3", "report", "--manifest"])
        .arg(a.join("manifest.json"))
        .arg("--out")
        .arg(&b));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv_files(&a), csv_files(&b));
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());

    // a changed input is refused
    let mut text = fs::read_to_string(&events).unwrap();
    text.push_str("{\"project_id\":\"extra\",\"year\":1960,\"members\":[\"x\",\"y\"]}\n");
    fs::write(&events, text).unwrap();
    let o = run(bin()
        .args(["report", "--manifest"])
        .arg(a.join("manifest.json"))
        .arg("--out")
        .arg(tmp.path().join("c")));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("differs from the manifest"), "{}", stderr(&o));
}

#[test]
fn analysis_without_cache_asks_for_ingest() {
    let tmp = tempfile::tempdir().unwrap();
    let events = synth(tmp.path());
    let cache = tmp.path().join("shared-cache");
    let out = tmp.path().join("out");
    let series = |c: &mut Command| {
        run(c
            .env("COLLABNET_CACHE_DIR", &cache)
            .args(["series", "--events"])
            .arg(&events)
            .arg("--out")
            .arg(&out))
    };
    let o = series(&mut bin());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run `collabnet ingest`"), "{}", stderr(&o));

    let o = run(bin()
        .env("COLLABNET_CACHE_DIR", &cache)
        .args(["ingest", "--events"])
        .arg(&events)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(fs::read_dir(&cache).unwrap().next().is_some());
    assert!(!out.join("cache").exists());

    let o = series(&mut bin());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("node_series.csv").exists());

    // a different tau needs its own ingest
    let o = run(bin()
        .env("COLLABNET_CACHE_DIR", &cache)
        .args(["fit", "--tau-project", "3", "--events"])
        .arg(&events)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn epochs_default_windows_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let events = synth(tmp.path());
    let out = tmp.path().join("out");
    run(bin().args(["ingest", "--events"]).arg(&events).arg("--out").arg(&out));
    let o = run(bin().args(["epochs", "--events"]).arg(&events).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert!(m.epochs_source.starts_with("default"), "{}", m.epochs_source);
    assert!(m.epochs_source.contains("Belle Epoque 1890-1914"));
    let table = Table::parse(&fs::read(out.join("epochs.csv")).unwrap()).unwrap();
    // five series by five windows
    assert_eq!(table.rows.len(), 25);

    let epochs = tmp.path().join("epochs.csv");
    fs::write(&epochs, "name,start,end\nwar,1914,1918\n").unwrap();
    let o = run(bin()
        .args(["epochs", "--events"])
        .arg(&events)
        .arg("--epochs")
        .arg(&epochs)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert!(m.epochs_source.starts_with("file"));
    assert!(m.inputs.contains_key("epochs"));
    let table = Table::parse(&fs::read(out.join("epochs.csv")).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 5);
    let new_nodes = &table.rows[0];
    assert_eq!(new_nodes[0], "new_nodes");
    assert_eq!(new_nodes[4], "ok");
}

#[test]
fn malformed_input_is_fatal_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let events = tmp.path().join("e.csv");
    let mut body = String::from("project_id,year,members\n");
    for i in 0..50 {
        body.push_str(&format!("p{i},2000,a{i};b{i}\n"));
    }
    body.push_str("bad,notayear,a;b\n");
    fs::write(&events, &body).unwrap();
    let out = tmp.path().join("out");
    let o = run(bin().args(["ingest", "--events"]).arg(&events).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 52"), "{}", stderr(&o));

    let o = run(bin()
        .args(["ingest", "--max-malformed-pct", "5", "--events"])
        .arg(&events)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    let s = m.ingest.unwrap();
    assert_eq!((s.accepted, s.malformed), (50, 1));
    assert_eq!(s.errors[0].line, 52);

    let o = run(bin().args(["ingest", "--events"]).arg(tmp.path().join("missing.csv")));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn population_normalisation_and_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let events = synth(tmp.path());
    let pop = tmp.path().join("pop.csv");
    fs::write(&pop, "year,population\n1950,2.5e9\n1850,1.2e9\n").unwrap();
    let out = tmp.path().join("out");
    run(bin().args(["ingest", "--events"]).arg(&events).arg("--out").arg(&out));
    let o = run(bin()
        .args(["series", "--events"])
        .arg(&events)
        .arg("--population")
        .arg(&pop)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let per = parse_series(&Table::parse(&fs::read(out.join("per_capita.csv")).unwrap()).unwrap()).unwrap();
    let raw = parse_series(&Table::parse(&fs::read(out.join("node_series.csv")).unwrap()).unwrap()).unwrap();
    let new = raw.iter().find(|s| s.name == "new_nodes").unwrap();
    let new_pc = per.iter().find(|s| s.name == "new_nodes_per_capita").unwrap();
    assert_eq!(new_pc.last_year(), Some(1950));
    let v1900 = new.get(1900).unwrap();
    let expected = v1900 / (1.2e9 + 0.5 * 1.3e9);
    assert!((new_pc.get(1900).unwrap() / expected - 1.0).abs() < 1e-12);

    fs::write(&pop, "year,population\n2100,1e10\n2200,1.1e10\n").unwrap();
    let o = run(bin()
        .args(["series", "--events"])
        .arg(&events)
        .arg("--population")
        .arg(&pop)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.steps[0].status, "failed");
    assert!(out.join("node_series.csv").exists());
}

#[test]
fn csv_and_jsonl_inputs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("s.toml");
    fs::write(&scenario, SCENARIO).unwrap();
    for f in ["jsonl", "csv"] {
        let o = run(bin()
            .args(["synth", "--format", f, "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(tmp.path().join(f)));
        assert!(o.status.success(), "{}", stderr(&o));
        let o = run(bin()
            .args(["report", "--events"])
            .arg(tmp.path().join(f).join(format!("events.{f}")))
            .arg("--out")
            .arg(tmp.path().join(f).join("out")));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(
        csv_files(&tmp.path().join("jsonl/out")),
        csv_files(&tmp.path().join("csv/out"))
    );
}

#[test]
fn bad_scenario_lists_problems() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("s.toml");
    fs::write(&scenario, SCENARIO.replace("entrant_share = 0.5", "entrant_share = 1.5")).unwrap();
    let o = run(bin().args(["synth", "--scenario"]).arg(&scenario).arg("--out").arg(tmp.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("entrant_share"), "{}", stderr(&o));
    fs::write(&scenario, format!("{SCENARIO}\nunknown_key = 1\n")).unwrap();
    let o = run(bin().args(["synth", "--scenario"]).arg(&scenario).arg("--out").arg(tmp.path()));
    assert_eq!(o.status.code(), Some(1));
}
