//! CSV tables: header row, comma-separated, `\n` line ends, `.` decimals.

use std::collections::BTreeSet;

use collabnet::{Year, YearlySeries};

use crate::ingest::csv_writer;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    pub fn parse(bytes: &[u8]) -> Result<Table, String> {
        let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
        let header = reader
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            rows.push(rec.map_err(|e| e.to_string())?.iter().map(String::from).collect());
        }
        Ok(Table { header, rows })
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One `year` column plus one column per series; missing values are empty.
pub fn series_table(series: &[&YearlySeries]) -> Table {
    let mut header = vec!["year"];
    header.extend(series.iter().map(|s| s.name.as_str()));
    let mut table = Table::new(&header);
    let years: BTreeSet<Year> = series.iter().flat_map(|s| s.years()).collect();
    for y in years {
        let mut row = vec![y.to_string()];
        row.extend(series.iter().map(|s| opt_num(s.get(y))));
        table.push(row);
    }
    table
}

/// Inverse of [`series_table`].
pub fn parse_series(table: &Table) -> Result<Vec<YearlySeries>, String> {
    if table.header.first().map(String::as_str) != Some("year") {
        return Err("first column must be `year`".into());
    }
    let mut out: Vec<YearlySeries> = table.header[1..].iter().map(YearlySeries::new).collect();
    for (i, row) in table.rows.iter().enumerate() {
        let year: Year = row[0]
            .parse()
            .map_err(|_| format!("row {}: `{}` is not a year", i + 1, row[0]))?;
        for (s, cell) in out.iter_mut().zip(&row[1..]) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| format!("row {}: `{cell}` is not a number", i + 1))?;
            s.insert(year, v).map_err(|e| e.to_string())?;
        }
    }
    Ok(out)
}
