//! CSV files with `# key = value` provenance lines ahead of the header row.

use std::io::Write;
use std::path::Path;

use crate::error::{DriverError, Result};

pub type Provenance = Vec<(String, String)>;

pub fn render(provenance: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, v) in provenance {
        // keep values on one line so the header stays parseable
        writeln!(out, "# {k} = {}", v.replace('\n', " ")).unwrap();
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r).unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

pub fn write(path: &Path, provenance: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    std::fs::write(path, render(provenance, header, rows)).map_err(|e| DriverError::io(path, e))
}

/// Provenance lines, header, and rows of a file written by [`write`].
pub struct CsvTable {
    pub provenance: Provenance,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn provenance_value(&self, key: &str) -> Option<&str> {
        self.provenance.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn read(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path).map_err(|e| DriverError::io(path, e))?;
    parse(&text).map_err(|source| DriverError::Csv { path: path.to_path_buf(), source })
}

pub fn parse(text: &str) -> std::result::Result<CsvTable, csv::Error> {
    let provenance = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(false).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(CsvTable { provenance, header, rows })
}

/// Shortest round-tripping decimal form.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
