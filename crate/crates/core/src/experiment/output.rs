//! Versioned CSV tables, JSON documents and the provenance columns carried by
//! every output row.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::rng::RngStream;

pub const SCHEMA_LINE: &str = "# schema=v1";

/// `(seed, substream, config hash)` identifying the draws behind a row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub substream: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(stream: &RngStream, config_hash: &str) -> Self {
        Provenance { seed: stream.seed, substream: stream.substream, config_hash: config_hash.to_string() }
    }

    fn cells(&self) -> [String; 3] {
        [self.seed.to_string(), self.substream.to_string(), self.config_hash.clone()]
    }
}

/// Shortest round-trip decimal form; infinities print as `inf`.
pub fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// `columns` are the data columns; provenance columns are appended.
    pub fn new(columns: &[&str]) -> Self {
        let mut cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        cols.extend(["seed", "substream", "config_hash"].map(String::from));
        Table { columns: cols, rows: Vec::new() }
    }

    pub fn push(&mut self, mut cells: Vec<String>, provenance: &Provenance) {
        cells.extend(provenance.cells());
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> Result<String> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        let body = writer.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(format!("{SCHEMA_LINE}\r\n{}", String::from_utf8_lossy(&body)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Files produced by one run, kept in memory until written.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub files: Vec<Artifact>,
}

impl Artifacts {
    pub fn add_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.files.push(Artifact { name: name.to_string(), contents: table.render()? });
        Ok(())
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.files.push(Artifact { name: name.to_string(), contents: text });
        Ok(())
    }

    pub fn add_text(&mut self, name: &str, contents: String) {
        self.files.push(Artifact { name: name.to_string(), contents });
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|a| a.name == name).map(|a| a.contents.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for a in &self.files {
            fs::write(dir.join(&a.name), &a.contents)?;
        }
        Ok(())
    }
}

/// Reads back a table written by [`Table::render`]: the header and the rows,
/// with the schema comment skipped.
pub fn parse_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}
