//! Tables and reports. Floats are written shortest-round-trip, so repeated
//! runs produce byte-identical files.

use serde::Serialize;

/// Shortest string that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    hash: String,
}

impl Table {
    /// A table whose last column is the config hash.
    pub fn new(columns: &[&str], hash: &str) -> Self {
        let mut header: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
        header.push("config_hash".into());
        Table {
            header,
            rows: Vec::new(),
            hash: hash.to_string(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        let mut cells = cells;
        cells.push(self.hash.clone());
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 table")
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// A named output file.
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: &str, contents: String) -> Self {
        Artifact {
            name: name.to_string(),
            contents,
        }
    }
}
