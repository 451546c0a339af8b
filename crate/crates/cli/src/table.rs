//! CSV tables with a commented provenance header.

use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        // no "-0" in tables
        "0.0000000000000000e0".to_string()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header comments, then the header row and records. LF line endings.
    pub fn render(&self, command: &str, cfg: &RunConfig, extra: &[String]) -> Vec<u8> {
        let mut out = header(command, cfg);
        for line in extra {
            out.push_str(&format!("# {line}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out.into_bytes());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn header(command: &str, cfg: &RunConfig) -> String {
    let mut s = format!("# platform-eq {VERSION}\n# command: {command}\n# config_sha256: {}\n# config:\n", config_hash(cfg));
    for line in cfg.canonical().lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            s.push_str(&format!("#   {line}\n"));
        }
    }
    s
}
