//! Manifest hashing, versioned JSON envelopes and CSV files.

use foldreg::config::SCHEMA_VERSION;
use foldreg::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Version of the CSV layout announced in the header comment.
pub const CSV_VERSION: u32 = 1;

/// Hash of a run description: named byte strings, length-prefixed.
#[derive(Default)]
pub struct ManifestHash(Sha256);

impl ManifestHash {
    pub fn new(command: &str) -> Self {
        let mut h = ManifestHash(Sha256::new());
        h.part("command", command.as_bytes());
        h
    }

    pub fn part(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        for chunk in [name.as_bytes(), bytes] {
            self.0.update((chunk.len() as u64).to_le_bytes());
            self.0.update(chunk);
        }
        self
    }

    pub fn json(&mut self, name: &str, v: &impl Serialize) -> &mut Self {
        let s = serde_json::to_vec(v).expect("arguments serialize");
        self.part(name, &s)
    }

    pub fn finish(&self) -> String {
        format!("{:x}", self.0.clone().finalize())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn envelope(command: &str, hash: &str, result: &impl Serialize) -> Result<Value> {
    let result = serde_json::to_value(result).map_err(|e| Error::Numerical(format!("serializing result: {e}")))?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "manifest_sha256": hash,
        "result": result,
    }))
}

/// Pretty JSON to `path`, or to stdout.
pub fn write_json(path: Option<&Path>, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Input(format!("stdout: {e}"))),
    }
}

/// A table written with a `# foldreg-csv v1 ...` comment line before the header.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, command: &str, hash: &str) -> Result<()> {
        let err = |e: &dyn std::fmt::Display| Error::Input(format!("{}: {e}", path.display()));
        let mut f = fs::File::create(path).map_err(|e| err(&e))?;
        writeln!(
            f,
            "# foldreg-csv v{CSV_VERSION} command={command} manifest_sha256={hash} columns={}",
            self.columns.join(",")
        )
        .map_err(|e| err(&e))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(&self.columns).map_err(|e| err(&e))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }
}
