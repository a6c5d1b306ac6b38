//! CSV tables and run manifests.
//!
//! Every table starts with `#` comment lines carrying the code version, the
//! table schema and the manifest hash, followed by an RFC-4180 body. Numbers
//! use nine significant digits in scientific notation; non-finite values are
//! written as empty cells. The hash covers the code version, command,
//! canonical config and command parameters, and nothing that varies between
//! otherwise identical runs (timestamps, worker count, output paths).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{emit_config, RunConfig, CONFIG_VERSION};
use crate::error::{Error, Result};
use crate::phys::DerivedCouplings;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.8e}"),
            Cell::Num(_) | Cell::Empty => String::new(),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A named table with a fixed column schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// Schema identifier, bumped whenever columns change.
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, schema: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            schema,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Numeric column values, `NaN` for empty or text cells.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .into_iter()
                .map(|c| match c {
                    Cell::Num(x) => *x,
                    Cell::Int(n) => *n as f64,
                    _ => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W, manifest_hash: &str) -> Result<()> {
        writeln!(out, "# qndsq {CODE_VERSION} schema={}", self.schema)?;
        writeln!(out, "# manifest_hash={manifest_hash}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, manifest_hash: &str) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, manifest_hash).expect("write to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// The tables a command produced plus the parameters that shaped them.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub command: String,
    pub parameters: serde_json::Value,
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub code_version: &'static str,
    pub config_version: u32,
    pub command: String,
    pub parameters: serde_json::Value,
    pub config: RunConfig,
    pub config_text: String,
    pub couplings: DerivedCouplings,
    pub seed: u64,
    pub hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct HashInput<'a> {
    code_version: &'a str,
    command: &'a str,
    parameters: &'a serde_json::Value,
    config_text: &'a str,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn manifest_hash(command: &str, parameters: &serde_json::Value, cfg: &RunConfig) -> String {
    let config_text = emit_config(cfg);
    let input = HashInput {
        code_version: CODE_VERSION,
        command,
        parameters,
        config_text: &config_text,
    };
    let bytes = serde_json::to_vec(&input).expect("hash input serializes");
    format!("{:x}", Sha256::digest(&bytes))
}

impl RunManifest {
    pub fn new(bundle: &Bundle, cfg: &RunConfig, started_unix: u64) -> Self {
        Self {
            code_version: CODE_VERSION,
            config_version: CONFIG_VERSION,
            command: bundle.command.clone(),
            parameters: bundle.parameters.clone(),
            config: cfg.clone(),
            config_text: emit_config(cfg),
            couplings: cfg.physical.couplings(),
            seed: cfg.noise.seed,
            hash: manifest_hash(&bundle.command, &bundle.parameters, cfg),
            started_unix,
            finished_unix: started_unix,
            outputs: Vec::new(),
        }
    }
}

/// Write every table as `<dir>/<name>.csv` and the manifest as
/// `<dir>/<command>.manifest.json`.
pub fn write_bundle(dir: &Path, cfg: &RunConfig, bundle: &Bundle, started_unix: u64) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut manifest = RunManifest::new(bundle, cfg, started_unix);
    for table in &bundle.tables {
        let path = dir.join(format!("{}.csv", table.name));
        let file = std::io::BufWriter::new(fs::File::create(&path)?);
        table.write_csv(file, &manifest.hash)?;
        manifest.outputs.push(path);
    }
    manifest.finished_unix = unix_now();
    let path = dir.join(format!("{}.manifest.json", bundle.command));
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
    fs::write(path, json + "\n")?;
    Ok(manifest)
}

/// CSV body without the `#` header lines.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::{AtomSpecies, PhysicalConfig};
    use crate::rng::NoiseSpec;

    fn cfg() -> RunConfig {
        RunConfig {
            physical: PhysicalConfig::free_space(AtomSpecies::rb87(), 1e-10, 1e11, 1e6, 1e15, 1e-3),
            noise: NoiseSpec::default(),
        }
    }

    #[test]
    fn number_format_and_quoting() {
        let mut t = Table::new("t", "test/1", &["x", "n", "status"]);
        t.push(vec![1.0f64.into(), 3usize.into(), "ok".into()]);
        t.push(vec![Cell::Num(f64::NAN), Cell::Empty, "failed: a, b".into()]);
        t.push(vec![(-1.6487212707e-3).into(), 0usize.into(), "say \"hi\"".into()]);
        let s = t.to_csv_string("abc");
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# qndsq ") && lines[0].ends_with("schema=test/1"));
        assert_eq!(lines[1], "# manifest_hash=abc");
        assert_eq!(lines[2], "x,n,status");
        assert_eq!(lines[3], "1.00000000e0,3,ok");
        assert_eq!(lines[4], ",,\"failed: a, b\"");
        assert_eq!(lines[5], "-1.64872127e-3,0,\"say \"\"hi\"\"\"");
        assert_eq!(csv_body(&s).lines().count(), 4);
    }

    #[test]
    fn hash_ignores_volatile_fields() {
        let c = cfg();
        let p = serde_json::json!({"grid": [1.0, 2.0]});
        let h = manifest_hash("sweep", &p, &c);
        assert_eq!(h.len(), 64);
        assert_eq!(h, manifest_hash("sweep", &p, &c));
        let b = Bundle { command: "sweep".into(), parameters: p.clone(), tables: vec![] };
        assert_eq!(RunManifest::new(&b, &c, 1).hash, RunManifest::new(&b, &c, 99).hash);
        let mut c2 = c.clone();
        c2.noise.seed = 2;
        assert_ne!(h, manifest_hash("sweep", &p, &c2));
        assert_ne!(h, manifest_hash("tw", &p, &c));
        assert_ne!(h, manifest_hash("sweep", &serde_json::json!({"grid": [1.0]}), &c));
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn ragged_rows_rejected() {
        let mut t = Table::new("t", "test/1", &["a", "b"]);
        t.push(vec![1.0f64.into()]);
    }
}
