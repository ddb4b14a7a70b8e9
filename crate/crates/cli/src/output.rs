//! Result files and their metadata sidecar.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::ser::{SerializeMap, Serializer};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format};
use crate::sweep::{Row, Status};

/// Significant digits written for every number.
pub const SIG_DIGITS: usize = 12;

/// Columns after the swept parameters, in file order.
pub const VALUE_COLUMNS: [&str; 8] = ["t", "mean", "variance", "sigma", "q", "q_q", "n", "status"];

/// `x` rounded to [`SIG_DIGITS`] significant digits, in exponent form.
pub fn format_number(x: f64) -> String {
    format!("{:.*e}", SIG_DIGITS - 1, x)
}

fn rounded(x: f64) -> f64 {
    format_number(x).parse().expect("formatted float parses")
}

pub fn header(cfg: &ExperimentConfig) -> Vec<String> {
    cfg.axis_names()
        .into_iter()
        .chain(VALUE_COLUMNS)
        .map(str::to_owned)
        .collect()
}

fn values(row: &Row) -> [Option<f64>; 7] {
    [row.t, row.mean, row.variance, row.sigma, row.q, row.q_q, row.n]
}

/// Writes rows as CSV. Inapplicable or failed fields are empty.
pub fn write_csv<W: Write>(out: W, cfg: &ExperimentConfig, rows: &[Row]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(cfg))?;
    for row in rows {
        let mut rec: Vec<String> = row.point.iter().map(|&x| format_number(x)).collect();
        let ok = row.status == Status::Ok;
        for v in values(row).iter().enumerate().map(|(i, v)| if ok || i == 0 { *v } else { None }) {
            rec.push(v.map(format_number).unwrap_or_default());
        }
        rec.push(row.status.as_str().to_owned());
        w.write_record(&rec)?;
    }
    w.flush()
}

struct JsonRow<'a> {
    names: &'a [&'a str],
    row: &'a Row,
}

impl serde::Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        for (name, &v) in self.names.iter().zip(&self.row.point) {
            m.serialize_entry(name, &rounded(v))?;
        }
        let ok = self.row.status == Status::Ok;
        for (i, (name, v)) in VALUE_COLUMNS.iter().zip(values(self.row)).enumerate() {
            if let Some(v) = v.filter(|_| ok || i == 0) {
                m.serialize_entry(name, &rounded(v))?;
            }
        }
        m.serialize_entry("status", self.row.status.as_str())?;
        if let Some(msg) = &self.row.message {
            m.serialize_entry("message", msg)?;
        }
        m.end()
    }
}

/// Writes rows as a JSON array of objects; absent fields are omitted.
pub fn write_json<W: Write>(mut out: W, cfg: &ExperimentConfig, rows: &[Row]) -> io::Result<()> {
    let names = cfg.axis_names();
    let items: Vec<JsonRow> = rows.iter().map(|row| JsonRow { names: &names, row }).collect();
    serde_json::to_writer_pretty(&mut out, &items)?;
    writeln!(out)
}

pub fn write_results(path: &Path, cfg: &ExperimentConfig, rows: &[Row]) -> io::Result<()> {
    let f = BufWriter::new(File::create(path)?);
    match cfg.output.format {
        Format::Csv => write_csv(f, cfg, rows),
        Format::Json => write_json(f, cfg, rows),
    }
}

/// Path of the metadata file next to `results`.
pub fn sidecar_path(results: &Path) -> PathBuf {
    let mut s = results.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn config_hash(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Run metadata written next to the results.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Metadata {
    pub code_version: &'static str,
    pub config_sha256: String,
    pub mode: &'static str,
    pub rows: usize,
    pub failed_rows: usize,
    pub threads: usize,
    pub wall_time_s: f64,
    /// Seconds since the Unix epoch at completion.
    pub timestamp: u64,
}

impl Metadata {
    pub fn new(config_text: &str, cfg: &ExperimentConfig, rows: &[Row], threads: usize, wall: Duration) -> Self {
        Metadata {
            code_version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_hash(config_text),
            mode: cfg.mode.name(),
            rows: rows.len(),
            failed_rows: rows.iter().filter(|r| r.status != Status::Ok).count(),
            threads,
            wall_time_s: wall.as_secs_f64(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        f.flush()
    }
}
