use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::SimConfig;
use super::sweep::{Provenance, RunResult};
use crate::error::{IqiError, Result};
use crate::estimation::Method;

pub const CSV_HEADER: [&str; 6] = ["method", "snr_db", "sir_in_db", "frames", "sir_db", "cdf_prob"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = IqiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(IqiError::InvalidConfig(format!("unknown format '{other}'"))),
        }
    }
}

/// A dB value that keeps infinities in JSON (as `"inf"` / `"-inf"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Db(pub f64);

impl Serialize for Db {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            v if v.is_finite() => s.serialize_f64(v),
            v if v == f64::INFINITY => s.serialize_str("inf"),
            v if v == f64::NEG_INFINITY => s.serialize_str("-inf"),
            _ => s.serialize_str("nan"),
        }
    }
}

impl<'de> Deserialize<'de> for Db {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Db(v)),
            Raw::Text(t) => t.parse().map(Db).map_err(serde::de::Error::custom),
        }
    }
}

/// One CSV row: a single point on one CDF curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub method: Method,
    pub snr_db: f64,
    pub sir_in_db: f64,
    pub frames: usize,
    pub sir_db: f64,
    pub cdf_prob: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IqiError + '_ {
    move |source| IqiError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IqiError + '_ {
    move |e| IqiError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// CSV with one row per CDF point, raw (uncapped) SIR values.
pub fn write_csv<W: Write>(result: &RunResult, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for cell in &result.cells {
        let Some(cdf) = &cell.cdf else { continue };
        for (v, p) in cdf.values.iter().zip(&cdf.probs) {
            w.write_record([
                cell.method.as_str().to_string(),
                cell.cell.snr_db.to_string(),
                cell.cell.sir_in_db.to_string(),
                cell.cell.frames.to_string(),
                v.to_string(),
                p.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonSummary {
    trials: usize,
    failures: usize,
    median_sir_db: Option<Db>,
    p10_sir_db: Option<Db>,
    p90_sir_db: Option<Db>,
    mean_nmse: Option<f64>,
    clamp_rate: f64,
    annotation: Option<String>,
}

#[derive(Serialize)]
struct JsonCurve {
    sir_db: Vec<Db>,
    cdf_prob: Vec<f64>,
}

#[derive(Serialize)]
struct JsonCell {
    method: Method,
    snr_db: Db,
    sir_in_db: f64,
    frames: usize,
    summary: JsonSummary,
    curve: Option<JsonCurve>,
}

#[derive(Serialize)]
struct JsonRun<'a> {
    provenance: &'a Provenance,
    config: &'a SimConfig,
    cells: Vec<JsonCell>,
}

pub fn write_json<W: Write>(result: &RunResult, mut out: W) -> std::result::Result<(), serde_json::Error> {
    let cells = result
        .cells
        .iter()
        .map(|c| JsonCell {
            method: c.method,
            snr_db: Db(c.cell.snr_db),
            sir_in_db: c.cell.sir_in_db,
            frames: c.cell.frames,
            summary: JsonSummary {
                trials: c.summary.trials,
                failures: c.summary.failures,
                median_sir_db: c.summary.median_sir_db.map(Db),
                p10_sir_db: c.summary.p10_sir_db.map(Db),
                p90_sir_db: c.summary.p90_sir_db.map(Db),
                mean_nmse: c.summary.mean_nmse,
                clamp_rate: c.summary.clamp_rate,
                annotation: c.summary.annotation.clone(),
            },
            curve: c.cdf.as_ref().map(|cdf| JsonCurve {
                sir_db: cdf.values.iter().copied().map(Db).collect(),
                cdf_prob: cdf.probs.clone(),
            }),
        })
        .collect();
    let run = JsonRun {
        provenance: &result.provenance,
        config: &result.config,
        cells,
    };
    serde_json::to_writer_pretty(&mut out, &run)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

/// Writes `result` to `path` in the requested format.
pub fn export(result: &RunResult, path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(result, &mut out).map_err(csv_err(path))?,
        Format::Json => write_json(result, &mut out).map_err(|e| IqiError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?,
    }
    out.flush().map_err(io_err(path))
}

/// Parses a CSV export back into rows.
pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let bad = |message: String| IqiError::Format {
        path: path.to_path_buf(),
        message,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(String::from)
        .collect();
    if header != CSV_HEADER {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(csv_err(path))?;
        let num = |k: usize| -> Result<f64> { r[k].parse().map_err(|_| bad(format!("bad number '{}'", &r[k]))) };
        rows.push(CsvRow {
            method: r[0].parse()?,
            snr_db: num(1)?,
            sir_in_db: num(2)?,
            frames: r[3].parse().map_err(|_| bad(format!("bad frame count '{}'", &r[3])))?,
            sir_db: num(4)?,
            cdf_prob: num(5)?,
        });
    }
    Ok(rows)
}
