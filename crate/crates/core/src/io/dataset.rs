//! Hindcast CSV files: a header row, then one sea state per row.
//!
//! ```text
//! time,hs_m,v_ms
//! 2004-01-01T00:00:00Z,1.25,8.4
//! ```
//!
//! The time column is optional. Column names are configurable.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use super::output::fmt_num;
use crate::grid::{Dataset, Sample};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Columns {
    pub time: String,
    pub hs: String,
    pub v: String,
}

impl Default for Columns {
    fn default() -> Self {
        Columns {
            time: "time".into(),
            hs: "hs_m".into(),
            v: "v_ms".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub columns: Columns,
    /// Drop bad rows instead of failing the load.
    pub skip_invalid: bool,
    pub state_duration_hours: f64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            columns: Columns::default(),
            skip_invalid: false,
            state_duration_hours: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    /// Rows dropped under `skip_invalid`.
    pub rejected: Vec<RowError>,
}

pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<LoadedDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(BufReader::new(file), opts)
}

/// Parses CSV text from any reader.
pub fn parse_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header row: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let hs_col = find(&opts.columns.hs)
        .ok_or_else(|| Error::Schema(format!("missing column '{}'", opts.columns.hs)))?;
    let v_col = find(&opts.columns.v)
        .ok_or_else(|| Error::Schema(format!("missing column '{}'", opts.columns.v)))?;
    let t_col = find(&opts.columns.time);

    let mut samples = Vec::new();
    let mut rejected = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => match parse_row(&record, hs_col, v_col, t_col) {
                Ok(s) => samples.push(s),
                Err(message) => rejected.push(RowError {
                    line: record.position().map_or(line, |p| p.line()),
                    message,
                }),
            },
            Err(e) => {
                let line = e.position().map_or(line, |p| p.line());
                match e.kind() {
                    csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. } => {
                        rejected.push(RowError {
                            line,
                            message: e.to_string(),
                        })
                    }
                    csv::ErrorKind::Io(_) => {
                        return Err(Error::Schema(format!("read failed near line {line}: {e}")))
                    }
                    _ => return Err(Error::Schema(format!("line {line}: {e}"))),
                }
            }
        }
    }

    if !rejected.is_empty() {
        if !opts.skip_invalid {
            return Err(Error::Range(rejected));
        }
        log::warn!("skipped {} invalid row(s)", rejected.len());
    }
    if samples.len() < 2 {
        return Err(Error::Schema(format!(
            "need at least 2 valid rows, found {}",
            samples.len()
        )));
    }
    Ok(LoadedDataset {
        dataset: Dataset::new(samples, opts.state_duration_hours)?,
        rejected,
    })
}

fn parse_row(
    record: &csv::StringRecord,
    hs_col: usize,
    v_col: usize,
    t_col: Option<usize>,
) -> std::result::Result<Sample, String> {
    let number = |col: usize, name: &str| -> std::result::Result<f64, String> {
        let raw = record.get(col).unwrap_or("");
        if raw.is_empty() {
            return Err(format!("missing {name}"));
        }
        let x: f64 = raw.parse().map_err(|_| format!("{name} '{raw}' is not a number"))?;
        if !x.is_finite() {
            return Err(format!("{name} '{raw}' is not finite"));
        }
        if x < 0.0 {
            return Err(format!("{name} {raw} is negative"));
        }
        Ok(x)
    };
    let hs = number(hs_col, "hs")?;
    let v = number(v_col, "v")?;
    let t = match t_col.and_then(|c| record.get(c)) {
        None | Some("") => None,
        Some(raw) => {
            if !is_iso8601(raw) {
                return Err(format!("time '{raw}' is not an ISO 8601 timestamp"));
            }
            Some(raw.to_string())
        }
    };
    Sample::with_time(hs, v, t).map_err(|e| e.to_string())
}

/// Accepts RFC 3339 and the common offset-free ISO 8601 forms.
pub fn is_iso8601(s: &str) -> bool {
    const NAIVE: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    DateTime::parse_from_rfc3339(s).is_ok()
        || NAIVE.iter().any(|f| NaiveDateTime::parse_from_str(s, f).is_ok())
        || NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

/// Writes `dataset` with the default column names; times are included when
/// any sample has one.
pub fn write_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(&mut file, dataset).map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(out: &mut W, dataset: &Dataset) -> std::io::Result<()> {
    let with_time = dataset.samples().iter().any(|s| s.t.is_some());
    let mut buf = String::with_capacity(dataset.len() * 24);
    buf.push_str(if with_time { "time,hs_m,v_ms\n" } else { "hs_m,v_ms\n" });
    for s in dataset.samples() {
        use std::fmt::Write as _;
        if with_time {
            buf.push_str(s.t.as_deref().unwrap_or(""));
            buf.push(',');
        }
        let _ = writeln!(buf, "{},{}", fmt_num(s.hs), fmt_num(s.v));
    }
    out.write_all(buf.as_bytes())
}
