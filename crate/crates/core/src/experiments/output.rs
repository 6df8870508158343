use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WptError};

use super::sweep::{SweepOutput, SweepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = WptError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(WptError::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    strategy: &'a str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    p_tr_dbw: f64,
    channel: u64,
    zdc: Option<f64>,
    papr: Option<f64>,
    iters: usize,
    ms: f64,
}

const CSV_HEADER: [&str; 9] = ["strategy", "N", "M", "p_tr_dbw", "channel", "zdc", "papr", "iters", "ms"];

/// Writes the records as CSV. Failed cells have empty `zdc` and `papr`.
pub fn write_csv<W: Write>(records: &[SweepRecord], writer: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    // Written explicitly so an empty record list still yields a header.
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(CsvRow {
            strategy: r.strategy.as_str(),
            n: r.n,
            m: r.m,
            p_tr_dbw: r.p_tr_dbw,
            channel: r.channel,
            zdc: r.zdc,
            papr: r.papr,
            iters: r.iters,
            ms: r.ms,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> WptError {
    WptError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `output` to `path`. JSON carries the resolved config and the
/// per-cell aggregates alongside the records.
pub fn emit_results(output: &SweepOutput, path: &Path, format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut writer = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(&output.records, &mut writer).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => io_error(path, source),
            other => WptError::Config(format!("csv: {other:?}")),
        })?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut writer, output).map_err(|e| io_error(path, e.into()))?;
            writer.write_all(b"\n").map_err(|e| io_error(path, e))?;
        }
    }
    writer.flush().map_err(|e| io_error(path, e))
}
