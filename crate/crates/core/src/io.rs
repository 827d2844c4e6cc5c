//! CSV and JSON artifact writers. CSV files may start with `#` comment lines
//! carrying provenance (seed, config hash); the header row follows them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{QlsmError, Result};

pub fn write_csv_records<I, R>(path: &Path, preamble: &[String], header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let io_err = |e: std::io::Error| QlsmError::io(path, e);
    let csv_err = |e: csv::Error| QlsmError::io(path, std::io::Error::other(e));
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for line in preamble {
        writeln!(out, "# {line}").map_err(io_err)?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer
            .write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(csv_err)?;
    }
    writer.flush().map_err(io_err)
}

pub fn write_csv<I>(path: &Path, preamble: &[String], header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    write_csv_records(
        path,
        preamble,
        header,
        rows.into_iter().map(|r| r.into_iter().map(|x| x.to_string())),
    )
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| QlsmError::Internal(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| QlsmError::io(path, e))
}
