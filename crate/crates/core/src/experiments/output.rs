//! CSV and JSON tables.

use super::{SweepResult, SweepRow};
use crate::Result;
use std::io::{Read, Write};
use std::path::Path;

pub const CSV_HEADER: [&str; 8] = ["alpha", "rho", "N", "quantity", "mean", "std_error", "n_samples", "converged"];

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Writes the rows of `result` to `path` as CSV.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(&result.rows, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok(rows)
}

/// Rows as a JSON array of objects keyed like the CSV columns.
pub fn rows_json(rows: &[SweepRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

pub fn emit_json(result: &SweepResult, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(rows_json(&result.rows)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn parse_json(text: &str) -> Result<Vec<SweepRow>> {
    Ok(serde_json::from_str(text)?)
}
