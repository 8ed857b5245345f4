//! Kernel tables: two CSV columns `y, h(y)`, `#` comments, optional header.

use std::path::Path;

use csv::{ReaderBuilder, Trim};

use crate::error::CliError;

pub fn read_kernel_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_path(path)
        .map_err(|e| CliError::file(path, e))?;
    let (mut ys, mut hs) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::file(path, e))?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        if record.len() != 2 {
            return Err(CliError::file(path, format!("line {line}: expected 2 columns, found {}", record.len())));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(y), Ok(h)) => {
                ys.push(y);
                hs.push(h);
            }
            // a header is only allowed before any data
            _ if row == 0 => {}
            _ => return Err(CliError::file(path, format!("line {line}: not a pair of numbers"))),
        }
    }
    Ok((ys, hs))
}
