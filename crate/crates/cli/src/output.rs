//! Output directories, CSV tables with `#` headers, JSON documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// A directory owned by one run (or one sweep job).
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    /// Creates `root`; an existing non-empty directory needs `force`.
    pub fn prepare(root: &Path, force: bool) -> Result<OutputDir, CliError> {
        if root.exists() {
            if !root.is_dir() {
                return Err(CliError::file(root, "exists and is not a directory"));
            }
            let occupied = fs::read_dir(root).map_err(|e| CliError::file(root, e))?.next().is_some();
            if occupied && !force {
                return Err(CliError::OutputExists(root.to_path_buf()));
            }
        }
        fs::create_dir_all(root).map_err(|e| CliError::file(root, e))?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    /// A subdirectory for one job.
    pub fn child(&self, name: &str) -> Result<OutputDir, CliError> {
        let root = self.root.join(name);
        fs::create_dir_all(&root).map_err(|e| CliError::file(&root, e))?;
        Ok(OutputDir { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, table.render()).map_err(|e| CliError::file(&path, e))?;
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::file(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::file(&path, e))?;
        Ok(path)
    }

    pub fn text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|e| CliError::file(&path, e))?;
        Ok(path)
    }
}

/// A CSV table: comment lines, a header row, then records.
#[derive(Debug, Clone, Default)]
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// `columns` pairs each column name with the quantity it holds; the
    /// pairs become the comment header.
    pub fn new(title: &str, columns: &[(&str, &str)]) -> Table {
        let mut comments = vec![title.to_string()];
        comments.extend(columns.iter().map(|(name, what)| format!("{name}: {what}")));
        Table { comments, columns: columns.iter().map(|(n, _)| n.to_string()).collect(), rows: Vec::new() }
    }

    pub fn note(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| num(v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn render(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.comments {
            out.extend_from_slice(b"# ");
            out.extend_from_slice(c.as_bytes());
            out.push(b'\n');
        }
        let mut w = csv::Writer::from_writer(out);
        // writing to a Vec cannot fail
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Shortest round-trip form; exponent notation for very small or large values.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Empty for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
