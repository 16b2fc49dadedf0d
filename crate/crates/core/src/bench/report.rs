use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A rendered result table plus the configuration it was produced with.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub echo: Vec<(String, String)>,
}

impl ReportTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            w.write_record(row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output of UTF-8 fields"))
    }

    /// Config echo as a bullet list, then a padded pipe table.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("- version: {}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.echo {
            out.push_str(&format!("- {k}: {v}\n"));
        }
        out.push('\n');

        let width = |i: usize| {
            self.rows
                .iter()
                .map(|r| r[i].chars().count())
                .chain([self.columns[i].chars().count(), 3])
                .max()
                .unwrap_or(3)
        };
        let widths: Vec<usize> = (0..self.columns.len()).map(width).collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        out.push_str(&line(&self.columns));
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        out.push_str(&line(&rule));
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

/// Writes `<stem>.csv` and `<stem>.md` into `dir`, creating it if needed.
pub fn emit_report(table: &ReportTable, dir: impl AsRef<Path>, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let md_path = dir.join(format!("{stem}.md"));
    fs::write(&csv_path, table.to_csv()?)?;
    fs::write(&md_path, table.to_markdown())?;
    Ok((csv_path, md_path))
}
