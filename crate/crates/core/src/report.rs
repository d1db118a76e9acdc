//! Plain CSV tables with a commented preamble.

use std::fs;
use std::path::Path;

use crate::config::EMBED_PREFIX;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// `#` lines written before the column header.
    pub comments: Vec<String>,
    /// Embedded run configuration.
    pub config: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Table::default()
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn with_config(mut self, config: Option<&str>) -> Self {
        self.config = config.map(str::to_string);
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        if let Some(cfg) = &self.config {
            for line in cfg.lines() {
                out.push_str(EMBED_PREFIX);
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Data rows of a CSV written by [`Table::to_csv`], skipping comments,
/// embedded configuration and the column header.
pub fn data_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|(i, l)| (i + 1, l.split(',').collect()))
}
