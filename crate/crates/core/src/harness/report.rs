//! Accuracy reports and their tabular rendering.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Method, WindowMode};
use crate::error::{Error, Result};
use crate::model::AreaId;

/// Results of one (method, window mode, test set) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub method: Method,
    pub mode: WindowMode,
    pub test_set: String,
    /// Decisions made (snapshots or windows).
    pub evaluated: usize,
    pub correct: usize,
    /// `confusion[true][predicted]`, indexed like [`AccuracyReport::areas`].
    pub confusion: Vec<Vec<usize>>,
    /// Wall-clock scoring time divided by the number of test snapshots.
    pub seconds_per_snapshot: f64,
}

impl ReportEntry {
    pub(crate) fn from_pairs(
        method: Method,
        mode: WindowMode,
        test_set: &str,
        areas: usize,
        pairs: &[(usize, usize)],
        seconds_per_snapshot: f64,
    ) -> Self {
        let mut confusion = vec![vec![0; areas]; areas];
        for &(t, p) in pairs {
            confusion[t][p] += 1;
        }
        ReportEntry {
            method,
            mode,
            test_set: test_set.to_string(),
            evaluated: pairs.len(),
            correct: pairs.iter().filter(|(t, p)| t == p).count(),
            confusion,
            seconds_per_snapshot,
        }
    }

    /// `correct / evaluated`; NaN when nothing was evaluated.
    pub fn accuracy(&self) -> f64 {
        if self.evaluated == 0 {
            f64::NAN
        } else {
            self.correct as f64 / self.evaluated as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub areas: Vec<AreaId>,
    pub test_sets: Vec<String>,
    pub entries: Vec<ReportEntry>,
}

impl AccuracyReport {
    pub fn new(areas: Vec<AreaId>, test_sets: Vec<String>, entries: Vec<ReportEntry>) -> Self {
        AccuracyReport {
            areas,
            test_sets,
            entries,
        }
    }

    pub fn entry(&self, method: Method, mode: WindowMode, test_set: &str) -> Option<&ReportEntry> {
        self.entries
            .iter()
            .find(|e| e.method == method && e.mode == mode && e.test_set == test_set)
    }

    pub fn accuracy(&self, method: Method, mode: WindowMode, test_set: &str) -> Option<f64> {
        self.entry(method, mode, test_set)
            .map(ReportEntry::accuracy)
    }

    /// One row per (method, mode) in method order, one cell per test set.
    pub fn table(&self) -> ReportTable {
        let mut keys: Vec<(Method, WindowMode)> =
            self.entries.iter().map(|e| (e.method, e.mode)).collect();
        keys.sort();
        keys.dedup();
        let rows = keys
            .into_iter()
            .map(|(m, w)| TableRow {
                method: m.label().to_string(),
                window: w.label(),
                cells: self
                    .test_sets
                    .iter()
                    .map(|s| {
                        self.accuracy(m, w, s)
                            .filter(|a| !a.is_nan())
                            .map(|a| round_percent(a))
                    })
                    .collect(),
            })
            .collect();
        ReportTable {
            columns: self.test_sets.clone(),
            rows,
        }
    }
}

/// A rendered report: percentages rounded half-up to one decimal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub method: String,
    pub window: String,
    /// Percent values; `None` where a method was not run on a set.
    pub cells: Vec<Option<f64>>,
}

fn round_percent(accuracy: f64) -> f64 {
    ((accuracy * 1000.0 + 1e-9) + 0.5).floor() / 10.0
}

/// `0.7715` → `"77.2%"`.
pub fn format_percent(accuracy: f64) -> String {
    format!("{:.1}%", round_percent(accuracy))
}

fn cell(v: Option<f64>, suffix: &str) -> String {
    v.map_or_else(|| "-".to_string(), |p| format!("{p:.1}{suffix}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

impl ReportTable {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Method | Window |");
        for c in &self.columns {
            let _ = write!(s, " {c} |");
        }
        s.push_str("\n|---|---|");
        s.push_str(&"---:|".repeat(self.columns.len()));
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "| {} | {} |", r.method, r.window);
            for v in &r.cells {
                let _ = write!(s, " {} |", cell(*v, "%"));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,window");
        for c in &self.columns {
            s.push(',');
            s.push_str(&csv_field(c));
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&csv_field(&r.method));
            s.push(',');
            s.push_str(&csv_field(&r.window));
            for v in &r.cells {
                s.push(',');
                s.push_str(&cell(*v, ""));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header = split_csv_line(lines.next().ok_or_else(|| Error::format("empty report"))?);
        if header.len() < 2 || header[0] != "method" || header[1] != "window" {
            return Err(Error::format("report header must start with method,window"));
        }
        let columns = header[2..].to_vec();
        let rows = lines
            .enumerate()
            .map(|(i, line)| {
                let f = split_csv_line(line);
                if f.len() != header.len() {
                    return Err(Error::Parse {
                        row: i + 2,
                        msg: format!("expected {} fields", header.len()),
                    });
                }
                let cells = f[2..]
                    .iter()
                    .map(|v| match v.as_str() {
                        "-" => Ok(None),
                        v => v.parse().map(Some).map_err(|_| Error::Parse {
                            row: i + 2,
                            msg: format!("bad percentage {v:?}"),
                        }),
                    })
                    .collect::<Result<_>>()?;
                Ok(TableRow {
                    method: f[0].clone(),
                    window: f[1].clone(),
                    cells,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ReportTable { columns, rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Spec(format!(
                "unknown report format {s:?} (expected csv or markdown)"
            ))),
        }
    }
}

pub fn render_report(report: &AccuracyReport, format: ReportFormat) -> String {
    let t = report.table();
    match format {
        ReportFormat::Csv => t.to_csv(),
        ReportFormat::Markdown => t.to_markdown(),
    }
}

pub fn emit_report(report: &AccuracyReport, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format))?;
    Ok(())
}
