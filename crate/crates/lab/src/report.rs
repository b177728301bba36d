//! Aggregated comparisons against theory and their CSV form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::IoError;

/// Column order of every report file.
pub const REPORT_HEADER: [&str; 8] =
    ["t", "stat", "empirical_mean", "empirical_stderr", "theory", "rel_err", "z", "pass"];

/// Acceptance rule attached to a row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    /// `|mean - theory| <= tol * |theory|`.
    Relative(f64),
    /// `|mean - theory| <= tol`.
    Absolute(f64),
    /// `mean >= frac * theory`.
    AtLeast(f64),
}

impl Tolerance {
    pub fn accepts(self, mean: f64, theory: f64) -> bool {
        match self {
            Tolerance::Relative(tol) => (mean - theory).abs() <= tol * theory.abs(),
            Tolerance::Absolute(tol) => (mean - theory).abs() <= tol,
            Tolerance::AtLeast(frac) => mean >= frac * theory,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub t: u64,
    pub stat: String,
    pub empirical_mean: f64,
    pub empirical_stderr: f64,
    pub theory: f64,
    pub rel_err: f64,
    pub z: f64,
    pub pass: bool,
}

impl ReportRow {
    /// Row from per-trial samples; mean and standard error are taken over
    /// all of them.
    pub fn from_samples(t: u64, stat: impl Into<String>, samples: &[f64], theory: f64, rule: Tolerance) -> Self {
        let (mean, stderr) = mean_stderr(samples);
        Self::new(t, stat, mean, stderr, theory, rule)
    }

    pub fn new(t: u64, stat: impl Into<String>, mean: f64, stderr: f64, theory: f64, rule: Tolerance) -> Self {
        ReportRow {
            t,
            stat: stat.into(),
            empirical_mean: mean,
            empirical_stderr: stderr,
            theory,
            rel_err: ratio(mean - theory, theory.abs()),
            z: ratio(mean - theory, stderr),
            pass: rule.accepts(mean, theory),
        }
    }
}

/// `a / b`, with `0 / 0 = 0`.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AggregateReport {
    pub trials: usize,
    pub rows: Vec<ReportRow>,
}

impl AggregateReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn find(&self, t: u64, stat: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.t == t && r.stat == stat)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(REPORT_HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Rows of a report file. The trial count is not stored and reads back as 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, csv::Error> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != REPORT_HEADER {
            return Err(csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("unexpected report header {header:?}"),
            )));
        }
        let rows = r.deserialize().collect::<Result<Vec<ReportRow>, _>>()?;
        Ok(AggregateReport { trials: 0, rows })
    }
}

pub fn write_report(report: &AggregateReport, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::at(path, e))?;
    report.write_csv(std::io::BufWriter::new(file)).map_err(|e| IoError::csv(path, e))
}

pub fn read_report(path: &Path) -> Result<AggregateReport, IoError> {
    let file = File::open(path).map_err(|e| IoError::at(path, e))?;
    AggregateReport::read_csv(std::io::BufReader::new(file)).map_err(|e| IoError::csv(path, e))
}
