//! Which gold n-grams a system recovers that a baseline misses.
//!
//! All counting is over n-gram types. Per-line sets are computed first and
//! then unioned over the corpus, so each n-gram counts once however many
//! lines contain it.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NGram = Vec<String>;

#[derive(Debug, Error, PartialEq)]
pub enum NGramError {
    #[error("{what} has {found} lines, expected {expected}")]
    LineMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("n must be at least 1")]
    ZeroOrder,
    #[error("malformed report csv: {0}")]
    Csv(String),
}

fn line_ngrams(line: &str, n: usize) -> BTreeSet<NGram> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() < n {
        return BTreeSet::new();
    }
    tokens
        .windows(n)
        .map(|w| w.iter().map(|t| t.to_string()).collect())
        .collect()
}

fn check_lines(what: &str, expected: usize, lines: &[String]) -> Result<(), NGramError> {
    if lines.len() != expected {
        return Err(NGramError::LineMismatch {
            what: what.into(),
            expected,
            found: lines.len(),
        });
    }
    Ok(())
}

/// `⋃_l (ngrams(a_l) \ ngrams(b_l))`.
fn per_line_difference(a: &[String], b: &[String], n: usize) -> BTreeSet<NGram> {
    a.par_iter()
        .zip(b)
        .map(|(x, y)| {
            let ys = line_ngrams(y, n);
            line_ngrams(x, n)
                .into_iter()
                .filter(|g| !ys.contains(g))
                .collect::<BTreeSet<_>>()
        })
        .reduce(BTreeSet::new, |mut acc, s| {
            acc.extend(s);
            acc
        })
}

/// Gold n-grams the baseline fails to produce on the same line.
pub fn missing_ngrams(
    gold: &[String],
    baseline: &[String],
    n: usize,
) -> Result<BTreeSet<NGram>, NGramError> {
    if n == 0 {
        return Err(NGramError::ZeroOrder);
    }
    check_lines("baseline", gold.len(), baseline)?;
    Ok(per_line_difference(gold, baseline, n))
}

/// N-grams the system produces that the baseline does not, line by line.
pub fn introduced_ngrams(
    baseline: &[String],
    system: &[String],
    n: usize,
) -> Result<BTreeSet<NGram>, NGramError> {
    if n == 0 {
        return Err(NGramError::ZeroOrder);
    }
    check_lines("system", baseline.len(), system)?;
    Ok(per_line_difference(system, baseline, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramRow {
    pub n: usize,
    pub missing_count: usize,
    pub introduced_count: usize,
    pub introduced_correct_count: usize,
    /// `100 · introduced_correct / missing`.
    pub percentage: f64,
    /// `100 · introduced_correct / introduced`.
    pub percentage_of_introduced: f64,
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

pub fn introduced_correct(
    gold: &[String],
    baseline: &[String],
    system: &[String],
    n: usize,
) -> Result<NGramRow, NGramError> {
    let missing = missing_ngrams(gold, baseline, n)?;
    let introduced = introduced_ngrams(baseline, system, n)?;
    let correct = introduced.intersection(&missing).count();
    Ok(NGramRow {
        n,
        missing_count: missing.len(),
        introduced_count: introduced.len(),
        introduced_correct_count: correct,
        percentage: percent(correct, missing.len()),
        percentage_of_introduced: percent(correct, introduced.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramReport {
    pub system_id: String,
    pub rows: Vec<NGramRow>,
}

/// Rows for `n = 1..=max_n` for each system against one baseline.
pub fn ngram_report(
    gold: &[String],
    baseline: &[String],
    systems: &[(String, Vec<String>)],
    max_n: usize,
) -> Result<Vec<NGramReport>, NGramError> {
    systems
        .iter()
        .map(|(id, out)| {
            let rows = (1..=max_n)
                .map(|n| introduced_correct(gold, baseline, out, n))
                .collect::<Result<_, _>>()?;
            Ok(NGramReport {
                system_id: id.clone(),
                rows,
            })
        })
        .collect()
}

/// Percentages laid out as `method,<system>...` with one `<n>-gram` row per
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub systems: Vec<String>,
    /// `values[n - 1][system]`.
    pub values: Vec<Vec<f64>>,
}

impl FigureTable {
    pub fn from_reports(reports: &[NGramReport]) -> Self {
        let max_n = reports.iter().map(|r| r.rows.len()).max().unwrap_or(0);
        FigureTable {
            systems: reports.iter().map(|r| r.system_id.clone()).collect(),
            values: (0..max_n)
                .map(|i| {
                    reports
                        .iter()
                        .map(|r| r.rows.get(i).map_or(0.0, |row| row.percentage))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn get(&self, n: usize, system: &str) -> Option<f64> {
        let col = self.systems.iter().position(|s| s == system)?;
        self.values.get(n.checked_sub(1)?)?.get(col).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for s in &self.systems {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            write!(out, "{}-gram", i + 1).unwrap();
            for v in row {
                write!(out, ",{v:05.2}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, NGramError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| NGramError::Csv(e.to_string()))?
            .clone();
        if header.get(0) != Some("method") {
            return Err(NGramError::Csv("first column must be `method`".into()));
        }
        let systems: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| NGramError::Csv(e.to_string()))?;
            let label = format!("{}-gram", i + 1);
            if record.get(0) != Some(label.as_str()) {
                return Err(NGramError::Csv(format!("row {} should be {label}", i + 1)));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| NGramError::Csv(format!("{v:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        Ok(FigureTable { systems, values })
    }

    /// Plain-text table, one row per order.
    pub fn render(&self) -> String {
        let width = self
            .systems
            .iter()
            .map(|s| s.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = format!("{:<8}", "n");
        for s in &self.systems {
            write!(out, " {s:>width$}").unwrap();
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            write!(out, "{:<8}", format!("{}-gram", i + 1)).unwrap();
            for v in row {
                write!(out, " {v:>width$.2}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Published percentages for the five style-transfer systems, kept as
/// reference data for the report layout.
pub const REFERENCE_FIGURE_CSV: &str = "\
method,adapt,seq2seq,HPBMT(unsup),PBMT,HPBMT
1-gram,20.71,15.95,21.83,19.59,19.52
2-gram,11.14,10.48,11.34,12.13,12.16
3-gram,06.05,06.16,06.01,07.19,07.64
4-gram,03.16,03.42,03.24,04.25,04.40
";

pub fn reference_figure() -> FigureTable {
    FigureTable::from_csv(REFERENCE_FIGURE_CSV).expect("reference table parses")
}
