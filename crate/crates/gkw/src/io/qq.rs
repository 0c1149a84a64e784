//! Quantile-quantile plot data for p-value uniformity checks.

use super::IoFormatError;
use crate::dist::{ks_uniform, DistError};
use std::path::Path;

/// QQ plot data on the -log10 p scale plus the KS uniformity test.
#[derive(Debug, Clone)]
pub struct QqData {
    /// (expected, observed) -log10 quantile pairs, expected ascending.
    pub points: Vec<(f64, f64)>,
    pub ks_d: f64,
    pub ks_p: f64,
}

/// Sorted observed-vs-expected -log10 quantile pairs: the i-th smallest
/// p-value is paired with the uniform quantile (i - 0.5) / n.
pub fn qq_data(pvals: &[f64]) -> Result<QqData, DistError> {
    let (ks_d, ks_p) = ks_uniform(pvals)?;
    let mut sorted = pvals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated by ks_uniform"));
    let n = sorted.len();
    let mut points = Vec::with_capacity(n);
    // iterate from the largest p so the expected column ascends
    for i in (1..=n).rev() {
        let expected = -((i as f64 - 0.5) / n as f64).log10();
        let observed = -sorted[i - 1].max(f64::MIN_POSITIVE).log10();
        points.push((expected, observed));
    }
    Ok(QqData { points, ks_d, ks_p })
}

/// Read one p-value column from a TSV file. `column` is either a 0-based
/// index or a header name; `NA` cells are skipped.
pub fn read_pvalue_column(path: &Path, column: &str) -> Result<Vec<f64>, IoFormatError> {
    read_pvalue_column_str(&std::fs::read_to_string(path)?, column)
}

pub fn read_pvalue_column_str(text: &str, column: &str) -> Result<Vec<f64>, IoFormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let by_index: Option<usize> = column.parse().ok();
    let (col, mut skip_header) = match by_index {
        Some(i) => (i, false),
        None => {
            let (line_no, header) = lines.next().ok_or(IoFormatError::MissingColumn {
                name: column.to_string(),
            })?;
            let _ = line_no;
            let col = header
                .split('\t')
                .position(|h| h == column)
                .ok_or(IoFormatError::MissingColumn {
                    name: column.to_string(),
                })?;
            (col, false)
        }
    };

    let mut pvals = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let token = line
            .split('\t')
            .nth(col)
            .ok_or_else(|| IoFormatError::InvalidValue {
                line: line_no,
                message: format!("no column {col}"),
            })?;
        if token == "NA" {
            continue;
        }
        // tolerate one header row when the column was given by index
        if by_index.is_some() && !skip_header && token.parse::<f64>().is_err() && pvals.is_empty()
        {
            skip_header = true;
            continue;
        }
        let v: f64 = token.parse().map_err(|_| IoFormatError::NonNumericValue {
            line: line_no,
            token: token.to_string(),
        })?;
        pvals.push(v);
    }
    Ok(pvals)
}
