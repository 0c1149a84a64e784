//! Phenotype file parsing: two tab-separated columns, subject id and value.

use super::IoFormatError;
use std::collections::HashSet;
use std::path::Path;

/// Parse a phenotype file. File order defines the subject order; duplicate
/// ids and non-numeric values are rejected with their line numbers.
pub fn parse_phenotype_file(path: &Path) -> Result<(Vec<String>, Vec<f64>), IoFormatError> {
    parse_phenotype_str(&std::fs::read_to_string(path)?)
}

pub fn parse_phenotype_str(text: &str) -> Result<(Vec<String>, Vec<f64>), IoFormatError> {
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or("");
        let value_token = fields.next().ok_or_else(|| IoFormatError::InvalidValue {
            line: line_no,
            message: "expected two tab-separated columns".into(),
        })?;
        if fields.next().is_some() {
            return Err(IoFormatError::InvalidValue {
                line: line_no,
                message: "expected exactly two columns".into(),
            });
        }
        if id.is_empty() {
            return Err(IoFormatError::InvalidValue {
                line: line_no,
                message: "empty subject id".into(),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(IoFormatError::DuplicateSubject {
                line: line_no,
                id: id.to_string(),
            });
        }
        let value: f64 = value_token
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IoFormatError::NonNumericValue {
                line: line_no,
                token: value_token.to_string(),
            })?;
        ids.push(id.to_string());
        values.push(value);
    }
    Ok((ids, values))
}
