//! File formats and the batch scan runner.
//!
//! Two TSV formats cross the boundary of this crate:
//!
//! - probability files: a header `#subjects<TAB>id1<TAB>id2...`, then one
//!   line per record holding a record id followed by N groups of k
//!   probabilities in subject order (record-major so scans can stream);
//! - phenotype files: two columns, subject id and response value.
//!
//! Both are UTF-8 with LF line endings; other `#` lines are comments.

mod pheno;
mod prob_file;
mod qq;
mod scan;
mod simcfg;

pub use pheno::parse_phenotype_file;
pub use prob_file::{
    parse_record_line, write_prob_file, ProbFile, ProbReader, ScanRecord,
};
pub use qq::{qq_data, read_pvalue_column, read_pvalue_column_str, QqData};
pub use scan::{run_scan, ScanError, ScanOptions, ScanSummary};
pub use simcfg::{load_sim_config, parse_sim_config, SimGrid};

pub(crate) use scan::{header_row as scan_header, process_record as scan_process_record};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("line {line}: expected {expected} probability fields, found {found}")]
    SubjectCountMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: subject {subject}: probabilities sum to {sum}")]
    RowSumViolation { line: usize, subject: usize, sum: f64 },
    #[error("line {line}: invalid value: {message}")]
    InvalidValue { line: usize, message: String },
    #[error("line {line}: duplicate subject id {id:?}")]
    DuplicateSubject { line: usize, id: String },
    #[error("line {line}: non-numeric value {token:?}")]
    NonNumericValue { line: usize, token: String },
    #[error("subject sets do not match: {message}")]
    SubjectMismatch { message: String },
    #[error("column {name:?} not found")]
    MissingColumn { name: String },
}
