//! Record-major probability file parsing and writing.

use super::IoFormatError;
use crate::prob::{ProbError, ProbMatrix};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

const HEADER_PREFIX: &str = "#subjects\t";

/// One probabilistic-group record: an identifier plus the raw N x k
/// probability block in subject order. Values are kept as parsed (before
/// renormalization) so writers can reproduce inputs faithfully.
#[derive(Debug, Clone)]
pub struct ScanRecord {
    /// 0-based record index within the file.
    pub index: usize,
    /// 1-based file line the record came from.
    pub line: usize,
    pub id: String,
    pub values: Vec<f64>,
    pub k: usize,
}

impl ScanRecord {
    /// Validate and renormalize into a [`ProbMatrix`].
    pub fn to_matrix(&self) -> Result<ProbMatrix, ProbError> {
        ProbMatrix::from_flat(self.values.clone(), self.k)
    }
}

/// Parse one record line. `k` was fixed by the first record of the file.
pub fn parse_record_line(
    line: &str,
    line_no: usize,
    n_subjects: usize,
    k: usize,
    index: usize,
) -> Result<ScanRecord, IoFormatError> {
    let mut fields = line.split('\t');
    let id = fields
        .next()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| IoFormatError::InvalidValue {
            line: line_no,
            message: "empty record id".into(),
        })?
        .to_string();
    let mut values = Vec::with_capacity(n_subjects * k);
    for token in fields {
        let v: f64 = token.parse().map_err(|_| IoFormatError::NonNumericValue {
            line: line_no,
            token: token.to_string(),
        })?;
        values.push(v);
    }
    if values.len() != n_subjects * k {
        return Err(IoFormatError::SubjectCountMismatch {
            line: line_no,
            expected: n_subjects * k,
            found: values.len(),
        });
    }
    Ok(ScanRecord {
        index,
        line: line_no,
        id,
        values,
        k,
    })
}

/// Streaming reader over a probability file. Yields raw record lines so
/// scans can parse fields on worker threads; use [`ProbReader::records`]
/// for a convenient parsed iterator.
pub struct ProbReader<R: BufRead> {
    reader: R,
    subject_ids: Vec<String>,
    k: Option<usize>,
    line_no: usize,
    record_index: usize,
}

impl ProbReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, IoFormatError> {
        let file = File::open(path)?;
        Self::new(BufReader::with_capacity(1 << 20, file))
    }
}

impl<R: BufRead> ProbReader<R> {
    /// Read up to and including the header line.
    pub fn new(mut reader: R) -> Result<Self, IoFormatError> {
        let mut line_no = 0;
        let mut buf = String::new();
        loop {
            buf.clear();
            line_no += 1;
            if reader.read_line(&mut buf)? == 0 {
                return Err(IoFormatError::MalformedHeader {
                    line: line_no,
                    message: "no `#subjects` header before end of file".into(),
                });
            }
            let line = buf.trim_end_matches('\n');
            if let Some(rest) = line.strip_prefix(HEADER_PREFIX) {
                let subject_ids: Vec<String> = rest.split('\t').map(str::to_string).collect();
                if subject_ids.is_empty() || subject_ids.iter().any(|s| s.is_empty()) {
                    return Err(IoFormatError::MalformedHeader {
                        line: line_no,
                        message: "empty subject id in header".into(),
                    });
                }
                return Ok(ProbReader {
                    reader,
                    subject_ids,
                    k: None,
                    line_no,
                    record_index: 0,
                });
            }
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            return Err(IoFormatError::MalformedHeader {
                line: line_no,
                message: format!("expected `#subjects` header, found {:?}", truncate(line)),
            });
        }
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids.len()
    }

    /// Group count, known once the first record line has been seen.
    pub fn k(&self) -> Option<usize> {
        self.k
    }

    /// Next raw record line as (line number, record index, text), skipping
    /// comments and blank lines. The first record fixes k from its field
    /// count, which must be a multiple of the subject count.
    pub fn next_line(&mut self) -> Option<Result<(usize, usize, String), IoFormatError>> {
        loop {
            let mut buf = String::new();
            self.line_no += 1;
            match self.reader.read_line(&mut buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            while buf.ends_with('\n') || buf.ends_with('\r') {
                buf.pop();
            }
            if buf.is_empty() || buf.starts_with('#') {
                continue;
            }
            if self.k.is_none() {
                let fields = buf.as_bytes().iter().filter(|&&b| b == b'\t').count();
                let n = self.subject_ids.len();
                if fields == 0 || fields % n != 0 {
                    return Some(Err(IoFormatError::SubjectCountMismatch {
                        line: self.line_no,
                        expected: n,
                        found: fields,
                    }));
                }
                let k = fields / n;
                if k < 2 {
                    return Some(Err(IoFormatError::InvalidValue {
                        line: self.line_no,
                        message: format!("{k} probability column(s) per subject; need >= 2"),
                    }));
                }
                self.k = Some(k);
            }
            let index = self.record_index;
            self.record_index += 1;
            return Some(Ok((self.line_no, index, buf)));
        }
    }

    /// Parsed-record iterator (serial parsing).
    pub fn records(mut self) -> impl Iterator<Item = Result<ScanRecord, IoFormatError>> {
        let n = self.subject_ids.len();
        std::iter::from_fn(move || {
            let (line_no, index, text) = match self.next_line()? {
                Ok(v) => v,
                Err(e) => return Some(Err(e)),
            };
            let k = self.k.expect("set by next_line");
            Some(parse_record_line(&text, line_no, n, k, index))
        })
    }
}

fn truncate(line: &str) -> String {
    line.chars().take(40).collect()
}

/// A fully parsed probability file that retains its raw lines, so
/// `serialize` reproduces well-formed input byte for byte.
#[derive(Debug, Clone)]
pub struct ProbFile {
    lines: Vec<String>,
    pub subject_ids: Vec<String>,
    pub records: Vec<ScanRecord>,
}

impl ProbFile {
    pub fn parse(path: &Path) -> Result<Self, IoFormatError> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Strict parse: every record must be structurally valid and pass the
    /// row-stochasticity tolerance.
    pub fn parse_str(text: &str) -> Result<Self, IoFormatError> {
        let lines: Vec<String> = text.lines().map(str::to_string).collect();
        let reader = ProbReader::new(std::io::Cursor::new(text))?;
        let subject_ids = reader.subject_ids().to_vec();
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            // surface stochasticity violations with file line numbers
            if let Err(e) = rec.to_matrix() {
                return Err(match e {
                    ProbError::RowSumViolation { row, sum } => IoFormatError::RowSumViolation {
                        line: rec.line,
                        subject: row,
                        sum,
                    },
                    other => IoFormatError::InvalidValue {
                        line: rec.line,
                        message: other.to_string(),
                    },
                });
            }
            records.push(rec);
        }
        Ok(ProbFile {
            lines,
            subject_ids,
            records,
        })
    }

    /// Reproduce the file, byte-identical for well-formed input ending in
    /// a newline.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Write a probability file in canonical form (shortest round-trip float
/// formatting). Used to emit synthetic scan inputs.
pub fn write_prob_file<W: Write, I, V>(
    out: &mut W,
    subject_ids: &[String],
    records: I,
) -> std::io::Result<()>
where
    I: IntoIterator<Item = (String, V)>,
    V: AsRef<[f64]>,
{
    write!(out, "#subjects")?;
    for id in subject_ids {
        write!(out, "\t{id}")?;
    }
    writeln!(out)?;
    for (id, values) in records {
        write!(out, "{id}")?;
        for v in values.as_ref() {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
