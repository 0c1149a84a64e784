//! Batch genome-scan runner.
//!
//! The phenotype is ranked exactly once per scan (optionally after a seeded
//! permutation, reproducing a null pipeline) and shared read-only across a
//! worker pool; records stream in chunks, workers parse and test them, and
//! rows are written back in input order. Per-record problems degrade to
//! annotated rows so a pathological record never aborts a scan, and output
//! is byte-identical for any worker count.

use super::prob_file::{parse_record_line, ProbReader, ScanRecord};
use super::IoFormatError;
use crate::classic::{dosage, hard_call, kruskal_wallis, ols_slope_test, one_way_anova};
use crate::dist::{shuffle, RngState};
use crate::gkw::GkwTest;
use crate::rank::{rank_midrank, RankedResponse};
use crate::result::{Method, TestError, TestResult};
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Records parsed and tested per parallel batch.
const CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Format(#[from] IoFormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("phenotype ranking failed: {0}")]
    Rank(#[from] crate::rank::RankError),
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub methods: Vec<Method>,
    /// Records with any effective group size below this are skipped.
    pub min_group_sum: f64,
    /// Permute the phenotype with this seed before ranking (null pipeline).
    pub permute_seed: Option<u64>,
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
    pub tie_correct: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            methods: vec![Method::Gkw],
            min_group_sum: 5.0,
            permute_seed: None,
            workers: 0,
            tie_correct: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanSummary {
    pub records: usize,
    pub tested: usize,
    pub skipped: usize,
}

/// Run a scan, writing one TSV row per record to `out`.
pub fn run_scan(
    prob_path: &Path,
    pheno_path: &Path,
    opts: &ScanOptions,
    out: &mut dyn Write,
) -> Result<ScanSummary, ScanError> {
    let (pheno_ids, mut pheno_values) = super::parse_phenotype_file(pheno_path)?;
    if let Some(seed) = opts.permute_seed {
        shuffle(&mut pheno_values, &mut RngState::new(seed));
    }

    let mut reader = ProbReader::open(prob_path)?;
    let y = reconcile_subjects(reader.subject_ids(), &pheno_ids, &pheno_values)?;
    let rr = rank_midrank(&y)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| ScanError::Pool(e.to_string()))?;

    writeln!(out, "{}", header_row(&opts.methods))?;

    let n = reader.n_subjects();
    let mut summary = ScanSummary::default();
    let mut chunk: Vec<(usize, usize, String)> = Vec::with_capacity(CHUNK);
    loop {
        chunk.clear();
        while chunk.len() < CHUNK {
            match reader.next_line() {
                Some(Ok(item)) => chunk.push(item),
                Some(Err(e)) => return Err(e.into()),
                None => break,
            }
        }
        if chunk.is_empty() {
            break;
        }
        let k = reader.k().expect("set once a record line was read");
        let rows: Vec<Result<ProcessedRecord, IoFormatError>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|(line_no, index, text)| {
                    let record = parse_record_line(text, *line_no, n, k, *index)?;
                    Ok(process_record(&record, &rr, opts))
                })
                .collect()
        });
        for row in rows {
            let processed = row?;
            summary.records += 1;
            if processed.tested {
                summary.tested += 1;
            } else {
                summary.skipped += 1;
            }
            writeln!(out, "{}", processed.row)?;
        }
    }
    out.flush()?;
    Ok(summary)
}

/// Reorder phenotype values into the probability file's subject order.
/// The two subject sets must be identical.
fn reconcile_subjects(
    prob_ids: &[String],
    pheno_ids: &[String],
    pheno_values: &[f64],
) -> Result<Vec<f64>, ScanError> {
    let index: HashMap<&str, usize> = pheno_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    if pheno_ids.len() != prob_ids.len() {
        return Err(IoFormatError::SubjectMismatch {
            message: format!(
                "{} subjects in probability file, {} in phenotype file",
                prob_ids.len(),
                pheno_ids.len()
            ),
        }
        .into());
    }
    let mut y = Vec::with_capacity(prob_ids.len());
    for id in prob_ids {
        match index.get(id.as_str()) {
            Some(&i) => y.push(pheno_values[i]),
            None => {
                return Err(IoFormatError::SubjectMismatch {
                    message: format!("subject {id:?} has no phenotype"),
                }
                .into())
            }
        }
    }
    Ok(y)
}

pub(crate) fn header_row(methods: &[Method]) -> String {
    let mut cols = vec!["id".to_string(), "status".to_string()];
    for m in methods {
        let t = m.tag();
        cols.push(format!("{t}_stat"));
        cols.push(format!("{t}_df"));
        cols.push(format!("{t}_p"));
        cols.push(format!("{t}_p_full"));
        cols.push(format!("{t}_neglog10p"));
    }
    cols.push("warnings".to_string());
    cols.join("\t")
}

/// One formatted output row plus bookkeeping for summaries.
#[derive(Debug)]
pub(crate) struct ProcessedRecord {
    pub row: String,
    pub tested: bool,
    /// Methods that produced a result (rather than an annotated failure).
    pub successes: usize,
}

impl ProcessedRecord {
    fn skipped(row: String) -> Self {
        ProcessedRecord {
            row,
            tested: false,
            successes: 0,
        }
    }
}

/// Compute all requested methods for one record.
pub(crate) fn process_record(
    record: &ScanRecord,
    rr: &RankedResponse,
    opts: &ScanOptions,
) -> ProcessedRecord {
    let na = "NA\tNA\tNA\tNA\tNA";
    let pm = match record.to_matrix() {
        Ok(pm) => pm,
        Err(e) => {
            let cells = vec![na; opts.methods.len()].join("\t");
            let status = format!("skipped:invalid_record(line {})", record.line);
            return ProcessedRecord::skipped(format!(
                "{}\t{}\t{}\t{}",
                record.id, status, cells, e
            ));
        }
    };

    let col_sums = pm.col_sums();
    if let Some((group, sum)) = col_sums
        .iter()
        .enumerate()
        .find(|(_, &s)| s < opts.min_group_sum)
    {
        let cells = vec![na; opts.methods.len()].join("\t");
        let status = format!("skipped:small_group({group})");
        let note = format!("effective_size({group})={sum:.3}");
        return ProcessedRecord::skipped(format!(
            "{}\t{}\t{}\t{}",
            record.id, status, cells, note
        ));
    }

    // shared per-record inputs, computed lazily
    let needs_hard = opts
        .methods
        .iter()
        .any(|m| matches!(m, Method::Kw | Method::BgKw | Method::BgLm | Method::BgAnova));
    let hard = needs_hard.then(|| hard_call(&pm));
    let hard_codes: Option<Vec<f64>> = opts
        .methods
        .iter()
        .any(|m| matches!(m, Method::BgLm))
        .then(|| {
            hard.as_ref()
                .expect("hard calls computed when bglm requested")
                .calls
                .iter()
                .map(|&g| g as f64)
                .collect()
        });
    let dosages = opts
        .methods
        .contains(&Method::Dosage)
        .then(|| dosage(&pm).dosages);

    let mut cells = Vec::with_capacity(opts.methods.len());
    let mut notes = Vec::new();
    let mut successes = 0usize;
    for &method in &opts.methods {
        let outcome: Result<TestResult, TestError> = match method {
            Method::Gkw => GkwTest::new(&pm, opts.tie_correct, None)
                .and_then(|t| t.statistic(rr)),
            // classical KW demands known labels; on probabilistic input the
            // hard calls stand in, which coincides with bgkw
            Method::Kw | Method::BgKw => {
                let calls = &hard.as_ref().expect("hard calls").calls;
                kruskal_wallis(calls, pm.k(), rr, opts.tie_correct).map(|t| t.tagged(method))
            }
            Method::BgLm => ols_slope_test(
                hard_codes.as_ref().expect("hard codes"),
                rr.values(),
                Method::BgLm,
            ),
            Method::BgAnova => {
                let calls = &hard.as_ref().expect("hard calls").calls;
                one_way_anova(calls, pm.k(), rr.values())
            }
            Method::Dosage => ols_slope_test(
                dosages.as_ref().expect("dosages"),
                rr.values(),
                Method::Dosage,
            ),
        };
        match outcome {
            Ok(res) => {
                for w in &res.warnings {
                    notes.push(format!("{}:{}", method.tag(), w));
                }
                cells.push(format_cells(&res));
                successes += 1;
            }
            Err(e) => {
                notes.push(format!("{}:err({})", method.tag(), compact_error(&e)));
                cells.push(na.to_string());
            }
        }
    }
    let warnings = if notes.is_empty() {
        "-".to_string()
    } else {
        notes.join(";")
    };
    ProcessedRecord {
        row: format!("{}\ttested\t{}\t{}", record.id, cells.join("\t"), warnings),
        tested: true,
        successes,
    }
}

fn format_cells(res: &TestResult) -> String {
    let neglog = -res.p_value.log10();
    let df = match res.denom_df {
        Some(d2) => format!("{},{}", res.df, d2),
        None => res.df.to_string(),
    };
    // 6 significant digits for eyeballing plus a full-precision column
    format!(
        "{:.6e}\t{}\t{:.5e}\t{}\t{:.6}",
        res.statistic, df, res.p_value, res.p_value, neglog
    )
}

fn compact_error(e: &TestError) -> String {
    match e {
        TestError::DegenerateGroup { group, .. } => format!("degenerate_group({group})"),
        TestError::SingularCorrelation => "singular_correlation".into(),
        TestError::EmptyGroup(g) => format!("empty_group({g})"),
        TestError::ConstantPredictor => "constant_predictor".into(),
        TestError::ZeroWithinVariance => "zero_within_variance".into(),
        TestError::InsufficientSample { .. } => "insufficient_sample".into(),
        other => other.to_string().replace([' ', '\t'], "_"),
    }
}
