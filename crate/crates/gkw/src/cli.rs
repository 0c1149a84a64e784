//! Command line interface: `test`, `scan`, `simulate`, `oracle`, `qq`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (file/format/subject
//! problems), 3 numerical error (degenerate or singular inputs).

use crate::io::{
    load_sim_config, parse_phenotype_file, qq_data, read_pvalue_column, run_scan, ProbFile,
    ScanError, ScanOptions,
};
use crate::oracle::{enumerate_null, verify_moment_identities, OracleError, MAX_ENUMERATION_N};
use crate::rank::rank_midrank;
use crate::result::Method;
use crate::simkit::{run_coverage, run_power, run_type1, SimConfig, SIM_METHODS};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser)]
#[command(
    name = "gkw",
    version,
    about = "Rank-based k-sample association tests for probabilistic group membership"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chosen tests on one small dataset and print each result.
    Test(TestArgs),
    /// Stream a record-major probability file against one phenotype.
    Scan(ScanArgs),
    /// Drive the simulation experiments from a key=value config file.
    Simulate(SimulateArgs),
    /// Exhaustively enumerate the null for small records (N <= 9).
    Oracle(OracleArgs),
    /// Emit QQ plot data and a KS uniformity test for a p-value column.
    Qq(QqArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Probability file (strictly parsed).
    #[arg(long)]
    probs: PathBuf,
    /// Phenotype file (subject id, value).
    #[arg(long)]
    pheno: PathBuf,
    /// Comma-separated methods: gkw,kw,bgkw,bglm,bganova,dosage.
    #[arg(long, default_value = "gkw")]
    methods: String,
    #[arg(long = "tie-correction", default_value = "on")]
    tie_correction: OnOff,
    #[arg(long = "min-group-sum", default_value_t = 0.0)]
    min_group_sum: f64,
    /// Output path (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    probs: PathBuf,
    #[arg(long)]
    pheno: PathBuf,
    /// Comma-separated methods: gkw,kw,bgkw,bglm,bganova,dosage.
    #[arg(long, default_value = "gkw")]
    methods: String,
    /// Skip records with any effective group size below this.
    #[arg(long = "min-group-sum", default_value_t = 5.0)]
    min_group_sum: f64,
    /// Permute the phenotype with this seed before ranking (null scan).
    #[arg(long)]
    permute: Option<u64>,
    /// Worker threads (0 = auto).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long = "tie-correction", default_value = "on")]
    tie_correction: OnOff,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment to run.
    kind: SimKind,
    /// key=value config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config test level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Worker threads (0 = auto).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// TSV output path (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Machine-readable key=value report path
    /// (default: `<out>.kv`, or `gkw_sim_report.kv`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// For `type1`: also write per-replicate generalized-KW p-values as a
    /// TSV usable by `gkw qq`.
    #[arg(long = "pvalues-out")]
    pvalues_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    Type1,
    Power,
    Coverage,
}

#[derive(Args)]
struct OracleArgs {
    /// Probability file; every record must have N <= 9 subjects.
    #[arg(long)]
    probs: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QqArgs {
    /// TSV file holding p-values.
    #[arg(long)]
    input: PathBuf,
    /// Column name or 0-based index (scan output stores full precision in
    /// `<method>_p_full`).
    #[arg(long, default_value = "gkw_p_full")]
    column: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl From<OnOff> for bool {
    fn from(v: OnOff) -> bool {
        matches!(v, OnOff::On)
    }
}

enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<crate::io::IoFormatError> for CliError {
    fn from(e: crate::io::IoFormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::simkit::SimError> for CliError {
    fn from(e: crate::simkit::SimError) -> Self {
        match e {
            crate::simkit::SimError::Test(t) => CliError::Numeric(t.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLargeForEnumeration { .. } => CliError::Data(e.to_string()),
            OracleError::Test(t) => CliError::Numeric(t.to_string()),
        }
    }
}

/// Parse `argv` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version output
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Qq(args) => cmd_qq(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("gkw: error: {}", e.message());
            e.code()
        }
    }
}

fn parse_methods(list: &str) -> Result<Vec<Method>, CliError> {
    let mut methods = Vec::new();
    for token in list.split(',') {
        let m = Method::parse(token)
            .ok_or_else(|| CliError::Usage(format!("unknown method {token:?}")))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(CliError::Usage("no methods requested".into()));
    }
    Ok(methods)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn cmd_test(args: TestArgs) -> Result<(), CliError> {
    let methods = parse_methods(&args.methods)?;
    let prob_file = ProbFile::parse(&args.probs)?;
    let (pheno_ids, pheno_values) = parse_phenotype_file(&args.pheno)?;

    // reconcile order by id
    let mut y = Vec::with_capacity(prob_file.subject_ids.len());
    for id in &prob_file.subject_ids {
        match pheno_ids.iter().position(|p| p == id) {
            Some(i) => y.push(pheno_values[i]),
            None => {
                return Err(CliError::Data(format!("subject {id:?} has no phenotype")));
            }
        }
    }
    if pheno_ids.len() != prob_file.subject_ids.len() {
        return Err(CliError::Data(format!(
            "{} phenotype subjects vs {} in the probability file",
            pheno_ids.len(),
            prob_file.subject_ids.len()
        )));
    }
    let rr = rank_midrank(&y).map_err(|e| CliError::Data(e.to_string()))?;

    let opts = ScanOptions {
        methods,
        min_group_sum: args.min_group_sum,
        permute_seed: None,
        workers: 1,
        tie_correct: args.tie_correction.into(),
    };
    let mut out = open_out(&args.out)?;
    writeln!(out, "{}", crate::io::scan_header(&opts.methods))?;
    let mut successes = 0usize;
    for record in &prob_file.records {
        let processed = crate::io::scan_process_record(record, &rr, &opts);
        writeln!(out, "{}", processed.row)?;
        successes += processed.successes;
        // surface warnings on stderr as well
        let warnings = processed.row.rsplit('\t').next().unwrap_or("-");
        if warnings != "-" {
            eprintln!("gkw: record {}: {}", record.id, warnings);
        }
    }
    out.flush()?;
    if !prob_file.records.is_empty() && successes == 0 {
        return Err(CliError::Numeric(
            "no requested test could be computed on any record".into(),
        ));
    }
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<(), CliError> {
    let opts = ScanOptions {
        methods: parse_methods(&args.methods)?,
        min_group_sum: args.min_group_sum,
        permute_seed: args.permute,
        workers: args.workers,
        tie_correct: args.tie_correction.into(),
    };
    let mut out = open_out(&args.out)?;
    let summary = run_scan(&args.probs, &args.pheno, &opts, &mut out)?;
    eprintln!(
        "gkw: scanned {} records ({} tested, {} skipped)",
        summary.records, summary.tested, summary.skipped
    );
    Ok(())
}

fn with_pool<F, R>(workers: usize, f: F) -> Result<R, CliError>
where
    F: FnOnce() -> R + Send,
    R: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Data(e.to_string()))?;
    Ok(pool.install(f))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut grid = load_sim_config(&args.config)?;
    if let Some(seed) = args.seed {
        grid.base.seed = seed;
    }
    if let Some(alpha) = args.alpha {
        grid.base.alpha = alpha;
    }
    grid.base
        .validate()
        .map_err(|e| CliError::Data(e.to_string()))?;

    let mut out = open_out(&args.out)?;
    let report_path = args.report.clone().unwrap_or_else(|| match &args.out {
        Some(p) => p.with_extension("kv"),
        None => PathBuf::from("gkw_sim_report.kv"),
    });
    let mut kv: Vec<String> = Vec::new();

    let mut pvalue_rows: Vec<String> = Vec::new();
    match args.kind {
        SimKind::Type1 => {
            for &maf in &grid.mafs.clone() {
                let mut reports = Vec::new();
                for &a in &grid.a_levels.clone() {
                    let cfg = SimConfig {
                        maf,
                        a,
                        ..grid.base.clone()
                    };
                    let report = with_pool(args.workers, || run_type1(&cfg))??;
                    push_kv_type1(&mut kv, &report);
                    if args.pvalues_out.is_some() {
                        for (i, p) in report.gkw_p_values.iter().enumerate() {
                            pvalue_rows.push(format!("{maf}\t{a}\t{i}\t{p}"));
                        }
                    }
                    reports.push(report);
                }
                writeln!(
                    out,
                    "# type1 rates  maf={maf}  alpha={}  n={}  m_null={}",
                    grid.base.alpha, grid.base.n, grid.base.m_null
                )?;
                write_grid_table(
                    &mut out,
                    &grid.a_levels,
                    reports.iter().map(|r| r.rates).collect(),
                )?;
                writeln!(out, "# gkw null p-value KS uniformity per a level")?;
                write!(out, "ks_p")?;
                for r in &reports {
                    write!(out, "\t{:.4}", r.ks_p)?;
                }
                writeln!(out)?;
            }
        }
        SimKind::Power => {
            for &maf in &grid.mafs.clone() {
                let mut reports = Vec::new();
                for &a in &grid.a_levels.clone() {
                    let cfg = SimConfig {
                        maf,
                        a,
                        ..grid.base.clone()
                    };
                    let report = with_pool(args.workers, || run_power(&cfg))??;
                    push_kv_power(&mut kv, &report);
                    reports.push(report);
                }
                writeln!(
                    out,
                    "# power  maf={maf}  alpha={}  n={}  m_alt={}",
                    grid.base.alpha, grid.base.n, grid.base.m_alt
                )?;
                write_grid_table(
                    &mut out,
                    &grid.a_levels,
                    reports.iter().map(|r| r.power).collect(),
                )?;
                writeln!(out, "# relative efficiency vs gkw")?;
                write_grid_table(
                    &mut out,
                    &grid.a_levels,
                    reports.iter().map(|r| r.relative_efficiency).collect(),
                )?;
            }
        }
        SimKind::Coverage => {
            writeln!(out, "# hard-call coverage")?;
            writeln!(out, "maf\ta\trows\taverage\tg0\tg1\tg2")?;
            for &maf in &grid.mafs.clone() {
                for &a in &grid.a_levels.clone() {
                    let cfg = SimConfig {
                        maf,
                        a,
                        ..grid.base.clone()
                    };
                    let r = with_pool(args.workers, || run_coverage(&cfg))??;
                    writeln!(
                        out,
                        "{maf}\t{a}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                        r.rows, r.average, r.per_group[0], r.per_group[1], r.per_group[2]
                    )?;
                    kv.push(format!("coverage.maf{maf}.a{a}.rows={}", r.rows));
                    kv.push(format!("coverage.maf{maf}.a{a}.average={}", r.average));
                    for (g, v) in r.per_group.iter().enumerate() {
                        kv.push(format!("coverage.maf{maf}.a{a}.group{g}={v}"));
                    }
                }
            }
        }
    }
    out.flush()?;
    std::fs::write(&report_path, kv.join("\n") + "\n")?;
    eprintln!("gkw: structured report written to {}", report_path.display());
    if let Some(path) = &args.pvalues_out {
        let mut body = String::from("maf\ta\treplicate\tgkw_p\n");
        body.push_str(&pvalue_rows.join("\n"));
        body.push('\n');
        std::fs::write(path, body)?;
        eprintln!("gkw: per-replicate p-values written to {}", path.display());
    }
    Ok(())
}

fn write_grid_table(
    out: &mut dyn Write,
    a_levels: &[f64],
    columns: Vec<[f64; 5]>,
) -> Result<(), CliError> {
    write!(out, "test")?;
    for a in a_levels {
        write!(out, "\ta={a}")?;
    }
    writeln!(out)?;
    for (t, method) in SIM_METHODS.iter().enumerate() {
        write!(out, "{}", method.tag())?;
        for col in &columns {
            write!(out, "\t{:.4}", col[t])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn push_kv_type1(kv: &mut Vec<String>, r: &crate::simkit::Type1Report) {
    let p = format!("type1.maf{}.a{}", r.maf, r.a);
    kv.push(format!("{p}.n={}", r.n));
    kv.push(format!("{p}.alpha={}", r.alpha));
    kv.push(format!("{p}.m_null={}", r.m_null));
    for (t, method) in SIM_METHODS.iter().enumerate() {
        kv.push(format!("{p}.rate.{}={}", method.tag(), r.rates[t]));
        kv.push(format!("{p}.threshold.{}={}", method.tag(), r.thresholds[t]));
        kv.push(format!("{p}.failures.{}={}", method.tag(), r.failures[t]));
    }
    kv.push(format!("{p}.ks_d={}", r.ks_d));
    kv.push(format!("{p}.ks_p={}", r.ks_p));
}

fn push_kv_power(kv: &mut Vec<String>, r: &crate::simkit::PowerReport) {
    let p = format!("power.maf{}.a{}", r.maf, r.a);
    kv.push(format!("{p}.n={}", r.n));
    kv.push(format!("{p}.alpha={}", r.alpha));
    kv.push(format!("{p}.m_alt={}", r.m_alt));
    for (t, method) in SIM_METHODS.iter().enumerate() {
        kv.push(format!("{p}.power.{}={}", method.tag(), r.power[t]));
        kv.push(format!(
            "{p}.releff.{}={}",
            method.tag(),
            r.relative_efficiency[t]
        ));
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let prob_file = ProbFile::parse(&args.probs)?;
    let mut out = open_out(&args.out)?;
    writeln!(
        out,
        "id\tn\tk\tmax_mean_err\tmax_cov_err\tone_hot_corr_err\tpass\ttail90\ttail95\ttail99"
    )?;
    for record in &prob_file.records {
        let pm = record
            .to_matrix()
            .map_err(|e| CliError::Data(e.to_string()))?;
        let check = verify_moment_identities(&pm)?;
        let corr = check
            .one_hot_corr_err
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "NA".into());
        let tails = match enumerate_null(&pm, MAX_ENUMERATION_N) {
            Ok(exact) => exact
                .tail_probs
                .iter()
                .map(|(_, t)| format!("{t:.6}"))
                .collect::<Vec<_>>()
                .join("\t"),
            // degenerate records keep their moment check but have no statistic
            Err(OracleError::Test(_)) => "NA\tNA\tNA".to_string(),
            Err(e) => return Err(e.into()),
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{:.3e}\t{:.3e}\t{}\t{}\t{}",
            record.id,
            pm.n(),
            pm.k(),
            check.max_mean_err,
            check.max_cov_err,
            corr,
            check.pass,
            tails
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_qq(args: QqArgs) -> Result<(), CliError> {
    let pvals = read_pvalue_column(&args.input, &args.column)?;
    let qq = qq_data(&pvals).map_err(|e| CliError::Numeric(e.to_string()))?;
    let mut out = open_out(&args.out)?;
    writeln!(out, "# n={}", pvals.len())?;
    writeln!(out, "# ks_d={}", qq.ks_d)?;
    writeln!(out, "# ks_p={}", qq.ks_p)?;
    writeln!(out, "expected_neglog10p\tobserved_neglog10p")?;
    for (e, o) in &qq.points {
        writeln!(out, "{e:.6}\t{o:.6}")?;
    }
    out.flush()?;
    Ok(())
}
