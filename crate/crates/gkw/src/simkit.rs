//! Simulation harness: genotype, probability and phenotype generators plus
//! the type-1 error, power / relative-efficiency and hard-call coverage
//! experiments.
//!
//! One probability matrix is generated per (maf, a) cell and reused across
//! all response replicates, so the experiments re-simulate only the
//! response data; `fresh_probs` switches to a fresh matrix per replicate
//! for robustness checks against random group probabilities. Replicates
//! draw their RNG streams from (seed, replicate index) only, so results are
//! independent of worker count and reproducible bit for bit.

use crate::classic::{dosage, hard_call, kruskal_wallis, ols_slope_test, one_way_anova};
use crate::dist::{
    ks_uniform, sample_dirichlet, sample_multinomial_index, sample_normal, DistError, RngState,
};
use crate::gkw::GkwTest;
use crate::prob::{ProbError, ProbMatrix};
use crate::rank::{rank_midrank, RankError};
use crate::result::{Method, TestError};
use rayon::prelude::*;
use thiserror::Error;

/// Row target for coverage runs; with the default n = 1000 this yields 400
/// matrices and a Monte Carlo standard error comfortably below the +/-0.01
/// reporting tolerance.
pub const COVERAGE_TARGET_ROWS: usize = 400_000;

/// The five tests compared by the simulation experiments, in report order.
pub const SIM_METHODS: [Method; 5] = [
    Method::BgLm,
    Method::BgAnova,
    Method::BgKw,
    Method::Dosage,
    Method::Gkw,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("minor allele frequency must be in (0, 0.5), got {0}")]
    InvalidMaf(f64),
    #[error("Dirichlet concentration must be in (0, 1], got {0}")]
    InvalidA(f64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Test(#[from] TestError),
}

/// Phenotype generating model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhenotypeModel {
    /// Normal responses with means increasing additively in the group code.
    NormalAdditive,
    /// Exponentiated normal responses (monotone, heavy-tailed).
    NonNormal,
    /// Normal responses with the top-group mean below the middle one.
    NonAdditive,
}

impl PhenotypeModel {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal_additive" | "normal" => Some(PhenotypeModel::NormalAdditive),
            "nonnormal" | "non_normal" => Some(PhenotypeModel::NonNormal),
            "nonadditive" | "non_additive" => Some(PhenotypeModel::NonAdditive),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PhenotypeModel::NormalAdditive => "normal_additive",
            PhenotypeModel::NonNormal => "nonnormal",
            PhenotypeModel::NonAdditive => "nonadditive",
        }
    }
}

/// Full description of one simulation cell.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Subjects per replicate.
    pub n: usize,
    /// Minor allele frequency in (0, 0.5).
    pub maf: f64,
    /// Dirichlet concentration for the correct genotype category, in (0, 1];
    /// the other two categories receive (1 - a) / 2. a = 1 yields exact
    /// one-hot matrices.
    pub a: f64,
    /// Group means under the alternative.
    pub means: [f64; 3],
    /// Common response standard deviation.
    pub sigma: f64,
    /// Test level.
    pub alpha: f64,
    /// Replicates under the null.
    pub m_null: usize,
    /// Replicates under the alternative.
    pub m_alt: usize,
    pub model: PhenotypeModel,
    pub seed: u64,
    /// Draw a fresh probability matrix per replicate instead of fixing one
    /// per cell.
    pub fresh_probs: bool,
}

impl Default for SimConfig {
    /// Desk-scale defaults: the reference design (n = 1000, maf 0.2,
    /// sigma 1, means 1.75/2/2.25, alpha 0.01) with 2,000 null and 1,000
    /// alternative replicates.
    fn default() -> Self {
        SimConfig {
            n: 1000,
            maf: 0.2,
            a: 1.0,
            means: [1.75, 2.0, 2.25],
            sigma: 1.0,
            alpha: 0.01,
            m_null: 2000,
            m_alt: 1000,
            model: PhenotypeModel::NormalAdditive,
            seed: 20260810,
            fresh_probs: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.maf > 0.0 && self.maf < 0.5) {
            return Err(SimError::InvalidMaf(self.maf));
        }
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(SimError::InvalidA(self.a));
        }
        if !(self.sigma > 0.0) {
            return Err(SimError::InvalidConfig(format!("sigma = {}", self.sigma)));
        }
        if self.n < 10 {
            return Err(SimError::InvalidConfig(format!("n = {} < 10", self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SimError::InvalidConfig(format!("alpha = {}", self.alpha)));
        }
        if self.m_null == 0 || self.m_alt == 0 {
            return Err(SimError::InvalidConfig("zero replicates".into()));
        }
        Ok(())
    }
}

/// Hardy-Weinberg genotype cell probabilities ((1-q)^2, 2q(1-q), q^2).
pub fn hwe_probs(maf: f64) -> Result<[f64; 3], SimError> {
    if !(maf > 0.0 && maf < 0.5) {
        return Err(SimError::InvalidMaf(maf));
    }
    let p = 1.0 - maf;
    Ok([p * p, 2.0 * maf * p, maf * maf])
}

/// Genotypes 0/1/2 drawn from the Hardy-Weinberg multinomial.
pub fn gen_genotypes(n: usize, maf: f64, rng: &mut RngState) -> Result<Vec<usize>, SimError> {
    let probs = hwe_probs(maf)?;
    (0..n)
        .map(|_| Ok(sample_multinomial_index(&probs, rng)?))
        .collect()
}

/// Probabilistic genotypes: exact one-hot rows when a = 1, otherwise a
/// Dirichlet row per subject with concentration `a` at the true genotype
/// and (1 - a) / 2 at the other two.
pub fn gen_prob_matrix(
    genotypes: &[usize],
    a: f64,
    rng: &mut RngState,
) -> Result<ProbMatrix, SimError> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(SimError::InvalidA(a));
    }
    if a == 1.0 {
        return Ok(ProbMatrix::one_hot(genotypes, 3)?);
    }
    let off = (1.0 - a) / 2.0;
    let mut rows = Vec::with_capacity(genotypes.len());
    for &g in genotypes {
        let mut alpha = [off; 3];
        alpha[g] = a;
        rows.push(sample_dirichlet(&alpha, rng)?);
    }
    Ok(ProbMatrix::from_rows(&rows)?)
}

/// Group means in effect for one replicate.
fn effective_means(cfg: &SimConfig, null_model: bool) -> [f64; 3] {
    if null_model {
        let m = (cfg.means[0] + cfg.means[1] + cfg.means[2]) / 3.0;
        return [m, m, m];
    }
    match cfg.model {
        PhenotypeModel::NormalAdditive | PhenotypeModel::NonNormal => cfg.means,
        // swap the means of the top two groups
        PhenotypeModel::NonAdditive => [cfg.means[0], cfg.means[2], cfg.means[1]],
    }
}

/// Normal responses at the model means; the non-normal model exponentiates
/// each draw afterwards.
pub fn gen_phenotype(
    genotypes: &[usize],
    cfg: &SimConfig,
    null_model: bool,
    rng: &mut RngState,
) -> Result<Vec<f64>, SimError> {
    let means = effective_means(cfg, null_model);
    let mut y = Vec::with_capacity(genotypes.len());
    for &g in genotypes {
        let v = sample_normal(means[g], cfg.sigma, rng)?;
        y.push(if cfg.model == PhenotypeModel::NonNormal {
            v.exp()
        } else {
            v
        });
    }
    Ok(y)
}

/// Statistic and p-value of one test on one replicate; NaN marks a
/// recorded per-replicate failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

const FAILED: ReplicateOutcome = ReplicateOutcome {
    statistic: f64::NAN,
    p_value: f64::NAN,
};

// RNG stream domains under the master seed.
const DOMAIN_GENOTYPES: u64 = 0;
const DOMAIN_PROBS: u64 = 1;
const DOMAIN_NULL: u64 = 2;
const DOMAIN_ALT: u64 = 3;
const DOMAIN_COVERAGE: u64 = 4;

struct CellTests {
    hard_calls: Vec<usize>,
    hard_codes: Vec<f64>,
    dosages: Vec<f64>,
    gkw: GkwTest,
}

impl CellTests {
    fn build(pm: &ProbMatrix) -> Result<Self, SimError> {
        let hc = hard_call(pm);
        let hard_codes = hc.calls.iter().map(|&g| g as f64).collect();
        let dosages = dosage(pm).dosages;
        let gkw = GkwTest::new(pm, true, None)?;
        Ok(CellTests {
            hard_calls: hc.calls,
            hard_codes,
            dosages,
            gkw,
        })
    }

    /// Run the five tests; failures become NaN outcomes.
    fn run(&self, y: &[f64]) -> [ReplicateOutcome; 5] {
        let rr = match rank_midrank(y) {
            Ok(rr) => rr,
            Err(_) => return [FAILED; 5],
        };
        let wrap = |r: Result<crate::result::TestResult, TestError>| match r {
            Ok(t) => ReplicateOutcome {
                statistic: t.statistic,
                p_value: t.p_value,
            },
            Err(_) => FAILED,
        };
        [
            wrap(ols_slope_test(&self.hard_codes, y, Method::BgLm)),
            wrap(one_way_anova(&self.hard_calls, 3, y)),
            wrap(kruskal_wallis(&self.hard_calls, 3, &rr, true)),
            wrap(ols_slope_test(&self.dosages, y, Method::Dosage)),
            wrap(self.gkw.statistic(&rr)),
        ]
    }
}

/// Per-replicate outcomes of the five tests under the null or the
/// alternative. Row order follows the replicate index; the result is
/// bit-reproducible from (cfg, seed) regardless of worker count.
pub fn simulate_statistics(
    cfg: &SimConfig,
    null_model: bool,
) -> Result<Vec<[ReplicateOutcome; 5]>, SimError> {
    cfg.validate()?;
    let root = RngState::new(cfg.seed);
    let genotypes = gen_genotypes(cfg.n, cfg.maf, &mut root.split(DOMAIN_GENOTYPES))?;
    let m = if null_model { cfg.m_null } else { cfg.m_alt };
    let domain = if null_model { DOMAIN_NULL } else { DOMAIN_ALT };

    if cfg.fresh_probs {
        let prob_root = root.split(DOMAIN_PROBS);
        let rep_root = root.split(domain);
        (0..m)
            .into_par_iter()
            .map(|i| {
                let pm = gen_prob_matrix(&genotypes, cfg.a, &mut prob_root.split(i as u64))?;
                let tests = CellTests::build(&pm)?;
                let y = gen_phenotype(&genotypes, cfg, null_model, &mut rep_root.split(i as u64))?;
                Ok(tests.run(&y))
            })
            .collect()
    } else {
        let pm = gen_prob_matrix(&genotypes, cfg.a, &mut root.split(DOMAIN_PROBS))?;
        let tests = CellTests::build(&pm)?;
        let rep_root = root.split(domain);
        (0..m)
            .into_par_iter()
            .map(|i| {
                let y = gen_phenotype(&genotypes, cfg, null_model, &mut rep_root.split(i as u64))?;
                Ok(tests.run(&y))
            })
            .collect()
    }
}

/// Empirical rejection threshold: the key'th largest statistic with
/// key = round(alpha * m), so that exactly key of the m null statistics
/// sit at or above it.
fn empirical_threshold(stats: &mut [f64], alpha: f64) -> f64 {
    stats.sort_by(|x, y| x.partial_cmp(y).expect("finite statistics"));
    let m = stats.len();
    let key = ((alpha * m as f64).round() as usize).clamp(1, m);
    stats[m - key]
}

/// Type-1 error experiment for one cell.
#[derive(Debug, Clone)]
pub struct Type1Report {
    pub n: usize,
    pub maf: f64,
    pub a: f64,
    pub alpha: f64,
    pub m_null: usize,
    /// Empirical rejection rates at the nominal level, in [`SIM_METHODS`]
    /// order.
    pub rates: [f64; 5],
    /// Empirical (1 - alpha) statistic thresholds used later for power.
    pub thresholds: [f64; 5],
    pub failures: [usize; 5],
    /// KS uniformity of the generalized KW null p-values.
    pub ks_d: f64,
    pub ks_p: f64,
    /// Per-replicate generalized KW p-values (QQ plot input).
    pub gkw_p_values: Vec<f64>,
}

/// Power and relative-efficiency experiment for one cell.
#[derive(Debug, Clone)]
pub struct PowerReport {
    pub n: usize,
    pub maf: f64,
    pub a: f64,
    pub alpha: f64,
    pub m_alt: usize,
    pub power: [f64; 5],
    /// power(test) / power(GKW).
    pub relative_efficiency: [f64; 5],
    /// Null thresholds the rejections were taken at.
    pub thresholds: [f64; 5],
    pub failures: [usize; 5],
}

/// Hard-call coverage experiment for one cell.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub maf: f64,
    pub a: f64,
    pub rows: usize,
    /// Fraction of rows whose hard call equals the true genotype.
    pub average: f64,
    /// Same fraction conditioned on the true genotype 0, 1, 2.
    pub per_group: [f64; 3],
}

/// Fix one probability matrix, simulate `m_null` response vectors, and
/// report each test's rejection rate at the nominal level together with
/// its empirical threshold.
pub fn run_type1(cfg: &SimConfig) -> Result<Type1Report, SimError> {
    let outcomes = simulate_statistics(cfg, true)?;
    let mut rates = [0.0; 5];
    let mut thresholds = [0.0; 5];
    let mut failures = [0usize; 5];
    for t in 0..5 {
        let mut stats = Vec::with_capacity(outcomes.len());
        let mut rejections = 0usize;
        for rep in &outcomes {
            let o = rep[t];
            if o.statistic.is_nan() {
                failures[t] += 1;
                continue;
            }
            stats.push(o.statistic);
            if o.p_value <= cfg.alpha {
                rejections += 1;
            }
        }
        if stats.is_empty() {
            rates[t] = f64::NAN;
            thresholds[t] = f64::NAN;
            continue;
        }
        rates[t] = rejections as f64 / stats.len() as f64;
        thresholds[t] = empirical_threshold(&mut stats, cfg.alpha);
    }
    let gkw_p_values: Vec<f64> = outcomes
        .iter()
        .map(|rep| rep[4].p_value)
        .filter(|p| !p.is_nan())
        .collect();
    let (ks_d, ks_p) = ks_uniform(&gkw_p_values)?;
    Ok(Type1Report {
        n: cfg.n,
        maf: cfg.maf,
        a: cfg.a,
        alpha: cfg.alpha,
        m_null: cfg.m_null,
        rates,
        thresholds,
        failures,
        ks_d,
        ks_p,
        gkw_p_values,
    })
}

/// Simulate `m_alt` alternative responses and reject at the thresholds
/// calibrated on the same cell's null run; report power and efficiency
/// relative to the generalized KW test.
pub fn run_power(cfg: &SimConfig) -> Result<PowerReport, SimError> {
    let thresholds = run_type1(cfg)?.thresholds;
    let outcomes = simulate_statistics(cfg, false)?;
    let mut power = [0.0; 5];
    let mut failures = [0usize; 5];
    for t in 0..5 {
        let mut rejected = 0usize;
        let mut valid = 0usize;
        for rep in &outcomes {
            let o = rep[t];
            if o.statistic.is_nan() {
                failures[t] += 1;
                continue;
            }
            valid += 1;
            if o.statistic >= thresholds[t] {
                rejected += 1;
            }
        }
        power[t] = if valid == 0 {
            f64::NAN
        } else {
            rejected as f64 / valid as f64
        };
    }
    let gkw_power = power[4];
    let mut relative_efficiency = [0.0; 5];
    for t in 0..5 {
        relative_efficiency[t] = power[t] / gkw_power;
    }
    Ok(PowerReport {
        n: cfg.n,
        maf: cfg.maf,
        a: cfg.a,
        alpha: cfg.alpha,
        m_alt: cfg.m_alt,
        power,
        relative_efficiency,
        thresholds,
        failures,
    })
}

/// Generate fresh genotype/probability pairs until at least
/// [`COVERAGE_TARGET_ROWS`] rows are seen and report how often the hard
/// call recovers the true genotype.
pub fn run_coverage(cfg: &SimConfig) -> Result<CoverageReport, SimError> {
    cfg.validate()?;
    let root = RngState::new(cfg.seed);
    let reps = COVERAGE_TARGET_ROWS.div_ceil(cfg.n).max(1);
    let cov_root = root.split(DOMAIN_COVERAGE);
    let counts: Result<Vec<[usize; 6]>, SimError> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = cov_root.split(i as u64);
            let genotypes = gen_genotypes(cfg.n, cfg.maf, &mut rng)?;
            let pm = gen_prob_matrix(&genotypes, cfg.a, &mut rng)?;
            let calls = hard_call(&pm).calls;
            // [matches_0, total_0, matches_1, total_1, matches_2, total_2]
            let mut c = [0usize; 6];
            for (&g, &call) in genotypes.iter().zip(&calls) {
                c[2 * g + 1] += 1;
                if g == call {
                    c[2 * g] += 1;
                }
            }
            Ok(c)
        })
        .collect();
    let mut totals = [0usize; 6];
    for c in counts? {
        for (acc, v) in totals.iter_mut().zip(c) {
            *acc += v;
        }
    }
    let rows = totals[1] + totals[3] + totals[5];
    let matches = totals[0] + totals[2] + totals[4];
    let per_group = [
        totals[0] as f64 / totals[1] as f64,
        totals[2] as f64 / totals[3] as f64,
        totals[4] as f64 / totals[5] as f64,
    ];
    Ok(CoverageReport {
        maf: cfg.maf,
        a: cfg.a,
        rows,
        average: matches as f64 / rows as f64,
        per_group,
    })
}
