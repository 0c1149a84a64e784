//! Shared test-outcome types and the error set of the statistical tests.

use std::fmt;
use thiserror::Error;

/// P-values are floored here so genome scans comparing -log10 p never
/// collapse to an exact zero.
pub const P_VALUE_FLOOR: f64 = 1e-300;

/// Which association test produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Generalized Kruskal-Wallis on the probability matrix.
    Gkw,
    /// Classical Kruskal-Wallis on known group labels.
    Kw,
    /// Kruskal-Wallis on best-guess (hard-call) groups.
    BgKw,
    /// Linear-model slope t-test on best-guess groups coded 0..k-1.
    BgLm,
    /// One-way ANOVA on best-guess groups.
    BgAnova,
    /// Linear-model slope t-test on expected group codes.
    Dosage,
}

impl Method {
    /// Short tag used in CLI flags and scan output columns.
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Gkw => "gkw",
            Method::Kw => "kw",
            Method::BgKw => "bgkw",
            Method::BgLm => "bglm",
            Method::BgAnova => "bganova",
            Method::Dosage => "dosage",
        }
    }

    pub fn parse(tag: &str) -> Option<Method> {
        match tag.trim().to_ascii_lowercase().as_str() {
            "gkw" => Some(Method::Gkw),
            "kw" => Some(Method::Kw),
            "bgkw" => Some(Method::BgKw),
            "bglm" => Some(Method::BgLm),
            "bganova" => Some(Method::BgAnova),
            "dosage" => Some(Method::Dosage),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Structured warning attached to a test result.
#[derive(Debug, Clone, PartialEq)]
pub enum TestWarning {
    /// An effective group size `sum_j p_ij` fell below the chi-square
    /// applicability recommendation of five.
    SmallEffectiveGroup { group: usize, effective_size: f64 },
}

impl fmt::Display for TestWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestWarning::SmallEffectiveGroup {
                group,
                effective_size,
            } => write!(f, "small_effective_group({group}, {effective_size:.3})"),
        }
    }
}

/// Outcome of one association test.
#[derive(Debug, Clone)]
pub struct TestResult {
    /// Non-negative test statistic (chi-square-scale for the rank tests,
    /// t^2 for slope tests, F for ANOVA).
    pub statistic: f64,
    /// Degrees of freedom of the reference distribution (numerator df for
    /// the F test).
    pub df: u64,
    /// Denominator degrees of freedom; present only for the F test.
    pub denom_df: Option<u64>,
    /// Survival-function p-value, floored at [`P_VALUE_FLOOR`].
    pub p_value: f64,
    pub method: Method,
    pub warnings: Vec<TestWarning>,
    pub tie_corrected: bool,
}

impl TestResult {
    /// Re-tag a result computed by a shared routine (e.g. the slope test
    /// serving both the dosage and the best-guess linear model).
    pub fn tagged(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// Apply the scan-safe p-value floor.
pub(crate) fn floor_p(p: f64) -> f64 {
    p.max(P_VALUE_FLOOR)
}

/// Errors from the statistical tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("group {group} carries no rank information (centered sum of squares {css:e})")]
    DegenerateGroup { group: usize, css: f64 },
    #[error("correlation matrix of the retained groups is singular")]
    SingularCorrelation,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("predictor is constant")]
    ConstantPredictor,
    #[error("need at least {needed} observations, got {got}")]
    InsufficientSample { needed: usize, got: usize },
    #[error("within-group variance is zero")]
    ZeroWithinVariance,
    #[error("group index {group} out of range for k = {k}")]
    GroupOutOfRange { group: usize, k: usize },
    #[error(transparent)]
    Dist(#[from] crate::dist::DistError),
}
