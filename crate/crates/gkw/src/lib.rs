//! Generalized Kruskal--Wallis testing for data with uncertain group membership.
//!
//! The classical Kruskal--Wallis H-test compares k samples through group
//! rank-sums and assumes every observation is assigned to exactly one group.
//! In many settings (imputed SNP genotypes being the motivating one) group
//! membership is only known as a probability vector per subject. This crate
//! implements the generalization that replaces each group rank-sum with the
//! probability-weighted rank-sum `R*_i = sum_j p_ij r_j`, standardizes any
//! k-1 of them by their exact conditional moments under the null, and forms
//! a quadratic-form statistic with an asymptotic chi-square(k-1) null
//! distribution.
//!
//! Alongside the main test the crate provides:
//!
//! - the comparator tests used in method evaluations: classical
//!   Kruskal--Wallis, best-guess (hard-call) KW / linear model / ANOVA, and
//!   dosage regression ([`classic`]);
//! - self-contained special functions, a splittable deterministic RNG and
//!   the samplers needed for simulation ([`dist`]);
//! - an exhaustive-permutation oracle that validates the closed-form moments
//!   on small samples ([`oracle`]);
//! - a simulation harness for type-1 error, power, relative efficiency and
//!   hard-call coverage experiments ([`simkit`]);
//! - TSV file formats, a parallel batch scan runner and the `gkw` command
//!   line tool ([`io`], [`cli`]).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod classic;
pub mod cli;
pub mod dist;
pub mod gkw;
pub mod io;
pub mod oracle;
pub mod prob;
pub mod rank;
pub mod result;
pub mod simkit;

pub use crate::gkw::{
    conditional_moments, gkw_null_statistics, gkw_statistic, weighted_rank_sums, GkwTest,
};
pub use crate::prob::{GroupMoments, ProbMatrix};
pub use crate::rank::{rank_midrank, RankedResponse};
pub use crate::result::{Method, TestResult, TestWarning};
