//! Row-stochastic group-membership probability matrices.

use thiserror::Error;

/// Tolerance on row sums before a row is rejected; rows inside the
/// tolerance are renormalized. Real imputation output carries 3-decimal
/// probabilities whose sums miss 1 by rounding.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("need at least as many subjects as groups ({k}), got {n}")]
    TooFewSubjects { n: usize, k: usize },
    #[error("probability {value} at row {row}, group {group} outside [0, 1]")]
    EntryOutOfRange { row: usize, group: usize, value: f64 },
    #[error("row {row} sums to {sum}, outside 1 +/- {ROW_SUM_TOLERANCE}")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("data length {len} does not factor into rows of {k}")]
    ShapeMismatch { len: usize, k: usize },
    #[error("group index {group} out of range for k = {k}")]
    GroupOutOfRange { group: usize, k: usize },
}

/// N x k matrix of group-membership probabilities, stored subject-major.
/// Row j holds P(G_j = i) for i = 0..k. Construction validates entries and
/// row sums, then renormalizes each row by its sum (a bit-exact no-op for
/// rows already summing to exactly one).
#[derive(Debug, Clone)]
pub struct ProbMatrix {
    data: Vec<f64>,
    n: usize,
    k: usize,
}

/// Column summaries of a [`ProbMatrix`] entering the conditional moments:
/// effective group sizes, column means, and centered second moments.
#[derive(Debug, Clone)]
pub struct GroupMoments {
    /// `sum_j p_ij` per group (effective group sizes).
    pub col_sums: Vec<f64>,
    /// `pbar_i = sum_j p_ij / N`.
    pub col_means: Vec<f64>,
    /// `sum_j (p_ij - pbar_i)^2` per group.
    pub centered_ss: Vec<f64>,
    /// k x k row-major matrix `sum_j (p_ij - pbar_i)(p_i'j - pbar_i')`.
    pub centered_cross: Vec<f64>,
}

impl ProbMatrix {
    /// Build from a flat subject-major buffer of length n * k.
    pub fn from_flat(data: Vec<f64>, k: usize) -> Result<Self, ProbError> {
        if k < 2 {
            return Err(ProbError::TooFewGroups(k));
        }
        if data.is_empty() || !data.len().is_multiple_of(k) {
            return Err(ProbError::ShapeMismatch { len: data.len(), k });
        }
        let n = data.len() / k;
        if n < k {
            return Err(ProbError::TooFewSubjects { n, k });
        }
        let mut data = data;
        for row in 0..n {
            let slice = &mut data[row * k..(row + 1) * k];
            let mut sum = 0.0;
            for (group, &value) in slice.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) || value.is_nan() {
                    return Err(ProbError::EntryOutOfRange { row, group, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(ProbError::RowSumViolation { row, sum });
            }
            for value in slice.iter_mut() {
                *value /= sum;
            }
        }
        Ok(ProbMatrix { data, n, k })
    }

    /// Build from per-subject rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ProbError> {
        let k = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * k);
        for row in rows {
            if row.len() != k {
                return Err(ProbError::ShapeMismatch { len: row.len(), k });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, k)
    }

    /// Indicator matrix for known group labels: row j is one-hot at
    /// `groups[j]`.
    pub fn one_hot(groups: &[usize], k: usize) -> Result<Self, ProbError> {
        if k < 2 {
            return Err(ProbError::TooFewGroups(k));
        }
        let n = groups.len();
        if n < k {
            return Err(ProbError::TooFewSubjects { n, k });
        }
        let mut data = vec![0.0; n * k];
        for (j, &g) in groups.iter().enumerate() {
            if g >= k {
                return Err(ProbError::GroupOutOfRange { group: g, k });
            }
            data[j * k + g] = 1.0;
        }
        Ok(ProbMatrix { data, n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Probability row for subject j.
    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.k..(j + 1) * self.k]
    }

    #[inline]
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.k + i]
    }

    /// Effective group sizes `sum_j p_ij`.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.k];
        for j in 0..self.n {
            let row = self.row(j);
            for (s, &p) in sums.iter_mut().zip(row) {
                *s += p;
            }
        }
        sums
    }

    /// True when each row is an exact indicator (a single 1.0, rest 0.0).
    pub fn is_one_hot(&self) -> bool {
        (0..self.n).all(|j| {
            let row = self.row(j);
            row.iter().filter(|&&p| p == 1.0).count() == 1
                && row.iter().filter(|&&p| p == 0.0).count() == self.k - 1
        })
    }

    /// Column summaries used by the conditional moments.
    pub fn moments(&self) -> GroupMoments {
        let k = self.k;
        let col_sums = self.col_sums();
        let col_means: Vec<f64> = col_sums.iter().map(|s| s / self.n as f64).collect();
        let mut centered_cross = vec![0.0; k * k];
        for j in 0..self.n {
            let row = self.row(j);
            for a in 0..k {
                let da = row[a] - col_means[a];
                for b in a..k {
                    centered_cross[a * k + b] += da * (row[b] - col_means[b]);
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                centered_cross[a * k + b] = centered_cross[b * k + a];
            }
        }
        let centered_ss: Vec<f64> = (0..k).map(|i| centered_cross[i * k + i]).collect();
        GroupMoments {
            col_sums,
            col_means,
            centered_ss,
            centered_cross,
        }
    }
}
