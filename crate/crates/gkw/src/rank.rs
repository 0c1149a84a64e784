//! Mid-rank computation with tie-group bookkeeping.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("cannot rank an empty input")]
    EmptyInput,
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
}

/// A response vector together with its mid-ranks and tie summary.
///
/// Tied blocks of t equal values all receive the mean of the t integer
/// ranks they occupy, so `sum(ranks) = N(N+1)/2` always holds. `tie_sum`
/// is `sum T` over maximal tied blocks with `T = (t-1) t (t+1)`; it is zero
/// exactly when all values are distinct.
#[derive(Debug, Clone)]
pub struct RankedResponse {
    values: Vec<f64>,
    ranks: Vec<f64>,
    tie_sum: f64,
    n: usize,
}

impl RankedResponse {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn tie_sum(&self) -> f64 {
        self.tie_sum
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Build directly from a vector already known to be a permutation of
    /// 1..=N (used by permutation-null drivers, which would otherwise
    /// re-rank each shuffle).
    pub(crate) fn from_distinct_ranks(ranks: Vec<f64>) -> Self {
        let n = ranks.len();
        RankedResponse {
            values: ranks.clone(),
            ranks,
            tie_sum: 0.0,
            n,
        }
    }
}

/// Rank `values` jointly, assigning tied blocks their mid-rank.
///
/// Ties are detected by exact equality of the stored floating-point values;
/// ranks must be deterministic and invariant under monotone transforms, so
/// no epsilon is involved. Sorting is stable, keeping the computation
/// deterministic for equal values.
pub fn rank_midrank(values: &[f64]) -> Result<RankedResponse, RankError> {
    if values.is_empty() {
        return Err(RankError::EmptyInput);
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(RankError::NonFiniteValue(i));
        }
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));

    let mut ranks = vec![0.0; n];
    let mut tie_sum = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let t = end - start;
        // mean of integer ranks start+1 ..= end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mid;
        }
        if t > 1 {
            let tf = t as f64;
            tie_sum += (tf - 1.0) * tf * (tf + 1.0);
        }
        start = end;
    }

    Ok(RankedResponse {
        values: values.to_vec(),
        ranks,
        tie_sum,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distinct_values() {
        let rr = rank_midrank(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(rr.ranks(), &[3.0, 1.0, 2.0]);
        assert_eq!(rr.tie_sum(), 0.0);
    }

    #[test]
    fn one_tied_pair() {
        let rr = rank_midrank(&[5.0, 5.0, 1.0]).unwrap();
        assert_eq!(rr.ranks(), &[2.5, 2.5, 1.0]);
        // (2-1) * 2 * (2+1) = 6
        assert_eq!(rr.tie_sum(), 6.0);
    }

    #[test]
    fn single_four_block() {
        let rr = rank_midrank(&[7.0, 7.0, 7.0, 7.0]).unwrap();
        assert_eq!(rr.ranks(), &[2.5, 2.5, 2.5, 2.5]);
        // (4-1) * 4 * 5 = 60
        assert_eq!(rr.tie_sum(), 60.0);
    }

    #[test]
    fn errors() {
        assert_eq!(rank_midrank(&[]).unwrap_err(), RankError::EmptyInput);
        assert_eq!(
            rank_midrank(&[1.0, f64::NAN]).unwrap_err(),
            RankError::NonFiniteValue(1)
        );
        assert_eq!(
            rank_midrank(&[f64::INFINITY]).unwrap_err(),
            RankError::NonFiniteValue(0)
        );
    }

    proptest! {
        #[test]
        fn rank_sum_is_triangular(values in prop::collection::vec(-1e6..1e6f64, 1..200)) {
            let rr = rank_midrank(&values).unwrap();
            let n = values.len() as f64;
            let total: f64 = rr.ranks().iter().sum();
            prop_assert!((total - n * (n + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn ties_from_small_alphabet(raw in prop::collection::vec(0u8..5, 2..100)) {
            let values: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
            let rr = rank_midrank(&values).unwrap();
            let n = values.len() as f64;
            let total: f64 = rr.ranks().iter().sum();
            prop_assert!((total - n * (n + 1.0) / 2.0).abs() < 1e-9);
            prop_assert!(rr.tie_sum() >= 0.0);
            // tie_sum = 0 iff all values distinct
            let mut sorted = raw.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len() == raw.len(), rr.tie_sum() == 0.0);
        }

        #[test]
        fn monotone_transform_invariance(values in prop::collection::vec(-1e3..1e3f64, 1..100)) {
            let rr = rank_midrank(&values).unwrap();
            // scaling by a power of two is exact, so the transform is
            // strictly monotone even for adjacent floats
            let scaled: Vec<f64> = values.iter().map(|&v| 4.0 * v).collect();
            let rt = rank_midrank(&scaled).unwrap();
            prop_assert_eq!(rr.ranks(), rt.ranks());
            prop_assert_eq!(rr.tie_sum(), rt.tie_sum());
        }

        #[test]
        fn monotone_transform_invariance_exp(raw in prop::collection::vec(-40i32..40, 1..60)) {
            // well-separated grid values survive any smooth monotone map
            let values: Vec<f64> = raw.iter().map(|&v| v as f64 / 8.0).collect();
            let rr = rank_midrank(&values).unwrap();
            let transformed: Vec<f64> = values.iter().map(|&v| v.exp()).collect();
            let rt = rank_midrank(&transformed).unwrap();
            prop_assert_eq!(rr.ranks(), rt.ranks());
            prop_assert_eq!(rr.tie_sum(), rt.tie_sum());
        }

        #[test]
        fn permutation_equivariance(values in prop::collection::vec(-1e3..1e3f64, 2..50)) {
            let rr = rank_midrank(&values).unwrap();
            let mut reversed = values.clone();
            reversed.reverse();
            let rv = rank_midrank(&reversed).unwrap();
            let mut expected: Vec<f64> = rr.ranks().to_vec();
            expected.reverse();
            prop_assert_eq!(rv.ranks(), expected.as_slice());
        }
    }
}
