//! Comparator tests: classical Kruskal-Wallis, best-guess hard calls,
//! dosage coding, slope t-test and one-way ANOVA.

use crate::dist::{chi2_sf, f_sf, t_sf2};
use crate::prob::ProbMatrix;
use crate::rank::RankedResponse;
use crate::result::{floor_p, Method, TestError, TestResult};

/// Most probable group per subject.
#[derive(Debug, Clone)]
pub struct HardCallVector {
    /// Argmax group index per row; ties broken toward the smallest index.
    pub calls: Vec<usize>,
    /// Number of rows whose maximum probability was attained by more than
    /// one group.
    pub ambiguous_count: usize,
}

/// Expected group code per subject: `sum_i i * p_ij`.
#[derive(Debug, Clone)]
pub struct DosageVector {
    pub dosages: Vec<f64>,
}

/// Best-guess (hard-call) groups: the argmax of each probability row.
pub fn hard_call(pm: &ProbMatrix) -> HardCallVector {
    let mut calls = Vec::with_capacity(pm.n());
    let mut ambiguous_count = 0;
    for j in 0..pm.n() {
        let row = pm.row(j);
        let mut best = 0;
        for (i, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = i;
            }
        }
        if row.iter().filter(|&&p| p == row[best]).count() > 1 {
            ambiguous_count += 1;
        }
        calls.push(best);
    }
    HardCallVector {
        calls,
        ambiguous_count,
    }
}

/// Soft-call (expectation-substitution) coding of the group variable.
pub fn dosage(pm: &ProbMatrix) -> DosageVector {
    let dosages = (0..pm.n())
        .map(|j| {
            pm.row(j)
                .iter()
                .enumerate()
                .map(|(i, &p)| i as f64 * p)
                .sum()
        })
        .collect();
    DosageVector { dosages }
}

/// Classical Kruskal-Wallis H-test on known group labels.
///
/// `H = 12 / (N(N+1)) * sum_i R_i^2 / n_i - 3(N+1)`, divided by
/// `1 - sumT / (N^3 - N)` when `tie_correct` is set and ties are present.
/// Fully tied responses carry no information; the statistic is defined as
/// zero in that case.
pub fn kruskal_wallis(
    groups: &[usize],
    k: usize,
    rr: &RankedResponse,
    tie_correct: bool,
) -> Result<TestResult, TestError> {
    if groups.len() != rr.n() {
        return Err(TestError::DimensionMismatch {
            left: groups.len(),
            right: rr.n(),
        });
    }
    let mut counts = vec![0usize; k];
    let mut rank_sums = vec![0.0; k];
    for (j, &g) in groups.iter().enumerate() {
        if g >= k {
            return Err(TestError::GroupOutOfRange { group: g, k });
        }
        counts[g] += 1;
        rank_sums[g] += rr.ranks()[j];
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(TestError::EmptyGroup(empty));
    }

    let n = rr.n() as f64;
    let df = (k - 1) as u64;
    let mut h = 12.0 / (n * (n + 1.0))
        * rank_sums
            .iter()
            .zip(&counts)
            .map(|(&r, &c)| r * r / c as f64)
            .sum::<f64>()
        - 3.0 * (n + 1.0);
    h = h.max(0.0);
    if tie_correct && rr.tie_sum() > 0.0 {
        let c = 1.0 - rr.tie_sum() / (n * n * n - n);
        if c <= 0.0 {
            h = 0.0;
        } else {
            h /= c;
        }
    }
    let p = floor_p(chi2_sf(h, df)?);
    Ok(TestResult {
        statistic: h,
        df,
        denom_df: None,
        p_value: p,
        method: Method::Kw,
        warnings: Vec::new(),
        tie_corrected: tie_correct,
    })
}

/// Least-squares slope t-test of y on x, reported as t^2 with the exact
/// t(N-2) reference. Serves both the best-guess linear model (x = hard
/// calls coded 0..k-1) and the dosage test (x = expected group codes); the
/// caller supplies the method tag.
pub fn ols_slope_test(x: &[f64], y: &[f64], method: Method) -> Result<TestResult, TestError> {
    if x.len() != y.len() {
        return Err(TestError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(TestError::InsufficientSample { needed: 3, got: n });
    }
    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - x_mean;
        let dy = yi - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(TestError::ConstantPredictor);
    }
    let beta = sxy / sxx;
    let sse = (syy - beta * sxy).max(0.0);
    let df = (n - 2) as u64;
    let (statistic, p_value) = if sse == 0.0 {
        // perfect fit: infinite t, p-value pinned to the underflow floor
        (f64::INFINITY, floor_p(0.0))
    } else {
        let t = beta / (sse / (nf - 2.0) / sxx).sqrt();
        (t * t, floor_p(t_sf2(t, df)?))
    };
    Ok(TestResult {
        statistic,
        df,
        denom_df: None,
        p_value,
        method,
        warnings: Vec::new(),
        tie_corrected: false,
    })
}

/// One-way ANOVA F-test on known group labels:
/// `F = (between-SS / (k-1)) / (within-SS / (N-k))`.
pub fn one_way_anova(groups: &[usize], k: usize, y: &[f64]) -> Result<TestResult, TestError> {
    if groups.len() != y.len() {
        return Err(TestError::DimensionMismatch {
            left: groups.len(),
            right: y.len(),
        });
    }
    let n = y.len();
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for (&g, &yi) in groups.iter().zip(y) {
        if g >= k {
            return Err(TestError::GroupOutOfRange { group: g, k });
        }
        counts[g] += 1;
        sums[g] += yi;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(TestError::EmptyGroup(empty));
    }
    let nf = n as f64;
    let grand_mean = sums.iter().sum::<f64>() / nf;
    let group_means: Vec<f64> = sums.iter().zip(&counts).map(|(&s, &c)| s / c as f64).collect();
    let ss_between: f64 = group_means
        .iter()
        .zip(&counts)
        .map(|(&m, &c)| c as f64 * (m - grand_mean) * (m - grand_mean))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(y)
        .map(|(&g, &yi)| {
            let d = yi - group_means[g];
            d * d
        })
        .sum();
    if ss_within == 0.0 || n <= k {
        return Err(TestError::ZeroWithinVariance);
    }
    let df1 = (k - 1) as u64;
    let df2 = (n - k) as u64;
    let f = (ss_between / df1 as f64) / (ss_within / df2 as f64);
    let p = floor_p(f_sf(f, df1, df2)?);
    Ok(TestResult {
        statistic: f,
        df: df1,
        denom_df: Some(df2),
        p_value: p,
        method: Method::BgAnova,
        warnings: Vec::new(),
        tie_corrected: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_normal, RngState};
    use crate::gkw::gkw_statistic;
    use crate::rank::rank_midrank;
    use crate::result::P_VALUE_FLOOR;

    #[test]
    fn hard_call_picks_argmax() {
        let pm = ProbMatrix::from_rows(&[
            vec![0.925, 0.045, 0.030],
            vec![0.156, 0.102, 0.742],
            vec![0.375, 0.410, 0.215],
        ])
        .unwrap();
        let hc = hard_call(&pm);
        assert_eq!(hc.calls, vec![0, 2, 1]);
        assert_eq!(hc.ambiguous_count, 0);
    }

    #[test]
    fn hard_call_ties_to_smallest_index() {
        let pm = ProbMatrix::from_rows(&[
            vec![0.5, 0.5, 0.0],
            vec![0.2, 0.2, 0.6],
            vec![0.4, 0.4, 0.2],
        ])
        .unwrap();
        let hc = hard_call(&pm);
        assert_eq!(hc.calls, vec![0, 2, 0]);
        assert_eq!(hc.ambiguous_count, 2);
    }

    #[test]
    fn dosage_expected_codes() {
        let pm = ProbMatrix::from_rows(&[
            vec![0.925, 0.045, 0.030],
            vec![0.156, 0.102, 0.742],
            vec![0.375, 0.410, 0.215],
        ])
        .unwrap();
        let d = dosage(&pm);
        assert!((d.dosages[0] - 0.105).abs() < 1e-12);
        assert!((d.dosages[1] - 1.586).abs() < 1e-12);
        assert!((d.dosages[2] - 0.840).abs() < 1e-12);
    }

    #[test]
    fn kw_two_subjects() {
        // ranks 1, 2 in separate groups: H = 2 (1 + 4) - 9 = 1
        let rr = rank_midrank(&[1.0, 2.0]).unwrap();
        let res = kruskal_wallis(&[0, 1], 2, &rr, true).unwrap();
        assert!((res.statistic - 1.0).abs() < 1e-12);
        assert_eq!(res.df, 1);
    }

    #[test]
    fn kw_fully_tied_is_zero() {
        let rr = rank_midrank(&[3.0; 6]).unwrap();
        let res = kruskal_wallis(&[0, 0, 1, 1, 2, 2], 3, &rr, true).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn kw_empty_group_reported() {
        let rr = rank_midrank(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            kruskal_wallis(&[0, 0, 2], 3, &rr, true).unwrap_err(),
            TestError::EmptyGroup(1)
        );
    }

    #[test]
    fn kw_equals_gkw_on_one_hot() {
        let mut rng = RngState::new(61);
        let groups = [0usize, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2];
        let values: Vec<f64> = (0..12)
            .map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap())
            .collect();
        let rr = rank_midrank(&values).unwrap();
        let pm = ProbMatrix::one_hot(&groups, 3).unwrap();
        for tie in [false, true] {
            let kw = kruskal_wallis(&groups, 3, &rr, tie).unwrap();
            let gkw = gkw_statistic(&pm, &rr, tie, None).unwrap();
            assert!(
                (kw.statistic - gkw.statistic).abs() <= 1e-10,
                "tie={tie}: {} vs {}",
                kw.statistic,
                gkw.statistic
            );
        }
    }

    #[test]
    fn ols_perfect_fit_floors_p() {
        let res = ols_slope_test(
            &[0.0, 1.0, 2.0, 3.0],
            &[0.0, 1.0, 2.0, 3.0],
            Method::Dosage,
        )
        .unwrap();
        assert!(res.statistic.is_infinite());
        assert_eq!(res.p_value, P_VALUE_FLOOR);
    }

    #[test]
    fn ols_rejects_degenerate_inputs() {
        assert_eq!(
            ols_slope_test(&[0.0, 1.0], &[2.0, 5.0], Method::BgLm).unwrap_err(),
            TestError::InsufficientSample { needed: 3, got: 2 }
        );
        assert_eq!(
            ols_slope_test(&[1.0, 1.0, 1.0], &[2.0, 5.0, 3.0], Method::BgLm).unwrap_err(),
            TestError::ConstantPredictor
        );
    }

    #[test]
    fn ols_affine_invariance() {
        let mut rng = RngState::new(12);
        let x: Vec<f64> = (0..30).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = (0..30)
            .map(|_| sample_normal(1.0, 2.0, &mut rng).unwrap())
            .collect();
        let base = ols_slope_test(&x, &y, Method::BgLm).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| 4.0 * v + 7.0).collect();
        let y2: Vec<f64> = y.iter().map(|v| 0.5 * v - 3.0).collect();
        let moved = ols_slope_test(&x2, &y2, Method::BgLm).unwrap();
        assert!((base.statistic - moved.statistic).abs() < 1e-9);
        assert!((base.p_value - moved.p_value).abs() < 1e-12);
    }

    #[test]
    fn anova_perfect_separation_is_error() {
        let groups = [0usize, 0, 1, 1];
        let y = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(
            one_way_anova(&groups, 2, &y).unwrap_err(),
            TestError::ZeroWithinVariance
        );
    }

    #[test]
    fn anova_zero_between_gives_zero_f() {
        // balanced symmetric data with identical group means
        let groups = [0usize, 0, 1, 1];
        let y = [1.0, 3.0, 3.0, 1.0];
        let res = one_way_anova(&groups, 2, &y).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert_eq!(res.p_value, 1.0);
        assert_eq!((res.df, res.denom_df), (1, Some(2)));
    }

    #[test]
    fn anova_shift_and_scale_invariance() {
        let mut rng = RngState::new(14);
        let groups: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let y: Vec<f64> = (0..30)
            .map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap())
            .collect();
        let base = one_way_anova(&groups, 3, &y).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| -2.0 * v + 5.0).collect();
        let moved = one_way_anova(&groups, 3, &y2).unwrap();
        assert!((base.statistic - moved.statistic).abs() < 1e-9);
    }

    #[test]
    fn null_calibration_of_parametric_tests() {
        // 2000 null replicates at N = 50: rejection at 0.05 within 3 SE
        let mut rng = RngState::new(2027);
        let m = 2000;
        let mut ols_rej = 0;
        let mut anova_rej = 0;
        for _ in 0..m {
            let x: Vec<f64> = (0..50).map(|i| (i % 3) as f64).collect();
            let y: Vec<f64> = (0..50)
                .map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap())
                .collect();
            if ols_slope_test(&x, &y, Method::BgLm).unwrap().p_value <= 0.05 {
                ols_rej += 1;
            }
            let groups: Vec<usize> = (0..50).map(|i| i % 3).collect();
            if one_way_anova(&groups, 3, &y).unwrap().p_value <= 0.05 {
                anova_rej += 1;
            }
        }
        let se = (0.05f64 * 0.95 / m as f64).sqrt();
        let ols_rate = ols_rej as f64 / m as f64;
        let anova_rate = anova_rej as f64 / m as f64;
        assert!((ols_rate - 0.05).abs() < 3.0 * se, "ols rate {ols_rate}");
        assert!((anova_rate - 0.05).abs() < 3.0 * se, "anova rate {anova_rate}");
    }
}
