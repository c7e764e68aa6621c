//! One-sided Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest number of non-zero differences handled by the exact null
/// distribution; the normal approximation is used above it.
pub const EXACT_LIMIT: usize = 50;

/// Fewer non-zero differences than this give no evidence at all.
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
    /// Too few non-zero differences; `p` is 1.
    Insufficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Rank sum of the pairs where `a > b`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs with a non-zero difference.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Tests whether `a` tends to be lower (better) than `b`.
///
/// Zero differences are dropped and tied absolute differences share their
/// average rank. The p-value is `P(W⁺ ≤ w⁺)` under the null hypothesis,
/// where `W⁺` sums the ranks of positive `a − b`.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> WilcoxonResult {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_minus = (n * (n + 1)) as f64 / 2.0 - w_plus;
    if n < MIN_PAIRS {
        log::warn!("Wilcoxon test on {n} non-zero differences: reporting p = 1");
        return WilcoxonResult {
            p_value: 1.0,
            w_plus,
            w_minus,
            n,
            method: WilcoxonMethod::Insufficient,
        };
    }
    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_lower_tail(&ranks, w_plus), WilcoxonMethod::Exact)
    } else {
        (normal_lower_tail(&ranks, w_plus), WilcoxonMethod::Normal)
    };
    WilcoxonResult {
        p_value: p_value.min(1.0),
        w_plus,
        w_minus,
        n,
        method,
    }
}

/// 1-based ranks of `values` with ties averaged.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// `P(W⁺ ≤ w)` by counting sign assignments. Average ranks are multiples
/// of 1/2, so the count runs over doubled ranks.
fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let limit = (2.0 * w).round() as usize;
    let hits: u64 = counts[..=limit.min(total)].iter().sum();
    hits as f64 / 2f64.powi(ranks.len() as i32)
}

/// Normal approximation with continuity and tie corrections.
fn normal_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return 1.0;
    }
    let z = (w - mean + 0.5) / variance.sqrt();
    Normal::new(0.0, 1.0).expect("standard normal").cdf(z)
}

/// Pairwise p-values: entry `[i][j]` tests "row `i` lower than row `j`"
/// over paired columns. The diagonal is `None`.
pub fn p_value_matrix(rows: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    (0..rows.len())
        .map(|i| {
            (0..rows.len())
                .map(|j| {
                    (i != j).then(|| {
                        let pairs: Vec<(f64, f64)> = rows[i]
                            .iter()
                            .copied()
                            .zip(rows[j].iter().copied())
                            .collect();
                        wilcoxon_signed_rank(&pairs).p_value
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_lower_gives_two_to_minus_n() {
        let pairs: Vec<(f64, f64)> = (0..30)
            .map(|i| (i as f64, i as f64 + 1.0 + i as f64 * 0.1))
            .collect();
        let r = wilcoxon_signed_rank(&pairs);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.w_plus, 0.0);
        assert_eq!(r.p_value, 2f64.powi(-30));
    }

    #[test]
    fn identical_samples_give_one() {
        let pairs = vec![(3.0, 3.0); 10];
        let r = wilcoxon_signed_rank(&pairs);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, WilcoxonMethod::Insufficient);
    }

    #[test]
    fn paired_textbook_example() {
        // depression scale before (x) and after (y) treatment
        let x = [1.83, 0.50, 1.62, 2.48, 1.68, 1.88, 1.55, 3.06, 1.30];
        #[allow(clippy::approx_constant)]
        let y = [0.878, 0.647, 0.598, 2.05, 1.06, 1.29, 1.06, 3.14, 1.29];
        let pairs: Vec<(f64, f64)> = y.iter().copied().zip(x).collect();
        let r = wilcoxon_signed_rank(&pairs);
        assert_eq!(r.w_minus, 40.0);
        assert!((r.p_value - 0.01953).abs() < 1e-3, "{}", r.p_value);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn normal_branch_is_close_to_exact() {
        let ranks: Vec<f64> = (1..=40).map(f64::from).collect();
        for w in [200.0, 300.0, 410.0] {
            let exact = exact_lower_tail(&ranks, w);
            let approx = normal_lower_tail(&ranks, w);
            assert!((exact - approx).abs() < 5e-3, "w={w}: {exact} vs {approx}");
        }
        let pairs: Vec<(f64, f64)> = (0..60)
            .map(|i| (f64::from(i % 7), 3.0 + f64::from(i % 5)))
            .collect();
        assert_eq!(wilcoxon_signed_rank(&pairs).method, WilcoxonMethod::Normal);
    }

    #[test]
    fn complementary_tails_cover_one() {
        let pairs: Vec<(f64, f64)> = (0..12)
            .map(|i| (f64::from(i * 7 % 11), f64::from(i * 5 % 13)))
            .collect();
        let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let p = wilcoxon_signed_rank(&pairs).p_value + wilcoxon_signed_rank(&swapped).p_value;
        assert!(p >= 1.0);
    }

    #[test]
    fn matrix_diagonal_is_empty() {
        let rows = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![2.0, 3.0, 4.0, 5.0, 6.0]];
        let m = p_value_matrix(&rows);
        assert_eq!(m[0][0], None);
        assert_eq!(m[0][1], Some(1.0 / 32.0));
        assert_eq!(m[1][0], Some(1.0));
    }
}
