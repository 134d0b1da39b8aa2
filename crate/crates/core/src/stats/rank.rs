//! Wilcoxon signed-rank and rank-sum tests.
//!
//! Exact null distributions are computed by dynamic programming over doubled
//! mid-ranks (integers even under ties), which gives the permutation
//! distribution conditional on the observed tie pattern. Larger samples use
//! the tie-corrected normal approximation with continuity correction.

use super::special::{normal_cdf, normal_sf};
use super::{Method, MethodChoice, StatsError, TestResult};

/// Largest number of nonzero pairs tested exactly by [`signed_rank`].
pub const SIGNED_RANK_EXACT_MAX: usize = 25;
/// Largest combined sample size tested exactly by [`ranksum`].
pub const RANKSUM_EXACT_MAX: usize = 12;

/// Doubled mid-ranks (1-based) of `values`, plus the tie group sizes.
fn doubled_midranks(values: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            ranks[idx] = (i + j + 2) as u64;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

fn tie_term(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

/// Paired test on `a - b`. Zero differences are dropped; if none remain the
/// test is degenerate.
pub fn signed_rank(pairs: &[(f64, f64)]) -> Result<TestResult, StatsError> {
    signed_rank_with(pairs, MethodChoice::Auto)
}

pub fn signed_rank_with(pairs: &[(f64, f64)], choice: MethodChoice) -> Result<TestResult, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::Degenerate);
    }
    let n = diffs.len();
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_midranks(&magnitudes);
    let w2: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| *r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    let exact = match choice {
        MethodChoice::Auto => n <= SIGNED_RANK_EXACT_MAX,
        MethodChoice::Exact => true,
        MethodChoice::NormalApprox => false,
    };
    if exact {
        let total2: u64 = ranks.iter().sum();
        let mut counts = vec![0u64; total2 as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            reach += r;
            for s in (r..=reach).rev() {
                counts[s] += counts[s - r];
            }
        }
        let (p_greater, p_less, p_two_sided) = tails(&counts, w2, total2, 2f64.powi(n as i32));
        return Ok(TestResult {
            statistic,
            p_greater,
            p_less,
            p_two_sided,
            method: Method::Exact,
            n,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&ties) / 48.0;
    Ok(normal_result(statistic, mean, var, n))
}

/// Two-sample test of `x` against `y`; the statistic is the Mann-Whitney U
/// of `x`.
pub fn ranksum(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    ranksum_with(x, y, MethodChoice::Auto)
}

pub fn ranksum_with(x: &[f64], y: &[f64], choice: MethodChoice) -> Result<TestResult, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (n1, n2) = (x.len(), y.len());
    let n = n1 + n2;
    let combined: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = doubled_midranks(&combined);
    let w2: u64 = ranks[..n1].iter().sum();
    let u = w2 as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    let exact = match choice {
        MethodChoice::Auto => n <= RANKSUM_EXACT_MAX,
        MethodChoice::Exact => true,
        MethodChoice::NormalApprox => false,
    };
    if exact {
        let total2: u64 = ranks.iter().sum();
        // ways[k][s]: subsets of size k with doubled rank sum s
        let mut ways = vec![vec![0u64; total2 as usize + 1]; n1 + 1];
        ways[0][0] = 1;
        for (i, &r) in ranks.iter().enumerate() {
            let r = r as usize;
            for k in (1..=n1.min(i + 1)).rev() {
                let (lower, upper) = ways.split_at_mut(k);
                let prev = &lower[k - 1];
                let cur = &mut upper[0];
                for s in (r..cur.len()).rev() {
                    cur[s] += prev[s - r];
                }
            }
        }
        let counts = &ways[n1];
        let total: u64 = counts.iter().sum();
        // centre of the doubled rank-sum distribution is n1 (n + 1)
        let centre2 = (n1 * (n + 1)) as u64;
        let (p_greater, p_less, p_two_sided) = tails(counts, w2, 2 * centre2, total as f64);
        return Ok(TestResult {
            statistic: u,
            p_greater,
            p_less,
            p_two_sided,
            method: Method::Exact,
            n,
        });
    }

    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term(&ties) / (nf * (nf - 1.0)));
    Ok(normal_result(u, mean, var, n))
}

/// Tail masses of a counted null distribution at observed value `obs`.
/// `twice_centre` is twice the distribution's centre, so that the two-sided
/// comparison `|2s - twice_centre| >= |2 obs - twice_centre|` stays integral.
fn tails(counts: &[u64], obs: u64, twice_centre: u64, total: f64) -> (f64, f64, f64) {
    let obs = obs as usize;
    let greater: u64 = counts[obs..].iter().sum();
    let less: u64 = counts[..=obs].iter().sum();
    let dist = |s: usize| (2 * s as i64 - twice_centre as i64).unsigned_abs();
    let obs_dist = dist(obs);
    let two: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| dist(*s) >= obs_dist)
        .map(|(_, c)| *c)
        .sum();
    (
        greater as f64 / total,
        less as f64 / total,
        (two as f64 / total).min(1.0),
    )
}

fn normal_result(statistic: f64, mean: f64, var: f64, n: usize) -> TestResult {
    let (p_greater, p_less) = if var <= 0.0 {
        (1.0, 1.0)
    } else {
        let sd = var.sqrt();
        (
            normal_sf((statistic - mean - 0.5) / sd),
            normal_cdf((statistic - mean + 0.5) / sd),
        )
    };
    TestResult {
        statistic,
        p_greater,
        p_less,
        p_two_sided: (2.0 * p_greater.min(p_less)).min(1.0),
        method: Method::NormalApprox,
        n,
    }
}
