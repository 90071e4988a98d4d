//! Word counts with prescribed letter multiplicities.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Above this length the exact integer count is not computed.
pub const EXACT_COUNT_MAX_K: u64 = 20;

/// Integer points scanned by [`chebyshev_counts`] before falling back to
/// rounding.
const WINDOW_SCAN_BUDGET: u64 = 4_000_000;

/// Number of words of length `k` in which letter `l` occurs `counts[l]` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordCount {
    pub k: u64,
    pub counts: Vec<u64>,
    /// `log(k! / ∏ k_l!)`.
    pub log_count: f64,
    /// The exact multinomial, for `k ≤ 20`.
    pub exact: Option<u128>,
}

fn exact_multinomial(k: u64, counts: &[u64]) -> u128 {
    let mut acc: u128 = 1;
    let mut remaining = k;
    for &c in counts {
        // C(remaining, c), built incrementally so every step is an integer.
        let mut b: u128 = 1;
        for t in 0..c {
            b = b * (remaining - t) as u128 / (t + 1) as u128;
        }
        acc *= b;
        remaining -= c;
    }
    acc
}

fn log_multinomial(k: u64, counts: &[u64]) -> f64 {
    ln_gamma(k as f64 + 1.0) - counts.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>()
}

pub fn count_words(k: u64, counts: &[u64]) -> Result<WordCount> {
    let total: u64 = counts.iter().sum();
    if total != k {
        return Err(Error::input(format!("letter counts sum to {total}, expected {k}")));
    }
    let log_count = log_multinomial(k, counts);
    let exact = (k <= EXACT_COUNT_MAX_K).then(|| exact_multinomial(k, counts));
    if let Some(n) = exact {
        let rel = ((n as f64).ln() - log_count).abs();
        debug_assert!(rel < 1e-9, "log-gamma disagrees with exact count by {rel}");
    }
    Ok(WordCount { k, counts: counts.to_vec(), log_count, exact })
}

/// `log(2^{−2m−1} · k^{−m/2})`.
pub fn chebyshev_log_constant(m: usize, k: u64) -> f64 {
    -((2 * m + 1) as f64) * std::f64::consts::LN_2 - 0.5 * m as f64 * (k as f64).ln()
}

/// `log N + ∑ k_l log p_l − log(2^{−2m−1} k^{−m/2})`; nonnegative exactly
/// when the counting bound holds.
pub fn chebyshev_margin(p: &[f64], wc: &WordCount) -> f64 {
    let weight: f64 = wc.counts.iter().zip(p).map(|(&c, &pl)| c as f64 * pl.ln()).sum();
    wc.log_count + weight - chebyshev_log_constant(p.len(), wc.k)
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::input("empty probability vector"));
    }
    if p.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::input("probabilities must be positive"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::input(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// Letter counts `(k_l)` summing to `k` that maximise the margin of
/// `N(k_1,…,k_m) ≥ 2^{−2m−1}·k^{−m/2}·∏ p_l^{−k_l}` over the box
/// `|k_l − k·p_l| < √(2k)`.
pub fn chebyshev_counts(p: &[f64], k: u64) -> Result<WordCount> {
    check_probabilities(p)?;
    if k == 0 {
        return Err(Error::input("chebyshev_counts needs k ≥ 1"));
    }
    let m = p.len();
    let half = (2.0 * k as f64).sqrt();
    let ranges: Vec<(u64, u64)> = p
        .iter()
        .map(|&pl| {
            let c = k as f64 * pl;
            let lo = (c - half).floor().max(-1.0) + 1.0;
            let hi = (c + half).ceil() - 1.0;
            let lo = lo.max(0.0) as u64;
            let hi = (hi.min(k as f64)).max(0.0) as u64;
            (lo, hi)
        })
        .collect();
    let volume = ranges[..m - 1]
        .iter()
        .map(|(lo, hi)| (hi + 1).saturating_sub(*lo))
        .try_fold(1u64, |acc, w| acc.checked_mul(w))
        .unwrap_or(u64::MAX);

    let mut best: Option<(f64, Vec<u64>)> = None;
    let consider = |best: &mut Option<(f64, Vec<u64>)>, counts: &[u64]| {
        let wc = WordCount { k, counts: counts.to_vec(), log_count: log_multinomial(k, counts), exact: None };
        let margin = chebyshev_margin(p, &wc);
        if best.as_ref().is_none_or(|(b, _)| margin > *b) {
            *best = Some((margin, counts.to_vec()));
        }
    };

    if volume <= WINDOW_SCAN_BUDGET {
        let mut counts = vec![0u64; m];
        scan(&ranges, k, 0, 0, &mut counts, &mut |c| consider(&mut best, c));
    }
    if best.is_none() {
        consider(&mut best, &largest_remainder(p, k));
    }
    let (_, counts) = best.expect("at least one candidate");
    count_words(k, &counts)
}

fn scan(ranges: &[(u64, u64)], k: u64, l: usize, used: u64, counts: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
    let m = ranges.len();
    if l == m - 1 {
        let last = k - used;
        if last >= ranges[l].0 && last <= ranges[l].1 {
            counts[l] = last;
            f(counts);
        }
        return;
    }
    let (lo, hi) = ranges[l];
    for c in lo..=hi {
        if used + c > k {
            break;
        }
        counts[l] = c;
        scan(ranges, k, l + 1, used + c, counts, f);
    }
}

/// `k·p` rounded to integers summing to `k`.
fn largest_remainder(p: &[f64], k: u64) -> Vec<u64> {
    let raw: Vec<f64> = p.iter().map(|x| x * k as f64).collect();
    let mut counts: Vec<u64> = raw.iter().map(|x| x.floor() as u64).collect();
    let mut short = k - counts.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if short == 0 {
            break;
        }
        counts[i] += 1;
        short -= 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counting_examples() {
        assert_eq!(count_words(3, &[2, 1]).unwrap().exact, Some(3));
        assert_eq!(count_words(5, &[5, 0]).unwrap().exact, Some(1));
        let w = count_words(4, &[2, 2]).unwrap();
        assert_eq!(w.exact, Some(6));
        assert!((w.log_count - 6f64.ln()).abs() < 1e-12);
        assert!(count_words(4, &[2, 1]).is_err());
    }

    #[test]
    fn chebyshev_examples() {
        let w = chebyshev_counts(&[0.5, 0.5], 10).unwrap();
        assert_eq!(w.counts, vec![5, 5]);
        assert_eq!(w.exact, Some(252));
        let w = chebyshev_counts(&[1.0], 7).unwrap();
        assert_eq!(w.counts, vec![7]);
        assert!(chebyshev_margin(&[1.0], &w) >= 0.0);
        assert!(chebyshev_counts(&[0.5, 0.4], 3).is_err());
    }

    fn brute_force(k: u64, counts: &[u64]) -> u128 {
        // Count words letter by letter.
        fn go(rem: &mut Vec<u64>) -> u128 {
            if rem.iter().all(|&c| c == 0) {
                return 1;
            }
            let mut total = 0;
            for l in 0..rem.len() {
                if rem[l] > 0 {
                    rem[l] -= 1;
                    total += go(rem);
                    rem[l] += 1;
                }
            }
            total
        }
        assert_eq!(counts.iter().sum::<u64>(), k);
        go(&mut counts.to_vec())
    }

    proptest! {
        #[test]
        fn log_gamma_matches_exact(counts in prop::collection::vec(0u64..7, 1..4)) {
            let k: u64 = counts.iter().sum();
            prop_assume!(k <= 20);
            let w = count_words(k, &counts).unwrap();
            let exact = exact_multinomial(k, &counts);
            prop_assert_eq!(w.exact, Some(exact));
            prop_assert!(((exact as f64).ln() - w.log_count).abs() <= 1e-9 * (1.0 + w.log_count.abs()));
            if k <= 10 {
                prop_assert_eq!(brute_force(k, &counts), exact);
            }
        }

        #[test]
        fn chebyshev_bound_random(raw in prop::collection::vec(0.05f64..1.0, 2..5), k in 8u64..=60) {
            let s: f64 = raw.iter().sum();
            let mut p: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let fix = 1.0 - p.iter().sum::<f64>();
            p[0] += fix;
            let w = chebyshev_counts(&p, k).unwrap();
            prop_assert_eq!(w.counts.iter().sum::<u64>(), k);
            prop_assert!(chebyshev_margin(&p, &w) >= 0.0);
        }
    }
}
