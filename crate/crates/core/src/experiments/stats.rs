//! Medians with distribution-free confidence limits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianCi {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub samples: usize,
}

/// Sample median plus the binomial order-statistic interval.
///
/// With `m` sorted samples and `α = (1 - level) / 2`, the limits are
/// `x_(l)` and `x_(m+1-l)` (1-based), `l` being the largest integer with
/// `P[Bin(m, 1/2) ≤ l - 1] ≤ α`. For very small `m` no such `l ≥ 1` exists
/// and the interval falls back to the sample range, so its coverage is
/// below `level`.
pub fn median_with_ci(samples: &[f64], level: f64) -> Result<MedianCi> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples for a median interval, got {}",
            samples.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {level} must lie in (0, 1)"
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    let alpha = (1.0 - level) / 2.0;
    let l = order_statistic_rank(m, alpha);
    Ok(MedianCi {
        median: median_sorted(&xs),
        lower: xs[l - 1],
        upper: xs[m - l],
        level,
        samples: m,
    })
}

/// 1-based rank `l` of the lower confidence limit (at least 1).
pub fn order_statistic_rank(m: usize, alpha: f64) -> usize {
    let bin = Binomial::new(0.5, m as u64).expect("valid binomial");
    let mut l = 1;
    // P[X <= l] for candidate l + 1
    while l < m.div_ceil(2) && bin.cdf(l as u64) <= alpha {
        l += 1;
    }
    l
}

/// Median of already sorted values; even counts take the midpoint.
pub fn median_sorted(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Median, k-th lowest (1-based, clamped to the sample count) and minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowTail {
    pub count: usize,
    pub median: f64,
    pub tenth_lowest: f64,
    pub lowest: f64,
}

pub fn low_tail(values: &[f64]) -> Option<LowTail> {
    if values.is_empty() {
        return None;
    }
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    Some(LowTail {
        count: xs.len(),
        median: median_sorted(&xs),
        tenth_lowest: xs[9.min(xs.len() - 1)],
        lowest: xs[0],
    })
}

/// Counts of `values` in `[0, 1]` bins of width 0.01; 1.0 lands in the last bin.
pub fn probability_histogram(values: &[f64]) -> Vec<u32> {
    let mut bins = vec![0u32; 100];
    for &p in values {
        let b = ((p * 100.0).floor() as isize).clamp(0, 99) as usize;
        bins[b] += 1;
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_examples() {
        let ci = median_with_ci(&[3.0, 1.0, 2.0], 0.95).unwrap();
        assert_eq!(ci.median, 2.0);
        assert_eq!((ci.lower, ci.upper), (1.0, 3.0));
        let ci = median_with_ci(&[4.0, 1.0, 2.0, 3.0], 0.95).unwrap();
        assert_eq!(ci.median, 2.5);
        let c = median_with_ci(&[7.5; 20], 0.95).unwrap();
        assert_eq!((c.median, c.lower, c.upper), (7.5, 7.5, 7.5));
        assert!(median_with_ci(&[1.0], 0.95).is_err());
        assert!(median_with_ci(&[1.0, f64::NAN], 0.95).is_err());
    }

    #[test]
    fn ranks_match_binomial_tables() {
        // scipy.stats.binom: largest l with cdf(l - 1) <= 0.025
        for (m, l) in [(6, 1), (10, 2), (25, 8), (50, 18), (75, 29), (100, 40)] {
            assert_eq!(order_statistic_rank(m, 0.025), l, "m = {m}");
        }
        assert_eq!(order_statistic_rank(3, 0.025), 1);
    }

    #[test]
    fn coverage_monte_carlo() {
        // exact coverage at m = 75 is 1 - 2 P[X <= 28] = 0.96305
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 10_000;
        let mut hits = 0;
        for _ in 0..trials {
            let xs: Vec<f64> = (0..75).map(|_| rng.gen::<f64>()).collect();
            let ci = median_with_ci(&xs, 0.95).unwrap();
            if ci.lower <= 0.5 && 0.5 <= ci.upper {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.95).abs() <= 0.015, "coverage {rate}");
    }

    #[test]
    fn tail_and_histogram() {
        let vals: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let t = low_tail(&vals).unwrap();
        assert_eq!(t.lowest, 0.0);
        assert_eq!(t.tenth_lowest, 0.45);
        assert_eq!(t.median, 0.475);
        assert!(low_tail(&[]).is_none());
        let h = probability_histogram(&[0.0, 0.005, 0.01, 0.999, 1.0]);
        assert_eq!(h[0], 2);
        assert_eq!(h[1], 1);
        assert_eq!(h[99], 2);
        assert_eq!(h.iter().sum::<u32>(), 5);
    }
}
