//! Order statistics and grouping for experiment records.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Type-7 sample quantile of sorted data: linear interpolation between
/// order statistics, so the median of an even sample is the mean of the
/// middle two.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Result<f64> {
    Ok(Summary::of(values)?.median)
}

/// Location and spread of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator; 0 for one value).
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    /// Summarizes the finite entries of `values`. Sums run over sorted data,
    /// so the result does not depend on input order.
    pub fn of(values: &[f64]) -> Result<Self> {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.is_empty() {
            return Err(Error::InsufficientData("no finite values to summarize".into()));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Summary {
            count: n,
            mean,
            sd,
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Box-plot geometry with whiskers at the most extreme points within
/// 1.5 IQR of the box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        let s = Summary::of(values)?;
        let (lo_fence, hi_fence) = (s.q1 - 1.5 * s.iqr(), s.q3 + 1.5 * s.iqr());
        let mut inside: Vec<f64> = Vec::new();
        let mut outliers = Vec::new();
        for &v in values.iter().filter(|v| v.is_finite()) {
            if v < lo_fence || v > hi_fence {
                outliers.push(v);
            } else {
                inside.push(v);
            }
        }
        outliers.sort_by(f64::total_cmp);
        Ok(BoxStats {
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            whisker_low: inside.iter().copied().fold(f64::INFINITY, f64::min),
            whisker_high: inside.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            outliers,
        })
    }
}

/// Ranks starting at 1 with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// Returns NaN when either sample is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "spearman samples",
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("spearman needs at least two pairs".into()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Totally ordered `f64` for use in group keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Groups `items` by `key`, sorts each group by `seed` and summarizes
/// `value`. Groups whose values are all non-finite are reported with
/// `None`. The output is sorted by key and independent of input order.
pub fn aggregate<T, K, FK, FS, FV>(items: &[T], key: FK, seed: FS, value: FV) -> Result<Vec<(K, usize, Option<Summary>)>>
where
    K: Ord + Clone,
    FK: Fn(&T) -> K,
    FS: Fn(&T) -> u64,
    FV: Fn(&T) -> f64,
{
    if items.is_empty() {
        return Err(Error::InsufficientData("no records to aggregate".into()));
    }
    let mut groups: BTreeMap<K, Vec<(u64, f64)>> = BTreeMap::new();
    for item in items {
        groups.entry(key(item)).or_default().push((seed(item), value(item)));
    }
    Ok(groups
        .into_iter()
        .map(|(k, mut vals)| {
            vals.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let values: Vec<f64> = vals.iter().map(|v| v.1).collect();
            (k, values.len(), Summary::of(&values).ok())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_convention() {
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median(&[7.0]).unwrap(), 7.0);
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert!((s.sd - 2.5f64.sqrt()).abs() < 1e-15);
        assert!(Summary::of(&[]).is_err());
        assert!(Summary::of(&[f64::NAN]).is_err());
    }

    #[test]
    fn box_whiskers() {
        let b = BoxStats::of(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 4.0));
    }

    #[test]
    fn spearman_reference() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // Ties: ranks of y are 1.5, 1.5, 3.
        let r = spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 9.0]).unwrap();
        assert!((r - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert!(spearman(&[1.0, 2.0], &[4.0, 4.0]).unwrap().is_nan());
    }

    #[test]
    fn single_record_passes_through() {
        let rows = aggregate(&[(3u64, 1.5f64)], |_| 0u8, |r| r.0, |r| r.1).unwrap();
        let s = rows[0].2.unwrap();
        assert_eq!((s.median, s.mean, s.q1, s.q3, s.count), (1.5, 1.5, 1.5, 1.5, 1));
    }

    proptest! {
        #[test]
        fn aggregate_is_order_independent(mut items in prop::collection::vec((0u64..50, 0u8..3, -1e3f64..1e3), 1..60), seed in any::<u64>()) {
            let run = |v: &[(u64, u8, f64)]| aggregate(v, |r| r.1, |r| r.0, |r| r.2).unwrap();
            let before = run(&items);
            let mut rng = crate::rng::rng_from_seed(seed);
            use rand::seq::SliceRandom;
            items.shuffle(&mut rng);
            prop_assert_eq!(before, run(&items));
        }

        #[test]
        fn quantiles_are_ordered(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let s = Summary::of(&values).unwrap();
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        }
    }
}
