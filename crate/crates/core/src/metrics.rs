//! ROC/AUC, sensitivity and specificity, and feature-usage summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grammar::Phenotype;
use crate::{Error, Result};

/// ROC curve with tied scores collapsed into single steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Score cut for each point after the origin (`>= threshold` is positive).
    pub thresholds: Vec<f64>,
}

impl RocCurve {
    pub fn new(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
        if scores.len() != labels.len() {
            return Err(Error::LengthMismatch(scores.len(), labels.len()));
        }
        let n_pos = labels.iter().filter(|&&l| l == 1).count();
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::SingleClassDataset);
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let mut points = vec![(0.0, 0.0)];
        let mut thresholds = Vec::new();
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut i = 0;
        while i < order.len() {
            let s = scores[order[i]];
            while i < order.len() && scores[order[i]] == s {
                if labels[order[i]] == 1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
            thresholds.push(s);
        }
        Ok(RocCurve { points, thresholds })
    }

    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
    }
}

/// Trapezoidal ROC AUC with ties collapsed per threshold.
///
/// Works on integer counts so the result matches the pair-counting
/// statistic `(concordant + ties/2) / (n_pos * n_neg)` exactly.
pub fn auc_trapezoid(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    auc_sorted(&order, scores, labels)
}

pub(crate) fn auc_sorted(order: &[usize], scores: &[f64], labels: &[u8]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassDataset);
    }
    // Twice the area in units of (1/n_neg)(1/n_pos).
    let (mut tp, mut fp, mut twice) = (0u64, 0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice += (fp - fp0) * (tp + tp0);
    }
    Ok(twice as f64 / (2 * n_pos * n_neg) as f64)
}

/// Value or an explicit marker for an empty denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rate {
    Value(f64),
    Undefined,
}

impl Rate {
    fn ratio(num: usize, den: usize) -> Rate {
        if den == 0 {
            Rate::Undefined
        } else {
            Rate::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(v),
            Rate::Undefined => None,
        }
    }
}

/// `(TP / (TP + FN), TN / (TN + FP))`.
pub fn sensitivity_specificity(predictions: &[u8], truth: &[u8]) -> Result<(Rate, Rate)> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(predictions.len(), truth.len()));
    }
    let (mut tp, mut fnn, mut tn, mut fp) = (0, 0, 0, 0);
    for (&p, &t) in predictions.iter().zip(truth) {
        match (t, p) {
            (1, 1) => tp += 1,
            (1, _) => fnn += 1,
            (_, 1) => fp += 1,
            _ => tn += 1,
        }
    }
    Ok((Rate::ratio(tp, tp + fnn), Rate::ratio(tn, tn + fp)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureUsageRow {
    pub feature: usize,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureUsageReport {
    /// Sorted by descending percentage, then feature index.
    pub rows: Vec<FeatureUsageRow>,
    pub total_occurrences: usize,
}

impl FeatureUsageReport {
    /// `feature,percentage` lines like `17,6.22`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,count,percentage\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.2}\n", r.feature, r.count, r.percentage));
        }
        s
    }
}

/// Count every variable occurrence across the given trees.
pub fn feature_usage<'a>(phenotypes: impl IntoIterator<Item = &'a Phenotype>) -> Result<FeatureUsageReport> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut any = false;
    for p in phenotypes {
        any = true;
        for v in p.expr().var_occurrences() {
            *counts.entry(v).or_default() += 1;
        }
    }
    if !any {
        return Err(Error::EmptyInput);
    }
    let total: usize = counts.values().sum();
    let mut rows: Vec<FeatureUsageRow> = counts
        .into_iter()
        .map(|(feature, count)| FeatureUsageRow { feature, count, percentage: 100.0 * count as f64 / total as f64 })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.feature.cmp(&b.feature)));
    Ok(FeatureUsageReport { rows, total_occurrences: total })
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn pair_count(scores: &[f64], labels: &[u8]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_trapezoid(&[0.9, 0.8, 0.3, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc_trapezoid(&[0.5; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert_eq!(auc_trapezoid(&[0.8, 0.4, 0.6, 0.2], &[1, 0, 0, 1]).unwrap(), 0.5);
        assert!(matches!(auc_trapezoid(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClassDataset)));
    }

    #[test]
    fn auc_matches_pair_counting_and_roc_area() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let n = r.random_range(2..=50);
            let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64 / 4.0).collect();
            let a = auc_trapezoid(&scores, &labels).unwrap();
            assert!((a - pair_count(&scores, &labels)).abs() < 1e-12);
            let roc = RocCurve::new(&scores, &labels).unwrap();
            assert!((roc.area() - a).abs() < 1e-12);
            assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
            assert!(roc.points.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
        }
    }

    #[test]
    fn sens_spec() {
        let truth = [vec![1u8; 10], vec![0u8; 10]].concat();
        let pred = [vec![1u8; 9], vec![0], vec![0u8; 8], vec![1, 1]].concat();
        let (se, sp) = sensitivity_specificity(&pred, &truth).unwrap();
        assert_eq!(se, Rate::Value(0.9));
        assert_eq!(sp, Rate::Value(0.8));
        let (se, sp) = sensitivity_specificity(&[0, 1], &[0, 0]).unwrap();
        assert_eq!(se, Rate::Undefined);
        assert_eq!(sp, Rate::Value(0.5));
        assert!(matches!(sensitivity_specificity(&[0], &[0, 1]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn usage_counts_repeats() {
        let p = Phenotype::new("add(x[17], x[17])", 4).unwrap();
        let r = feature_usage([&p]).unwrap();
        assert_eq!(r.rows, vec![FeatureUsageRow { feature: 17, count: 2, percentage: 100.0 }]);
        let a = Phenotype::new("x[5]", 3).unwrap();
        let b = Phenotype::new("x[41]", 3).unwrap();
        let r = feature_usage([&a, &b]).unwrap();
        assert!(r.rows.iter().all(|row| row.percentage == 50.0));
        assert_eq!(r.to_csv(), "feature,count,percentage\n5,1,50.00\n41,1,50.00\n");
        assert!(matches!(feature_usage(std::iter::empty()), Err(Error::EmptyInput)));
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), 2.0);
    }
}
