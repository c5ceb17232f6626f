use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

/// Flattened binary tree; leaves hold P(class 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf(f64),
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitter {
    /// Best Gini threshold over sorted midpoints.
    Best,
    /// One uniform threshold per candidate feature.
    Random,
}

pub struct TreeParams {
    pub max_features: usize,
    pub min_samples_leaf: usize,
    pub splitter: Splitter,
}

/// Columns of the training matrix and binary labels.
pub struct TrainView<'a> {
    pub columns: &'a [Vec<f64>],
    pub labels: &'a [u8],
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

/// Grow an unpruned CART tree on `samples` (may contain repeats).
pub fn grow(view: &TrainView<'_>, samples: Vec<usize>, params: &TreeParams, rng: &mut Rng) -> Tree {
    let mut nodes = Vec::new();
    let mut work = vec![(samples, usize::MAX, false)];
    let n_features = view.columns.len();
    let mut features: Vec<usize> = (0..n_features).collect();
    while let Some((idx, parent, is_right)) = work.pop() {
        let me = nodes.len();
        if parent != usize::MAX {
            if let Node::Split { left, right, .. } = &mut nodes[parent] {
                if is_right {
                    *right = me;
                } else {
                    *left = me;
                }
            }
        }
        let n = idx.len() as f64;
        let pos = idx.iter().filter(|&&i| view.labels[i] == 1).count() as f64;
        let leaf = Node::Leaf(pos / n);
        if pos == 0.0 || pos == n || idx.len() < 2 * params.min_samples_leaf {
            nodes.push(leaf);
            continue;
        }
        let parent_impurity = gini(pos, n);
        features.shuffle(rng);
        let mut best: Option<(f64, usize, f64)> = None;
        for (tried, &f) in features.iter().enumerate() {
            // Keep drawing features past the quota until one can split.
            if tried >= params.max_features && best.is_some() {
                break;
            }
            let cand = match params.splitter {
                Splitter::Best => best_threshold(view, &idx, f, params.min_samples_leaf),
                Splitter::Random => random_threshold(view, &idx, f, params.min_samples_leaf, rng),
            };
            if let Some((score, thr)) = cand {
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, f, thr));
                }
            }
        }
        match best {
            Some((score, feature, threshold)) if score < parent_impurity => {
                let col = &view.columns[feature];
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| col[i] <= threshold);
                nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
                work.push((r, me, true));
                work.push((l, me, false));
            }
            _ => nodes.push(leaf),
        }
    }
    Tree { nodes }
}

/// Weighted child impurity of the best split on `f`, and its threshold.
fn best_threshold(view: &TrainView<'_>, idx: &[usize], f: usize, min_leaf: usize) -> Option<(f64, f64)> {
    let col = &view.columns[f];
    let mut sorted: Vec<usize> = idx.to_vec();
    sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let n = sorted.len() as f64;
    let total_pos = sorted.iter().filter(|&&i| view.labels[i] == 1).count() as f64;
    let mut left_pos = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..sorted.len() {
        left_pos += f64::from(view.labels[sorted[k - 1]]);
        let (a, b) = (col[sorted[k - 1]], col[sorted[k]]);
        if a == b || k < min_leaf || sorted.len() - k < min_leaf {
            continue;
        }
        let nl = k as f64;
        let nr = n - nl;
        let score = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / n;
        if best.is_none_or(|(s, _)| score < s) {
            let mid = a + (b - a) / 2.0;
            // Guard against midpoints that round up to `b`.
            best = Some((score, if mid < b { mid } else { a }));
        }
    }
    best
}

fn random_threshold(
    view: &TrainView<'_>,
    idx: &[usize],
    f: usize,
    min_leaf: usize,
    rng: &mut Rng,
) -> Option<(f64, f64)> {
    let col = &view.columns[f];
    let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(col[i]), hi.max(col[i])));
    if !(lo < hi) {
        return None;
    }
    let mut thr = rng.random_range(lo..hi);
    if thr >= hi {
        thr = lo;
    }
    let (mut nl, mut lp, mut tp) = (0.0, 0.0, 0.0);
    for &i in idx {
        let y = f64::from(view.labels[i]);
        tp += y;
        if col[i] <= thr {
            nl += 1.0;
            lp += y;
        }
    }
    let n = idx.len() as f64;
    let nr = n - nl;
    if (nl as usize) < min_leaf || (nr as usize) < min_leaf {
        return None;
    }
    Some(((nl * gini(lp, nl) + nr * gini(tp - lp, nr)) / n, thr))
}

/// Decision stump fitted to weighted misclassification error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    /// Class predicted when `x[feature] <= threshold`.
    pub left_class: u8,
}

impl Stump {
    pub fn predict(&self, row: &[f64]) -> u8 {
        if row[self.feature] <= self.threshold {
            self.left_class
        } else {
            1 - self.left_class
        }
    }

    /// Best stump given per-feature ascending orders of the rows.
    pub fn fit(view: &TrainView<'_>, orders: &[Vec<usize>], weights: &[f64]) -> (Stump, f64) {
        let total: f64 = weights.iter().sum();
        let total_pos: f64 = weights.iter().zip(view.labels).filter(|(_, &y)| y == 1).map(|(w, _)| w).sum();
        // Constant prediction as the fallback.
        let mut best = (
            Stump { feature: 0, threshold: f64::INFINITY, left_class: u8::from(2.0 * total_pos > total) },
            total_pos.min(total - total_pos),
        );
        for (f, order) in orders.iter().enumerate() {
            let col = &view.columns[f];
            let mut left_pos = 0.0;
            let mut left_w = 0.0;
            for k in 0..order.len().saturating_sub(1) {
                let i = order[k];
                left_w += weights[i];
                if view.labels[i] == 1 {
                    left_pos += weights[i];
                }
                let (a, b) = (col[i], col[order[k + 1]]);
                if a == b {
                    continue;
                }
                let left_neg = left_w - left_pos;
                let right_pos = total_pos - left_pos;
                let right_neg = total - total_pos - left_neg;
                // left -> 1, right -> 0 misclassifies left_neg + right_pos
                for (err, left_class) in [(left_neg + right_pos, 1u8), (left_pos + right_neg, 0u8)] {
                    if err < best.1 {
                        let mid = a + (b - a) / 2.0;
                        best = (Stump { feature: f, threshold: if mid < b { mid } else { a }, left_class }, err);
                    }
                }
            }
        }
        (best.0, best.1 / total)
    }
}
