//! Classical classifier zoo and the top-three majority-vote ensemble.
//!
//! Six model kinds are fitted on the (augmented) training data, ranked by
//! AUC, and the best three are combined: hard labels by majority vote,
//! soft scores by mean probability (used for AUC reporting).
//!
//! Training rows are put into a canonical order before fitting, so a model
//! depends only on the set of rows and the seed, not on their order.

mod discriminant;
mod trees;

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_split, Dataset};
use crate::grammar::sigmoid;
use crate::metrics::auc_trapezoid;
use crate::neighbors::k_nearest;
use crate::rng;
use crate::{Error, Result};

pub use discriminant::{ledoit_wolf_shrinkage, Lda, Qda};
use trees::{grow, Splitter, Stump, TrainView, Tree, TreeParams};

/// Declaration order is the tie-break order when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    Lda,
    Qda,
    RandomForest,
    ExtraTrees,
    AdaBoost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Knn,
        ModelKind::Lda,
        ModelKind::Qda,
        ModelKind::RandomForest,
        ModelKind::ExtraTrees,
        ModelKind::AdaBoost,
    ];

    /// Short tag used in ensemble names (`LdQE`).
    pub fn initial(self) -> &'static str {
        match self {
            ModelKind::Knn => "K",
            ModelKind::Lda => "Ld",
            ModelKind::Qda => "Q",
            ModelKind::RandomForest => "R",
            ModelKind::ExtraTrees => "E",
            ModelKind::AdaBoost => "A",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::Lda => "lda",
            ModelKind::Qda => "qda",
            ModelKind::RandomForest => "random_forest",
            ModelKind::ExtraTrees => "extra_trees",
            ModelKind::AdaBoost => "ada_boost",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

/// Where the top-three ranking AUC is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// On the training data itself.
    #[default]
    Train,
    /// Fit on a stratified 80% and rank on the held-out 20%.
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub kinds: Vec<ModelKind>,
    pub knn_k: usize,
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub ada_rounds: usize,
    pub selection: Selection,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            kinds: ModelKind::ALL.to_vec(),
            knn_k: 5,
            n_trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            ada_rounds: 50,
            selection: Selection::Train,
        }
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Knn {
        data: Dataset,
        labels: Vec<u8>,
        k: usize,
    },
    Lda {
        scale: Scaler,
        model: Lda,
    },
    Qda {
        scale: Scaler,
        model: Qda,
    },
    Forest(Vec<Tree>),
    Boost(Vec<(Stump, f64)>),
    #[cfg(test)]
    Constant(f64),
}

#[derive(Debug, Clone)]
struct Scaler {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Scaler {
    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.sd).map(|((x, m), s)| (x - m) / s).collect()
    }
}

/// A fitted classifier exposing `P(class 1 | row)`.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    pub kind: ModelKind,
    /// AUC on the data the model was fitted on.
    pub train_auc: f64,
    fitted: Fitted,
}

impl BaselineModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        match &self.fitted {
            Fitted::Knn { data, labels, k } => {
                let all: Vec<usize> = (0..data.len()).collect();
                let nn = k_nearest(row, &all, None, *k, |j| data.row(j));
                nn.iter().filter(|&&j| labels[j] == 1).count() as f64 / nn.len() as f64
            }
            Fitted::Lda { scale, model } => sigmoid(model.decision(&scale.apply(row))),
            Fitted::Qda { scale, model } => sigmoid(model.decision(&scale.apply(row))),
            Fitted::Forest(trees) => trees.iter().map(|t| t.predict(row)).sum::<f64>() / trees.len() as f64,
            Fitted::Boost(stumps) => {
                let total: f64 = stumps.iter().map(|(_, a)| a).sum();
                let f: f64 = stumps.iter().map(|(s, a)| if s.predict(row) == 1 { *a } else { -*a }).sum();
                sigmoid(2.0 * f / total)
            }
            #[cfg(test)]
            Fitted::Constant(p) => *p,
        }
    }

    pub fn predict_all(&self, ds: &Dataset) -> Vec<f64> {
        ds.rows().map(|r| self.predict_proba(r)).collect()
    }

    pub fn auc(&self, ds: &Dataset) -> Result<f64> {
        auc_trapezoid(&self.predict_all(ds), &ds.hard_labels()?)
    }
}

/// Rows sorted lexicographically by features, then label.
fn canonical(ds: &Dataset) -> Dataset {
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.sort_by(|&a, &b| {
        ds.row(a)
            .iter()
            .zip(ds.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ds.label(a).total_cmp(&ds.label(b)))
    });
    ds.select(&idx)
}

fn scaler(ds: &Dataset) -> Scaler {
    let (mean, sd) = ds.column_stats();
    Scaler { mean, sd }
}

pub fn train_baseline(kind: ModelKind, train: &Dataset, cfg: &BaselineConfig, seed: u64) -> Result<BaselineModel> {
    let (n0, n1) = train.class_counts()?;
    for (class, count) in [(0u8, n0), (1, n1)] {
        if count < 2 {
            return Err(Error::DegenerateClass { class, count });
        }
    }
    let ds = canonical(train);
    let labels = ds.hard_labels()?;
    let mut r = rng::stream(seed, rng::stream::MODEL);
    let d = ds.n_features();
    let columns = ds.columns();
    let view = TrainView { columns: &columns, labels: &labels };
    let fitted = match kind {
        ModelKind::Knn => Fitted::Knn { k: cfg.knn_k.clamp(1, ds.len()), labels: labels.clone(), data: ds.clone() },
        ModelKind::Lda | ModelKind::Qda => {
            let scale = scaler(&ds);
            let z: Vec<Vec<f64>> = ds.rows().map(|row| scale.apply(row)).collect();
            let neg: Vec<&[f64]> = (0..z.len()).filter(|&i| labels[i] == 0).map(|i| z[i].as_slice()).collect();
            let pos: Vec<&[f64]> = (0..z.len()).filter(|&i| labels[i] == 1).map(|i| z[i].as_slice()).collect();
            if kind == ModelKind::Lda {
                Fitted::Lda { model: Lda::fit(&neg, &pos)?, scale }
            } else {
                Fitted::Qda { model: Qda::fit(&neg, &pos)?, scale }
            }
        }
        ModelKind::RandomForest | ModelKind::ExtraTrees => {
            let params = TreeParams {
                max_features: cfg
                    .max_features
                    .unwrap_or(((d as f64).sqrt().floor() as usize).max(1))
                    .clamp(1, d.max(1)),
                min_samples_leaf: cfg.min_samples_leaf.max(1),
                splitter: if kind == ModelKind::RandomForest { Splitter::Best } else { Splitter::Random },
            };
            let n = ds.len();
            let trees = (0..cfg.n_trees.max(1))
                .map(|_| {
                    let samples: Vec<usize> = if kind == ModelKind::RandomForest {
                        (0..n).map(|_| r.random_range(0..n)).collect()
                    } else {
                        (0..n).collect()
                    };
                    grow(&view, samples, &params, &mut r)
                })
                .collect();
            Fitted::Forest(trees)
        }
        ModelKind::AdaBoost => Fitted::Boost(adaboost(&view, cfg.ada_rounds.max(1))),
    };
    let mut model = BaselineModel { kind, train_auc: 0.0, fitted };
    model.train_auc = model.auc(&ds)?;
    Ok(model)
}

/// Binary SAMME boosting of decision stumps.
fn adaboost(view: &TrainView<'_>, rounds: usize) -> Vec<(Stump, f64)> {
    let n = view.labels.len();
    let orders: Vec<Vec<usize>> = view
        .columns
        .iter()
        .map(|col| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            o
        })
        .collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut out = Vec::new();
    for _ in 0..rounds {
        let (stump, err) = Stump::fit(view, &orders, &w);
        if err <= 1e-12 {
            // A perfect stump decides alone.
            if out.is_empty() {
                out.push((stump, 1.0));
            }
            break;
        }
        if err >= 0.5 {
            if out.is_empty() {
                out.push((stump, 1.0));
            }
            break;
        }
        let alpha = ((1.0 - err) / err).ln();
        let col = &view.columns[stump.feature];
        for i in 0..n {
            let predicted = if col[i] <= stump.threshold { stump.left_class } else { 1 - stump.left_class };
            if predicted != view.labels[i] {
                w[i] *= alpha.exp();
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        out.push((stump, alpha));
    }
    out
}

/// Fit every configured kind. Kinds that fail to fit are logged and skipped.
pub fn train_zoo(train: &Dataset, cfg: &BaselineConfig, seed: u64) -> Vec<BaselineModel> {
    cfg.kinds
        .iter()
        .filter_map(|&k| match train_baseline(k, train, cfg, seed) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("{k} failed to fit: {e}");
                None
            }
        })
        .collect()
}

/// Three models combined by majority vote.
#[derive(Debug, Clone)]
pub struct VotingEnsemble {
    pub members: Vec<BaselineModel>,
    /// Ranking AUC of each member, descending.
    pub member_aucs: Vec<f64>,
}

impl VotingEnsemble {
    /// Concatenated member initials in rank order, e.g. `LdQE`.
    pub fn initials(&self) -> String {
        self.members.iter().map(|m| m.kind.initial()).collect()
    }

    pub fn auc(&self, ds: &Dataset) -> Result<f64> {
        let scores: Vec<f64> = ds.rows().map(|r| predict_vote(self, r).1).collect();
        auc_trapezoid(&scores, &ds.hard_labels()?)
    }
}

/// Best three models by AUC on `val`; ties go to the earlier kind.
pub fn select_top3(models: Vec<BaselineModel>, val: &Dataset) -> Result<VotingEnsemble> {
    if models.len() < 3 {
        return Err(Error::TooFewModels(models.len()));
    }
    let mut scored = models.into_iter().map(|m| Ok((m.auc(val)?, m))).collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.kind.cmp(&b.1.kind)));
    scored.truncate(3);
    let (member_aucs, members) = scored.into_iter().unzip();
    Ok(VotingEnsemble { members, member_aucs })
}

/// `(majority of thresholded member votes, mean member probability)`.
pub fn predict_vote(e: &VotingEnsemble, row: &[f64]) -> (u8, f64) {
    let probs: Vec<f64> = e.members.iter().map(|m| m.predict_proba(row)).collect();
    let votes = probs.iter().filter(|&&p| p >= 0.5).count();
    let hard = u8::from(2 * votes > probs.len());
    (hard, probs.iter().sum::<f64>() / probs.len() as f64)
}

/// Zoo plus ensemble following `cfg.selection`.
pub fn fit_ensemble(train: &Dataset, cfg: &BaselineConfig, seed: u64) -> Result<(Vec<BaselineModel>, VotingEnsemble)> {
    let (fit_on, val) = match cfg.selection {
        Selection::Train => (train.clone(), train.clone()),
        Selection::Holdout => {
            let s = stratified_split(train, 0.8, seed)?;
            (s.train, s.test)
        }
    };
    let models = train_zoo(&fit_on, cfg, seed);
    let ensemble = select_top3(models.clone(), &val)?;
    Ok((models, ensemble))
}
