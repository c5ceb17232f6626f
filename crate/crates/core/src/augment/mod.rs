//! Class-balancing augmentation.
//!
//! Six oversamplers ([`smote`], [`borderline_smote`], [`smotenc`],
//! [`svm_smote`], [`adasyn`], [`mixup`]) top the minority class up to the
//! majority count. Two cleaners ([`enn_clean`], [`tomek_clean`]) remove
//! samples. [`compose`] chains them into S-ENN, S-Tomek and STEM
//! (SMOTE, then ENN, then within-class Mixup on both classes).
//!
//! Every operation is a pure function of its inputs and `AugmentConfig::seed`.
//! Distances are Euclidean on raw feature values; neighbour ties go to the
//! lower row index.

mod clean;
mod mixup;
mod smote;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

pub use clean::{enn_clean, tomek_clean, tomek_links};
pub use mixup::{mixup, mixup_traced};
pub use smote::{
    adasyn, adasyn_quotas, adasyn_traced, borderline_smote, borderline_smote_traced, danger_set, smote, smote_traced,
    smotenc, smotenc_traced, svm_seed_set, svm_smote, svm_smote_traced,
};
pub use svm::LinearSvm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ada,
    Bsmote,
    Senn,
    Smote,
    Snc,
    Stomek,
    Svms,
    Mixup,
    Stem,
}

impl Method {
    /// Column order of the results tables.
    pub const ALL: [Method; 9] = [
        Method::Ada,
        Method::Bsmote,
        Method::Senn,
        Method::Smote,
        Method::Snc,
        Method::Stomek,
        Method::Svms,
        Method::Mixup,
        Method::Stem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ada => "ada",
            Method::Bsmote => "bsmote",
            Method::Senn => "senn",
            Method::Smote => "smote",
            Method::Snc => "snc",
            Method::Stomek => "stomek",
            Method::Svms => "svms",
            Method::Mixup => "mixup",
            Method::Stem => "stem",
        }
    }

    /// Table-style display label, e.g. `S-ENN`.
    pub fn label(self) -> &'static str {
        match self {
            Method::Ada => "ADA",
            Method::Bsmote => "BSMOTE",
            Method::Senn => "S-ENN",
            Method::Smote => "SMOTE",
            Method::Snc => "S-NC",
            Method::Stomek => "S-Tomek",
            Method::Svms => "SVM-S",
            Method::Mixup => "Mixup",
            Method::Stem => "STEM",
        }
    }

    pub fn is_oversampler(self) -> bool {
        !matches!(self, Method::Senn | Method::Stomek | Method::Stem)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub method: Method,
    pub k_neighbors: usize,
    pub enn_k: usize,
    pub mixup_alpha: f64,
    pub stem_multiplier: f64,
    /// Cross-pair Mixup with soft labels thresholded at 0.5.
    pub soft_mixup: bool,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            method: Method::Smote,
            k_neighbors: 5,
            enn_k: 3,
            mixup_alpha: 0.2,
            stem_multiplier: 2.0,
            soft_mixup: false,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn new(method: Method, seed: u64) -> Self {
        AugmentConfig { method, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidAugmentConfig(m));
        if self.k_neighbors == 0 {
            return bad("k_neighbors must be at least 1".into());
        }
        if self.enn_k % 2 == 0 {
            return bad(format!("enn_k must be odd, got {}", self.enn_k));
        }
        if !(self.mixup_alpha > 0.0) {
            return bad(format!("mixup_alpha must be positive, got {}", self.mixup_alpha));
        }
        if !(self.stem_multiplier >= 1.0) {
            return bad(format!("stem_multiplier must be >= 1, got {}", self.stem_multiplier));
        }
        Ok(())
    }
}

/// Oversampler output with the parent rows of every synthetic sample.
///
/// Rows `0..n_original` are the input rows unchanged; row `n_original + s`
/// was generated from input rows `parents[s]`.
#[derive(Debug, Clone)]
pub struct Traced {
    pub data: Dataset,
    pub n_original: usize,
    pub parents: Vec<(usize, usize)>,
}

impl Traced {
    fn unchanged(ds: &Dataset) -> Self {
        Traced { data: ds.clone(), n_original: ds.len(), parents: Vec::new() }
    }
}

/// Minority/majority roles of a hard-labelled binary dataset.
#[derive(Debug, Clone)]
pub(crate) struct Roles {
    pub minority_label: u8,
    pub minority: Vec<usize>,
    pub majority: Vec<usize>,
}

impl Roles {
    pub fn of(ds: &Dataset) -> Result<Self> {
        let labels = ds.hard_labels()?;
        let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
        let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
        // Ties make class 1 the nominal minority; callers check `deficit`.
        Ok(if pos.len() <= neg.len() {
            Roles { minority_label: 1, minority: pos, majority: neg }
        } else {
            Roles { minority_label: 0, minority: neg, majority: pos }
        })
    }

    pub fn deficit(&self) -> usize {
        self.majority.len() - self.minority.len()
    }
}

/// Apply the configured method.
pub fn augment(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    cfg.validate()?;
    match cfg.method {
        Method::Smote => smote(ds, cfg),
        Method::Bsmote => borderline_smote(ds, cfg),
        Method::Snc => smotenc(ds, cfg),
        Method::Svms => svm_smote(ds, cfg),
        Method::Ada => adasyn(ds, cfg),
        Method::Mixup => mixup(ds, cfg),
        Method::Senn | Method::Stomek | Method::Stem => compose(ds, cfg),
    }
}

/// Stage sizes recorded by [`compose_with_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposeReport {
    pub after_smote: (usize, usize),
    pub after_cleaning: (usize, usize),
    pub output: (usize, usize),
}

/// S-ENN, S-Tomek or STEM.
pub fn compose(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    compose_with_report(ds, cfg).map(|(d, _)| d)
}

pub fn compose_with_report(ds: &Dataset, cfg: &AugmentConfig) -> Result<(Dataset, ComposeReport)> {
    cfg.validate()?;
    let smoted = smote(ds, cfg)?;
    let after_smote = smoted.class_counts()?;
    let cleaned = match cfg.method {
        Method::Senn | Method::Stem => enn_clean(&smoted, cfg)?,
        Method::Stomek => tomek_clean(&smoted)?,
        other => return Err(Error::InvalidAugmentConfig(format!("{other} is not a composite method"))),
    };
    let after_cleaning = cleaned.class_counts()?;
    let out = if cfg.method == Method::Stem {
        let max = after_cleaning.0.max(after_cleaning.1);
        let target = ceil_snapped(cfg.stem_multiplier * max as f64);
        mixup::top_up_both_classes(&cleaned, target, cfg)?
    } else {
        cleaned
    };
    let output = out.class_counts()?;
    Ok((out, ComposeReport { after_smote, after_cleaning, output }))
}

/// STEM per-class target for a given post-cleaning maximum.
pub fn stem_target(multiplier: f64, max_after_cleaning: usize) -> usize {
    ceil_snapped(multiplier * max_after_cleaning as f64)
}

fn ceil_snapped(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}
