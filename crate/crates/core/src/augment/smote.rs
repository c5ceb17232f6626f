use log::warn;
use rand::Rng as _;

use super::svm::LinearSvm;
use super::{AugmentConfig, Roles, Traced};
use crate::dataset::Dataset;
use crate::neighbors::{k_nearest, k_nearest_by, sq_dist};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Shared state for SMOTE-style interpolation toward minority neighbours.
struct Interpolator<'a> {
    ds: &'a Dataset,
    roles: Roles,
    k: usize,
    /// Categorical columns and the SMOTENC mismatch penalty (squared).
    categorical: Option<(Vec<bool>, f64)>,
    neighbors: Vec<Option<Vec<usize>>>,
}

impl<'a> Interpolator<'a> {
    fn new(ds: &'a Dataset, cfg: &AugmentConfig, roles: Roles) -> Self {
        let max_k = roles.minority.len() - 1;
        let k = if cfg.k_neighbors > max_k {
            warn!("k_neighbors {} clamped to {max_k} (minority size {})", cfg.k_neighbors, max_k + 1);
            max_k
        } else {
            cfg.k_neighbors
        };
        Interpolator { ds, roles, k, categorical: None, neighbors: vec![None; ds.len()] }
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        let (ra, rb) = (self.ds.row(a), self.ds.row(b));
        match &self.categorical {
            None => sq_dist(ra, rb),
            Some((mask, penalty)) => ra
                .iter()
                .zip(rb)
                .zip(mask)
                .map(|((x, y), &cat)| {
                    if cat {
                        if x == y {
                            0.0
                        } else {
                            *penalty
                        }
                    } else {
                        (x - y) * (x - y)
                    }
                })
                .sum(),
        }
    }

    fn minority_neighbors(&mut self, base: usize) -> &[usize] {
        if self.neighbors[base].is_none() {
            let nn = k_nearest_by(&self.roles.minority, Some(base), self.k, |j| self.distance(base, j));
            self.neighbors[base] = Some(nn);
        }
        self.neighbors[base].as_deref().unwrap()
    }

    /// One synthetic sample from `base`, consuming a neighbour draw and a gap draw.
    fn sample(&mut self, base: usize, rng: &mut Rng) -> (Vec<f64>, usize) {
        let k = self.k;
        let pick = rng.random_range(0..k);
        let gap: f64 = rng.random();
        let nbr = self.minority_neighbors(base)[pick];
        (self.interpolate(base, nbr, gap), nbr)
    }

    fn interpolate(&mut self, base: usize, nbr: usize, gap: f64) -> Vec<f64> {
        let x = self.ds.row(base);
        let n = self.ds.row(nbr);
        let mut out: Vec<f64> = x.iter().zip(n).map(|(a, b)| a + gap * (b - a)).collect();
        if let Some((mask, _)) = self.categorical.clone() {
            let nbrs = self.minority_neighbors(base).to_vec();
            for (j, &cat) in mask.iter().enumerate() {
                if cat {
                    out[j] = modal_value(nbrs.iter().map(|&i| self.ds.row(i)[j]));
                }
            }
        }
        out
    }

    fn finish(self, rows: Vec<Vec<f64>>, parents: Vec<(usize, usize)>) -> Result<Traced> {
        let mut data = self.ds.clone();
        let label = f64::from(self.roles.minority_label);
        let n = rows.len();
        data.extend(rows, vec![label; n])?;
        Ok(Traced { data, n_original: self.ds.len(), parents })
    }
}

/// Most frequent value; ties go to the value seen first (the nearest neighbour).
fn modal_value(values: impl Iterator<Item = f64>) -> f64 {
    let mut counts: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match counts.iter_mut().find(|(u, _)| *u == v) {
            Some((_, c)) => *c += 1,
            None => counts.push((v, 1)),
        }
    }
    let best = counts.iter().map(|&(_, c)| c).max().unwrap_or(0);
    counts.into_iter().find(|&(_, c)| c == best).map_or(0.0, |(v, _)| v)
}

/// Roles of an imbalanced set, or `None` when already balanced.
fn imbalanced_roles(ds: &Dataset) -> Result<Option<Roles>> {
    let roles = Roles::of(ds)?;
    if roles.deficit() == 0 {
        return Ok(None);
    }
    if roles.minority.len() < 2 {
        return Err(Error::DegenerateMinority(roles.minority.len()));
    }
    Ok(Some(roles))
}

fn interpolate_from_bases(mut interp: Interpolator<'_>, bases: &[usize], seed: u64) -> Result<Traced> {
    let mut rng = rng::seeded(seed);
    let count = interp.roles.deficit();
    let mut rows = Vec::with_capacity(count);
    let mut parents = Vec::with_capacity(count);
    for _ in 0..count {
        let base = bases[rng.random_range(0..bases.len())];
        let (row, nbr) = interp.sample(base, &mut rng);
        rows.push(row);
        parents.push((base, nbr));
    }
    interp.finish(rows, parents)
}

pub fn smote_traced(ds: &Dataset, cfg: &AugmentConfig) -> Result<Traced> {
    let Some(roles) = imbalanced_roles(ds)? else {
        return Ok(Traced::unchanged(ds));
    };
    let bases = roles.minority.clone();
    interpolate_from_bases(Interpolator::new(ds, cfg, roles), &bases, cfg.seed)
}

pub fn smote(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    smote_traced(ds, cfg).map(|t| t.data)
}

/// Minority samples whose `k` nearest neighbours (whole set) are at least
/// half but not all majority.
pub fn danger_set(ds: &Dataset, k: usize) -> Result<Vec<usize>> {
    let roles = Roles::of(ds)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let labels = ds.hard_labels()?;
    Ok(roles
        .minority
        .iter()
        .copied()
        .filter(|&i| {
            let nn = k_nearest(ds.row(i), &all, Some(i), k, |j| ds.row(j));
            let majority = nn.iter().filter(|&&j| labels[j] != roles.minority_label).count();
            2 * majority >= nn.len() && majority < nn.len()
        })
        .collect())
}

pub fn borderline_smote_traced(ds: &Dataset, cfg: &AugmentConfig) -> Result<Traced> {
    let Some(roles) = imbalanced_roles(ds)? else {
        return Ok(Traced::unchanged(ds));
    };
    let danger = danger_set(ds, cfg.k_neighbors)?;
    if danger.is_empty() {
        warn!("borderline SMOTE found no DANGER samples; falling back to SMOTE");
        return smote_traced(ds, cfg);
    }
    interpolate_from_bases(Interpolator::new(ds, cfg, roles), &danger, cfg.seed)
}

pub fn borderline_smote(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    borderline_smote_traced(ds, cfg).map(|t| t.data)
}

pub fn smotenc_traced(ds: &Dataset, cfg: &AugmentConfig) -> Result<Traced> {
    let Some(roles) = imbalanced_roles(ds)? else {
        return Ok(Traced::unchanged(ds));
    };
    let mask = ds.categorical_mask().to_vec();
    let bases = roles.minority.clone();
    let mut interp = Interpolator::new(ds, cfg, roles);
    if mask.iter().any(|&c| c) {
        // Mismatch penalty: squared median of minority numeric-column deviations.
        let mut sds: Vec<f64> = (0..ds.n_features())
            .filter(|&j| !mask[j])
            .map(|j| {
                let vals: Vec<f64> = bases.iter().map(|&i| ds.row(i)[j]).collect();
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64).sqrt()
            })
            .collect();
        sds.sort_by(f64::total_cmp);
        let med = if sds.is_empty() { 1.0 } else { sds[sds.len() / 2] };
        interp.categorical = Some((mask, med * med));
    }
    interpolate_from_bases(interp, &bases, cfg.seed)
}

pub fn smotenc(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    smotenc_traced(ds, cfg).map(|t| t.data)
}

/// Minority samples on or inside the margin of a linear separator.
pub fn svm_seed_set(ds: &Dataset) -> Result<Vec<usize>> {
    let roles = Roles::of(ds)?;
    let svm = LinearSvm::fit(ds, roles.minority_label)?;
    Ok(roles.minority.iter().copied().filter(|&i| svm.decision(ds.row(i)).abs() <= 1.0).collect())
}

pub fn svm_smote_traced(ds: &Dataset, cfg: &AugmentConfig) -> Result<Traced> {
    let Some(roles) = imbalanced_roles(ds)? else {
        return Ok(Traced::unchanged(ds));
    };
    if roles.majority.is_empty() {
        return Err(Error::SingleClassDataset);
    }
    let seeds = svm_seed_set(ds)?;
    if seeds.is_empty() {
        warn!("SVM-SMOTE found no minority samples inside the margin; falling back to SMOTE");
        return smote_traced(ds, cfg);
    }
    interpolate_from_bases(Interpolator::new(ds, cfg, roles), &seeds, cfg.seed)
}

pub fn svm_smote(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    svm_smote_traced(ds, cfg).map(|t| t.data)
}

/// Per-minority-sample synthetic quotas summing exactly to `total`.
///
/// `difficulty[i]` is the majority fraction in sample i's neighbourhood.
/// Quotas are `difficulty / sum * total` rounded by largest remainder
/// (ties to the lower index); an all-zero difficulty vector gives uniform quotas.
pub fn adasyn_quotas(difficulty: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = difficulty.iter().sum();
    let weights: Vec<f64> = if sum > 0.0 {
        difficulty.iter().map(|r| r / sum).collect()
    } else {
        warn!("ADASYN: every minority sample is safe; using uniform quotas");
        vec![1.0 / difficulty.len() as f64; difficulty.len()]
    };
    let exact: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    quotas
}

pub fn adasyn_traced(ds: &Dataset, cfg: &AugmentConfig) -> Result<Traced> {
    let Some(roles) = imbalanced_roles(ds)? else {
        return Ok(Traced::unchanged(ds));
    };
    let labels = ds.hard_labels()?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let difficulty: Vec<f64> = roles
        .minority
        .iter()
        .map(|&i| {
            let nn = k_nearest(ds.row(i), &all, Some(i), cfg.k_neighbors, |j| ds.row(j));
            let maj = nn.iter().filter(|&&j| labels[j] != roles.minority_label).count();
            maj as f64 / nn.len() as f64
        })
        .collect();
    let quotas = adasyn_quotas(&difficulty, roles.deficit());
    let minority = roles.minority.clone();
    let mut interp = Interpolator::new(ds, cfg, roles);
    let mut rng = rng::seeded(cfg.seed);
    let mut rows = Vec::new();
    let mut parents = Vec::new();
    for (&base, &q) in minority.iter().zip(&quotas) {
        for _ in 0..q {
            let (row, nbr) = interp.sample(base, &mut rng);
            rows.push(row);
            parents.push((base, nbr));
        }
    }
    interp.finish(rows, parents)
}

pub fn adasyn(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    adasyn_traced(ds, cfg).map(|t| t.data)
}
