use rand::Rng as _;
use rand_distr::{Beta, Distribution};

use super::{AugmentConfig, Roles, Traced};
use crate::dataset::Dataset;
use crate::rng::{self, Rng};
use crate::{Error, Result};

fn beta(alpha: f64) -> Result<Beta<f64>> {
    Beta::new(alpha, alpha).map_err(|e| Error::InvalidAugmentConfig(format!("mixup_alpha: {e}")))
}

fn blend(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect()
}

/// `count` convex combinations of distinct pairs drawn from `members`.
fn within_class(
    ds: &Dataset,
    members: &[usize],
    count: usize,
    dist: &Beta<f64>,
    rng: &mut Rng,
) -> (Vec<Vec<f64>>, Vec<(usize, usize)>) {
    let mut rows = Vec::with_capacity(count);
    let mut parents = Vec::with_capacity(count);
    for _ in 0..count {
        let a = rng.random_range(0..members.len());
        let mut b = rng.random_range(0..members.len() - 1);
        if b >= a {
            b += 1;
        }
        let (a, b) = (members[a], members[b]);
        let lambda = dist.sample(rng);
        rows.push(blend(ds.row(a), ds.row(b), lambda));
        parents.push((a, b));
    }
    (rows, parents)
}

pub fn mixup_traced(ds: &Dataset, cfg: &AugmentConfig) -> Result<Traced> {
    let roles = Roles::of(ds)?;
    let deficit = roles.deficit();
    if deficit == 0 {
        return Ok(Traced::unchanged(ds));
    }
    if roles.minority.len() < 2 {
        return Err(Error::DegenerateMinority(roles.minority.len()));
    }
    let dist = beta(cfg.mixup_alpha)?;
    let mut rng = rng::stream(cfg.seed, rng::stream::MIXUP);
    let (rows, parents, labels) = if cfg.soft_mixup {
        soft_pairs(ds, &roles, deficit, &dist, &mut rng)
    } else {
        let (rows, parents) = within_class(ds, &roles.minority, deficit, &dist, &mut rng);
        (rows, parents, vec![f64::from(roles.minority_label); deficit])
    };
    let mut data = ds.clone();
    data.extend(rows, labels)?;
    Ok(Traced { data, n_original: ds.len(), parents })
}

/// Cross-pair variant: a minority anchor blended with any sample, the anchor
/// weight at least 0.5 so the thresholded soft label stays minority.
fn soft_pairs(
    ds: &Dataset,
    roles: &Roles,
    count: usize,
    dist: &Beta<f64>,
    rng: &mut Rng,
) -> (Vec<Vec<f64>>, Vec<(usize, usize)>, Vec<f64>) {
    let minority = f64::from(roles.minority_label);
    let mut rows = Vec::with_capacity(count);
    let mut parents = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let a = roles.minority[rng.random_range(0..roles.minority.len())];
        let b = rng.random_range(0..ds.len());
        let l = dist.sample(rng);
        let lambda = l.max(1.0 - l);
        rows.push(blend(ds.row(a), ds.row(b), lambda));
        parents.push((a, b));
        let soft = lambda * minority + (1.0 - lambda) * ds.label(b);
        labels.push(if soft >= 0.5 { 1.0 } else { 0.0 });
    }
    (rows, parents, labels)
}

pub fn mixup(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    mixup_traced(ds, cfg).map(|t| t.data)
}

/// Within-class Mixup on both classes until each holds `target` samples.
pub(crate) fn top_up_both_classes(ds: &Dataset, target: usize, cfg: &AugmentConfig) -> Result<Dataset> {
    let dist = beta(cfg.mixup_alpha)?;
    let mut rng = rng::stream(cfg.seed, rng::stream::MIXUP);
    let mut out = ds.clone();
    for class in [0u8, 1] {
        let members = ds.class_indices(class);
        let need = target.saturating_sub(members.len());
        if need == 0 {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::DegenerateMinority(members.len()));
        }
        let (rows, _) = within_class(ds, &members, need, &dist, &mut rng);
        out.extend(rows, vec![f64::from(class); need])?;
    }
    Ok(out)
}
