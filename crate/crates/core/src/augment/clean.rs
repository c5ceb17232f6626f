use super::AugmentConfig;
use crate::dataset::Dataset;
use crate::neighbors::k_nearest;
use crate::{Error, Result};

/// Edited nearest neighbours: drop every sample whose label disagrees with
/// the majority of its `enn_k` nearest neighbours. Single simultaneous pass.
pub fn enn_clean(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    let k = cfg.enn_k;
    if ds.len() < k + 1 {
        return Err(Error::TooFewSamples { n: ds.len(), k });
    }
    let labels = ds.hard_labels()?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let keep: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&i| {
            let nn = k_nearest(ds.row(i), &all, Some(i), k, |j| ds.row(j));
            let positives = nn.iter().filter(|&&j| labels[j] == 1).count();
            let majority = if 2 * positives > nn.len() { 1 } else { 0 };
            labels[i] == majority
        })
        .collect();
    Ok(ds.select(&keep))
}

/// Cross-class pairs that are each other's nearest neighbour.
pub fn tomek_links(ds: &Dataset) -> Result<Vec<(usize, usize)>> {
    let labels = ds.hard_labels()?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let nearest: Vec<Option<usize>> =
        all.iter().map(|&i| k_nearest(ds.row(i), &all, Some(i), 1, |j| ds.row(j)).first().copied()).collect();
    Ok(all
        .iter()
        .filter_map(|&i| {
            let j = nearest[i]?;
            (i < j && labels[i] != labels[j] && nearest[j] == Some(i)).then_some((i, j))
        })
        .collect())
}

/// Remove the majority-class member of every Tomek link. On equal class
/// counts class 0 is treated as the majority.
pub fn tomek_clean(ds: &Dataset) -> Result<Dataset> {
    let (n0, n1) = ds.class_counts()?;
    let majority = if n1 > n0 { 1.0 } else { 0.0 };
    let links = tomek_links(ds)?;
    let mut drop = vec![false; ds.len()];
    for (a, b) in links {
        let victim = if ds.label(a) == majority { a } else { b };
        drop[victim] = true;
    }
    let keep: Vec<usize> = (0..ds.len()).filter(|&i| !drop[i]).collect();
    Ok(ds.select(&keep))
}

#[cfg(test)]
mod tests {
    use super::super::tests::line_dataset;
    use super::*;

    #[test]
    fn enn_hand_enumerated() {
        let ds = line_dataset(&[0.0, 1.0, 2.0], &[1.1, 10.0, 11.0]);
        let out = enn_clean(&ds, &AugmentConfig::default()).unwrap();
        let kept: Vec<f64> = out.rows().map(|r| r[0]).collect();
        assert_eq!(kept, vec![0.0, 1.0, 2.0, 10.0, 11.0]);
    }

    #[test]
    fn enn_removes_surrounded_sample_and_keeps_separated() {
        let ds = line_dataset(&[0.0, 0.1, 0.2, 5.1], &[5.0, 5.2, 5.3, 5.4]);
        let out = enn_clean(&ds, &AugmentConfig::default()).unwrap();
        assert_eq!(out.len(), 7);
        assert!(out.rows().all(|r| r[0] != 5.1));

        let sep = line_dataset(&[0.0, 0.1, 0.2, 0.3], &[9.0, 9.1, 9.2, 9.3]);
        assert_eq!(enn_clean(&sep, &AugmentConfig::default()).unwrap(), sep);
    }

    #[test]
    fn enn_needs_enough_samples() {
        let ds = line_dataset(&[0.0, 1.0], &[2.0]);
        assert!(matches!(enn_clean(&ds, &AugmentConfig::default()), Err(Error::TooFewSamples { n: 3, k: 3 })));
    }

    #[test]
    fn tomek_examples() {
        let ds = line_dataset(&[0.0, 0.4], &[0.5, 3.0]);
        assert_eq!(tomek_links(&ds).unwrap(), vec![(1, 2)]);

        let ds = line_dataset(&[0.0, 20.0, 21.0, 22.0], &[1.0, 40.0]);
        assert_eq!(tomek_links(&ds).unwrap(), vec![(0, 4)]);
        let out = tomek_clean(&ds).unwrap();
        assert_eq!(out.rows().map(|r| r[0]).collect::<Vec<_>>(), vec![20.0, 21.0, 22.0, 1.0, 40.0]);

        let sep = line_dataset(&[0.0, 0.5], &[9.0, 9.5]);
        assert_eq!(tomek_clean(&sep).unwrap(), sep);
    }
}
