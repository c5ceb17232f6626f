//! Brute-force Euclidean nearest neighbours with index tie-breaking.

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest candidates to `query`, excluding `exclude`, ordered by
/// distance and then by lower index.
pub(crate) fn k_nearest<'a, F>(
    query: &[f64],
    candidates: &[usize],
    exclude: Option<usize>,
    k: usize,
    row: F,
) -> Vec<usize>
where
    F: Fn(usize) -> &'a [f64],
{
    k_nearest_by(candidates, exclude, k, |i| sq_dist(query, row(i)))
}

pub(crate) fn k_nearest_by<D>(candidates: &[usize], exclude: Option<usize>, k: usize, dist: D) -> Vec<usize>
where
    D: Fn(usize) -> f64,
{
    let mut scored: Vec<(f64, usize)> =
        candidates.iter().filter(|&&i| Some(i) != exclude).map(|&i| (dist(i), i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(_, i)| i).collect()
}
