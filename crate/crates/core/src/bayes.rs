//! Bayesian signed-rank comparison of paired samples.
//!
//! Posterior over the probability that `a - b` is positive, obtained by
//! Dirichlet-weighted resampling of the paired differences plus a prior
//! pseudo-observation.

use std::fmt;

use rand::distr::Distribution;
use rand_distr::{Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesParams {
    /// Dirichlet weight of the pseudo-observation.
    pub prior_strength: f64,
    /// Value of the pseudo-observation.
    pub prior_z0: f64,
    pub n_mc: usize,
    pub decision_threshold: f64,
    pub seed: u64,
}

impl Default for BayesParams {
    fn default() -> Self {
        BayesParams { prior_strength: 0.5, prior_z0: 0.0, n_mc: 50_000, decision_threshold: 0.95, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Larger,
    Smaller,
    Inconclusive,
}

impl Verdict {
    fn flipped(self) -> Verdict {
        match self {
            Verdict::Larger => Verdict::Smaller,
            Verdict::Smaller => Verdict::Larger,
            Verdict::Inconclusive => Verdict::Inconclusive,
        }
    }

    /// Cell token used in exported matrices.
    pub fn token(self) -> &'static str {
        match self {
            Verdict::Larger => "UP",
            Verdict::Smaller => "DOWN",
            Verdict::Inconclusive => "DASH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDecision {
    pub verdict: Verdict,
    pub p_larger: f64,
    pub p_smaller: f64,
    pub n_mc: usize,
}

impl ComparisonDecision {
    /// The same comparison seen from the other side.
    pub fn mirrored(&self) -> Self {
        ComparisonDecision {
            verdict: self.verdict.flipped(),
            p_larger: self.p_smaller,
            p_smaller: self.p_larger,
            n_mc: self.n_mc,
        }
    }
}

/// Tolerance when comparing the posterior draw with 1/2; all-tie inputs
/// would otherwise be split by rounding noise.
const HALF_TOL: f64 = 1e-12;

pub fn bayesian_signed_rank(a: &[f64], b: &[f64], params: &BayesParams) -> Result<ComparisonDecision> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let mut z = Vec::with_capacity(a.len() + 1);
    z.push(params.prior_z0);
    z.extend(a.iter().zip(b).map(|(x, y)| x - y));
    let m = z.len();
    // Pairwise indicator I(z_i + z_j > 0) + 0.5 I(z_i + z_j = 0).
    let c: Vec<f64> = (0..m * m)
        .map(|k| {
            let s = z[k / m] + z[k % m];
            if s > 0.0 {
                1.0
            } else if s == 0.0 {
                0.5
            } else {
                0.0
            }
        })
        .collect();

    let gamma = Gamma::new(params.prior_strength, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let mut r = rng::stream(params.seed, rng::stream::MONTE_CARLO);
    let mut w = vec![0.0; m];
    let (mut larger, mut smaller) = (0usize, 0usize);
    for _ in 0..params.n_mc {
        w[0] = gamma.sample(&mut r);
        for wi in &mut w[1..] {
            *wi = Exp1.sample(&mut r);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let mut theta = 0.0;
        for i in 0..m {
            let row = &c[i * m..(i + 1) * m];
            theta += w[i] * row.iter().zip(&w).map(|(ci, wj)| ci * wj).sum::<f64>();
        }
        if theta > 0.5 + HALF_TOL {
            larger += 1;
        } else if theta < 0.5 - HALF_TOL {
            smaller += 1;
        }
    }
    let n = params.n_mc.max(1) as f64;
    let (p_larger, p_smaller) = (larger as f64 / n, smaller as f64 / n);
    let verdict = if p_larger >= params.decision_threshold {
        Verdict::Larger
    } else if p_smaller >= params.decision_threshold {
        Verdict::Smaller
    } else {
        Verdict::Inconclusive
    };
    Ok(ComparisonDecision { verdict, p_larger, p_smaller, n_mc: params.n_mc })
}

/// Square decision matrix; `cells[i][j]` compares method `i` against `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub names: Vec<String>,
    pub cells: Vec<Vec<Option<ComparisonDecision>>>,
}

impl ComparisonMatrix {
    /// Number of `Larger` verdicts per method.
    pub fn scores(&self) -> Vec<usize> {
        self.cells.iter().map(|row| row.iter().flatten().filter(|d| d.verdict == Verdict::Larger).count()).collect()
    }

    /// CSV with tokens UP / DOWN / DASH and NA on the diagonal.
    pub fn to_csv(&self) -> String {
        let mut s = format!("method,{}\n", self.names.join(","));
        for (name, row) in self.names.iter().zip(&self.cells) {
            let cells: Vec<&str> = row.iter().map(|c| c.map_or("NA", |d| d.verdict.token())).collect();
            s.push_str(&format!("{name},{}\n", cells.join(",")));
        }
        s
    }
}

impl fmt::Display for ComparisonMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

/// All pairwise comparisons; each unordered pair is computed once (with its
/// own Monte Carlo stream) and mirrored.
pub fn comparison_matrix(results: &[(String, Vec<f64>)], params: &BayesParams) -> Result<ComparisonMatrix> {
    let k = results.len();
    let mut cells = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let pair_params = BayesParams { seed: params.seed.wrapping_add((i * k + j) as u64), ..*params };
            let d = bayesian_signed_rank(&results[i].1, &results[j].1, &pair_params)?;
            cells[j][i] = Some(d.mirrored());
            cells[i][j] = Some(d);
        }
    }
    Ok(ComparisonMatrix { names: results.iter().map(|(n, _)| n.clone()).collect(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BayesParams {
        BayesParams { n_mc: 20_000, seed: 11, ..Default::default() }
    }

    #[test]
    fn identical_vectors_are_inconclusive() {
        let a: Vec<f64> = (0..30).map(|i| 0.8 + i as f64 * 0.003).collect();
        let d = bayesian_signed_rank(&a, &a, &quick()).unwrap();
        assert_eq!(d.verdict, Verdict::Inconclusive);
        assert_eq!((d.p_larger, d.p_smaller), (0.0, 0.0));
    }

    #[test]
    fn constant_shift_is_larger_and_antisymmetric() {
        let b: Vec<f64> = (0..30).map(|i| (i % 7) as f64 * 0.01).collect();
        let a: Vec<f64> = b.iter().map(|x| x + 10.0).collect();
        let d = bayesian_signed_rank(&a, &b, &quick()).unwrap();
        assert_eq!(d.verdict, Verdict::Larger);
        assert!(d.p_larger > 0.999);
        let e = bayesian_signed_rank(&b, &a, &quick()).unwrap();
        assert_eq!(e.verdict, Verdict::Smaller);
        assert!((d.p_larger - e.p_smaller).abs() <= 0.01);
    }

    #[test]
    fn scale_invariance() {
        let a = [0.9, 0.85, 0.7, 0.95, 0.8, 0.91];
        let b = [0.8, 0.86, 0.6, 0.9, 0.7, 0.85];
        let d1 = bayesian_signed_rank(&a, &b, &quick()).unwrap();
        let a2: Vec<f64> = a.iter().map(|x| x * 3.0).collect();
        let b2: Vec<f64> = b.iter().map(|x| x * 3.0).collect();
        let d2 = bayesian_signed_rank(&a2, &b2, &quick()).unwrap();
        assert_eq!(d1.verdict, d2.verdict);
    }

    #[test]
    fn matrix_mirrors_and_scores() {
        let base: Vec<f64> = (0..30).map(|i| (i % 5) as f64 * 0.01).collect();
        let up: Vec<f64> = base.iter().map(|x| x + 1.0).collect();
        let m =
            comparison_matrix(&[("a".into(), base.clone()), ("b".into(), base.clone()), ("c".into(), up)], &quick())
                .unwrap();
        assert_eq!(m.scores(), vec![0, 0, 2]);
        assert_eq!(m.cells[0][1].unwrap().verdict, Verdict::Inconclusive);
        assert_eq!(m.cells[2][0].unwrap().verdict, Verdict::Larger);
        assert_eq!(m.cells[0][2].unwrap().verdict, Verdict::Smaller);
        assert!(m.cells[1][1].is_none());
        assert_eq!(m.to_csv().lines().nth(3).unwrap(), "c,UP,UP,NA");
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(bayesian_signed_rank(&[1.0, 2.0], &[1.0], &quick()), Err(Error::LengthMismatch(2, 1))));
    }
}
