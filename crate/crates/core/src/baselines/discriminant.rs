use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ledoit–Wolf shrinkage intensity for already-centred rows.
pub fn ledoit_wolf_shrinkage(x: &DMatrix<f64>) -> f64 {
    let (n, d) = (x.nrows() as f64, x.ncols() as f64);
    let x2 = x.map(|v| v * v);
    let emp_trace: f64 = x2.sum() / n;
    let mu = emp_trace / d;
    let beta_raw = (x2.transpose() * &x2).sum();
    let delta_raw = (x.transpose() * x).map(|v| v * v).sum() / (n * n);
    let beta = (beta_raw / n - delta_raw) / (d * n);
    let delta = (delta_raw - 2.0 * mu * emp_trace + d * mu * mu) / d;
    if delta <= 0.0 {
        return 0.0;
    }
    (beta.min(delta) / delta).clamp(0.0, 1.0)
}

/// Covariance (divided by `n - ddof`) of `rows`, optionally shrunk towards
/// a scaled identity, with its Cholesky factor.
#[derive(Debug, Clone)]
pub(crate) struct Gaussian {
    pub mean: DVector<f64>,
    pub chol: Cholesky<f64, Dyn>,
    pub log_det: f64,
}

fn centred(rows: &[&[f64]], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j] - mean[j])
}

pub(crate) fn mean_of(rows: &[&[f64]], d: usize) -> DVector<f64> {
    let mut m = DVector::zeros(d);
    for r in rows {
        m += DVector::from_column_slice(r);
    }
    m / rows.len().max(1) as f64
}

/// Factor a covariance; if it is not positive definite (or `force_shrink`),
/// retry with Ledoit–Wolf shrinkage and finally with a small ridge.
pub(crate) fn factor(cov: DMatrix<f64>, x: &DMatrix<f64>, force_shrink: bool) -> Result<Cholesky<f64, Dyn>> {
    let d = cov.nrows();
    if !force_shrink {
        if let Some(c) = cov.clone().cholesky() {
            return Ok(c);
        }
    }
    let mu = cov.trace() / d as f64;
    let gamma = ledoit_wolf_shrinkage(x).max(1e-6);
    let shrunk = &cov * (1.0 - gamma) + DMatrix::identity(d, d) * (gamma * mu);
    if let Some(c) = shrunk.clone().cholesky() {
        return Ok(c);
    }
    let ridge = shrunk + DMatrix::identity(d, d) * (1e-6 * mu.max(1e-12));
    ridge.cholesky().ok_or(Error::SingularCovariance)
}

fn log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Linear discriminant analysis: class means, pooled covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lda {
    /// `P(1|x) = sigmoid(w . x + b)`.
    pub w: Vec<f64>,
    pub b: f64,
}

impl Lda {
    pub fn fit(neg: &[&[f64]], pos: &[&[f64]]) -> Result<Lda> {
        let d = neg.first().or(pos.first()).map_or(0, |r| r.len());
        let (n0, n1) = (neg.len(), pos.len());
        let (m0, m1) = (mean_of(neg, d), mean_of(pos, d));
        let mut x = centred(neg, &m0);
        let x1 = centred(pos, &m1);
        x = DMatrix::from_fn(n0 + n1, d, |i, j| if i < n0 { x[(i, j)] } else { x1[(i - n0, j)] });
        let dof = (n0 + n1).saturating_sub(2).max(1) as f64;
        let cov = x.transpose() * &x / dof;
        let chol = factor(cov, &x, n0 + n1 <= d + 2)?;
        let diff = &m1 - &m0;
        let w = chol.solve(&diff);
        let prior = (n1 as f64 / n0 as f64).ln();
        let b = -0.5 * (m1.dot(&chol.solve(&m1)) - m0.dot(&chol.solve(&m0))) + prior;
        Ok(Lda { w: w.iter().copied().collect(), b })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.w.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.b
    }
}

/// Quadratic discriminant analysis: one Gaussian per class.
#[derive(Debug, Clone)]
pub struct Qda {
    classes: [Gaussian; 2],
    log_prior: [f64; 2],
}

impl Qda {
    pub fn fit(neg: &[&[f64]], pos: &[&[f64]]) -> Result<Qda> {
        let d = neg.first().or(pos.first()).map_or(0, |r| r.len());
        let fit_one = |rows: &[&[f64]]| -> Result<Gaussian> {
            let mean = mean_of(rows, d);
            let x = centred(rows, &mean);
            let cov = x.transpose() * &x / rows.len().saturating_sub(1).max(1) as f64;
            let chol = factor(cov, &x, rows.len() <= d)?;
            let log_det = log_det(&chol);
            Ok(Gaussian { mean, chol, log_det })
        };
        let n = (neg.len() + pos.len()) as f64;
        Ok(Qda {
            classes: [fit_one(neg)?, fit_one(pos)?],
            log_prior: [(neg.len() as f64 / n).ln(), (pos.len() as f64 / n).ln()],
        })
    }

    fn log_density(&self, k: usize, row: &[f64]) -> f64 {
        let g = &self.classes[k];
        let diff = DVector::from_column_slice(row) - &g.mean;
        let z = g.chol.l_dirty().solve_lower_triangular(&diff).unwrap_or(diff);
        -0.5 * (g.log_det + z.norm_squared()) + self.log_prior[k]
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.log_density(1, row) - self.log_density(0, row)
    }
}
