use crate::dataset::Dataset;
use crate::Result;

const EPOCHS: usize = 200;

/// Soft-margin linear separator trained by full-batch hinge-loss subgradient
/// descent on standardised features.
///
/// Only used to locate minority samples near the class boundary, so there is
/// no kernel and no probability output.
#[derive(Debug, Clone)]
pub struct LinearSvm {
    weights: Vec<f64>,
    bias: f64,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl LinearSvm {
    /// `positive` is the label mapped to +1. Regularisation is `1 / n`.
    pub fn fit(ds: &Dataset, positive: u8) -> Result<Self> {
        let labels = ds.hard_labels()?;
        let (mean, scale) = ds.column_stats();
        let d = ds.n_features();
        let n = ds.len();
        let xs: Vec<Vec<f64>> =
            ds.rows().map(|r| r.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect()).collect();
        let ys: Vec<f64> = labels.iter().map(|&l| if l == positive { 1.0 } else { -1.0 }).collect();
        let lambda = 1.0 / n as f64;

        let objective = |w: &[f64], b: f64| -> f64 {
            let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
            let hinge: f64 = xs.iter().zip(&ys).map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0)).sum();
            reg + hinge / n as f64
        };

        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut best = (objective(&w, b), w.clone(), b);
        for epoch in 1..=EPOCHS {
            let mut gw: Vec<f64> = w.iter().map(|v| lambda * v).collect();
            let mut gb = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                if y * (dot(&w, x) + b) < 1.0 {
                    for (g, xi) in gw.iter_mut().zip(x) {
                        *g -= y * xi / n as f64;
                    }
                    gb -= y / n as f64;
                }
            }
            let step = 1.0 / (epoch as f64).sqrt();
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= step * g;
            }
            b -= step * gb;
            let obj = objective(&w, b);
            if obj < best.0 {
                best = (obj, w.clone(), b);
            }
        }
        Ok(LinearSvm { weights: best.1, bias: best.2, mean, scale })
    }

    /// Signed decision value; `|value| <= 1` is inside the margin.
    pub fn decision(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .zip(&self.weights)
            .map(|(((v, m), s), w)| (v - m) / s * w)
            .sum::<f64>()
            + self.bias
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
