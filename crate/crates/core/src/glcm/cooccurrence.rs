use super::GrayImage;
use crate::{Error, Result};

/// Pixel offsets `(dy, dx)` for 0°, 45°, 90° and 135°, in feature order.
pub const ORIENTATIONS: [(i32, i32); 4] = [(0, 1), (-1, 1), (-1, 0), (-1, -1)];
const ANGLE_TAGS: [&str; 4] = ["0", "45", "90", "135"];

/// Haralick feature names in output order.
pub const HARALICK_NAMES: [&str; 13] = [
    "asm",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "idm",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "imc1",
    "imc2",
];

/// Symmetric, normalised co-occurrence matrix for one offset.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    p: Vec<f64>,
    levels: usize,
    offset: (i32, i32),
}

impl GlcmMatrix {
    /// Wrap explicit probabilities (row-major `levels x levels`).
    pub fn from_probabilities(levels: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != levels * levels || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidImage("malformed co-occurrence matrix".into()));
        }
        Ok(GlcmMatrix { p, levels, offset: (0, 0) })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn offset(&self) -> (i32, i32) {
        self.offset
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

fn quantize(value: u16, max_level: u16, levels: usize) -> usize {
    (value as usize * levels) / (max_level as usize + 1)
}

pub fn compute_glcm(img: &GrayImage, offset: (i32, i32), levels: usize) -> Result<GlcmMatrix> {
    if levels < 2 {
        return Err(Error::InvalidImage(format!("need at least 2 levels, got {levels}")));
    }
    let (dy, dx) = offset;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut counts = vec![0u64; levels * levels];
    let mut total = 0u64;
    let q: Vec<usize> = img.pixels().iter().map(|&p| quantize(p, img.max_level(), levels)).collect();
    for y in 0..h {
        let ny = y + dy as i64;
        if ny < 0 || ny >= h {
            continue;
        }
        for x in 0..w {
            let nx = x + dx as i64;
            if nx < 0 || nx >= w {
                continue;
            }
            let a = q[(y * w + x) as usize];
            let b = q[(ny * w + nx) as usize];
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
            total += 2;
        }
    }
    if total == 0 {
        return Err(Error::NoValidPairs { dy, dx });
    }
    let p = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(GlcmMatrix { p, levels, offset })
}

fn plog2(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn entropy(ps: impl IntoIterator<Item = f64>) -> f64 {
    -ps.into_iter().map(plog2).sum::<f64>()
}

/// The 13 Haralick statistics, base-2 logarithms, `0 log 0 = 0`.
pub fn haralick13(m: &GlcmMatrix) -> [f64; 13] {
    let n = m.levels();
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            px[i] += v;
            py[j] += v;
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
        }
    }
    let mean_x: f64 = px.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
    let mean_y: f64 = py.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
    let var_x: f64 = px.iter().enumerate().map(|(i, p)| (i as f64 - mean_x).powi(2) * p).sum();
    let var_y: f64 = py.iter().enumerate().map(|(j, p)| (j as f64 - mean_y).powi(2) * p).sum();

    let mut asm = 0.0;
    let mut idm = 0.0;
    let mut cross = 0.0;
    let mut hxy = 0.0;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            let d = i as f64 - j as f64;
            asm += v * v;
            idm += v / (1.0 + d * d);
            cross += (i as f64 - mean_x) * (j as f64 - mean_y) * v;
            hxy -= plog2(v);
            let pxy = px[i] * py[j];
            if pxy > 0.0 {
                hxy1 -= v * pxy.log2();
                hxy2 -= plog2(pxy);
            }
        }
    }

    let contrast: f64 = p_diff.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
    let correlation = if var_x > 0.0 && var_y > 0.0 { cross / (var_x.sqrt() * var_y.sqrt()) } else { 0.0 };
    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let sum_variance: f64 = p_sum.iter().enumerate().map(|(k, p)| (k as f64 - sum_average).powi(2) * p).sum();
    let sum_entropy = entropy(p_sum.iter().copied());
    let diff_mean: f64 = p_diff.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let diff_variance: f64 = p_diff.iter().enumerate().map(|(k, p)| (k as f64 - diff_mean).powi(2) * p).sum();
    let diff_entropy = entropy(p_diff.iter().copied());
    let hx = entropy(px.iter().copied());
    let hy = entropy(py.iter().copied());
    let imc1 = if hx.max(hy) > 0.0 { (hxy - hxy1) / hx.max(hy) } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    [
        asm,
        contrast,
        correlation,
        var_x,
        idm,
        sum_average,
        sum_variance,
        sum_entropy,
        hxy,
        diff_variance,
        diff_entropy,
        imc1,
        imc2,
    ]
}

/// 13 Haralick features for each of the four orientations, orientation-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector52 {
    pub values: [f64; 52],
}

impl FeatureVector52 {
    /// The 13-feature block for orientation `k` (0 = 0°, ..., 3 = 135°).
    pub fn block(&self, k: usize) -> &[f64] {
        &self.values[13 * k..13 * (k + 1)]
    }
}

/// Column names such as `contrast_45`, in feature order.
pub fn feature_names() -> Vec<String> {
    ANGLE_TAGS.iter().flat_map(|a| HARALICK_NAMES.iter().map(move |n| format!("{n}_{a}"))).collect()
}

pub fn extract_features(img: &GrayImage, levels: usize) -> Result<FeatureVector52> {
    let mut values = [0.0; 52];
    for (k, &offset) in ORIENTATIONS.iter().enumerate() {
        let glcm = compute_glcm(img, offset, levels)?;
        values[13 * k..13 * (k + 1)].copy_from_slice(&haralick13(&glcm));
    }
    Ok(FeatureVector52 { values })
}
