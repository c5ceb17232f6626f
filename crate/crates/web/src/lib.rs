//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export has a plain-Rust twin so it can be tested natively.

use serde::Serialize;
use stemge::augment::{augment, AugmentConfig, Method};
use stemge::dataset::Dataset;
use stemge::glcm::{extract_features, GrayImage};
use stemge::metrics::RocCurve;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Balance a 2-D point cloud.
///
/// `xy` is `[x0, y0, x1, y1, ...]`; the result is `[x, y, label, ...]`
/// with the original points first.
pub fn augment_points_impl(xy: &[f64], labels: &[u8], method: &str, seed: u64) -> Result<Vec<f64>, String> {
    if xy.len() != 2 * labels.len() {
        return Err(format!("{} coordinates for {} labels", xy.len(), labels.len()));
    }
    let method: Method = method.parse().map_err(|e: stemge::Error| e.to_string())?;
    let rows = xy.chunks(2).map(<[f64]>::to_vec).collect();
    let ds = Dataset::new(rows, labels.iter().map(|&l| f64::from(l)).collect(), vec!["x".into(), "y".into()])
        .map_err(|e| e.to_string())?;
    let out = augment(&ds, &AugmentConfig::new(method, seed)).map_err(|e| e.to_string())?;
    Ok(out.rows().zip(out.labels()).flat_map(|(r, &l)| [r[0], r[1], l]).collect())
}

#[wasm_bindgen]
pub fn augment_points(xy: &[f64], labels: &[u8], method: &str, seed: u32) -> Result<Vec<f64>, JsValue> {
    augment_points_impl(xy, labels, method, u64::from(seed)).map_err(js_err)
}

#[derive(Debug, Serialize)]
pub struct RocJson {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

pub fn roc_curve_impl(scores: &[f64], labels: &[u8]) -> Result<RocJson, String> {
    let roc = RocCurve::new(scores, labels).map_err(|e| e.to_string())?;
    let (fpr, tpr) = roc.points.iter().copied().unzip();
    Ok(RocJson { fpr, tpr, auc: roc.area() })
}

/// ROC points and trapezoidal AUC as JSON `{"fpr", "tpr", "auc"}`.
#[wasm_bindgen]
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<String, JsValue> {
    let roc = roc_curve_impl(scores, labels).map_err(js_err)?;
    serde_json::to_string(&roc).map_err(js_err)
}

pub fn texture_features_impl(gray: &[u8], width: usize, height: usize, levels: usize) -> Result<Vec<f64>, String> {
    let pixels = gray.iter().map(|&p| u16::from(p)).collect();
    let img = GrayImage::new(width, height, 255, pixels).map_err(|e| e.to_string())?;
    Ok(extract_features(&img, levels).map_err(|e| e.to_string())?.values.to_vec())
}

/// The 52 Haralick features (13 per orientation) of an 8-bit image.
#[wasm_bindgen]
pub fn texture_features(gray: &[u8], width: usize, height: usize, levels: usize) -> Result<Vec<f64>, JsValue> {
    texture_features_impl(gray, width, height, levels).map_err(js_err)
}
