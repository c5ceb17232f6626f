//! Feature matrices with binary labels, delimited-file IO and stratified splits.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// Row-major feature matrix with labels in `[0, 1]` (1 = positive).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<f64>,
    feature_names: Vec<String>,
    categorical_mask: Vec<bool>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        let n_features = feature_names.len();
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::InvalidDataset(format!("row {i} has {} values, expected {n_features}", row.len())));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, n_features, labels, feature_names)
    }

    pub fn from_flat(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if feature_names.len() != n_features {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {n_features} columns",
                feature_names.len()
            )));
        }
        let n_rows = if n_features == 0 { labels.len() } else { features.len() / n_features };
        if n_features > 0 && features.len() % n_features != 0 || n_rows != labels.len() {
            return Err(Error::InvalidDataset(format!("{} labels for {n_rows} rows", labels.len())));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        if labels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidDataset("label outside [0, 1]".into()));
        }
        Ok(Dataset { features, n_features, labels, categorical_mask: vec![false; feature_names.len()], feature_names })
    }

    /// Generic names `x0..x{n-1}`.
    pub fn default_names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    pub fn with_categorical_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.n_features {
            return Err(Error::InvalidDataset(format!(
                "categorical mask of length {} for {} columns",
                mask.len(),
                self.n_features
            )));
        }
        self.categorical_mask = mask;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn categorical_mask(&self) -> &[bool] {
        &self.categorical_mask
    }

    /// Column-major copy of the features, one vector per column.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features).map(|j| self.rows().map(|r| r[j]).collect()).collect()
    }

    pub fn is_hard_labeled(&self) -> bool {
        self.labels.iter().all(|&l| l == 0.0 || l == 1.0)
    }

    /// Labels as 0/1 bytes, failing on soft labels.
    pub fn hard_labels(&self) -> Result<Vec<u8>> {
        self.labels
            .iter()
            .map(|&l| {
                if l == 0.0 {
                    Ok(0)
                } else if l == 1.0 {
                    Ok(1)
                } else {
                    Err(Error::SoftLabelsPresent)
                }
            })
            .collect()
    }

    /// `(n_negative, n_positive)`.
    pub fn class_counts(&self) -> Result<(usize, usize)> {
        let labels = self.hard_labels()?;
        let pos = labels.iter().filter(|&&l| l == 1).count();
        Ok((labels.len() - pos, pos))
    }

    /// Indices of rows with the given hard label.
    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        let target = f64::from(class);
        (0..self.len()).filter(|&i| self.labels[i] == target).collect()
    }

    /// New dataset holding the given rows in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels,
            feature_names: self.feature_names.clone(),
            categorical_mask: self.categorical_mask.clone(),
        }
    }

    /// Append rows; every value must be finite.
    pub fn extend(&mut self, rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<()> {
        assert_eq!(rows.len(), labels.len());
        for row in &rows {
            if row.len() != self.n_features || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset("appended row is malformed".into()));
            }
        }
        for row in rows {
            self.features.extend(row);
        }
        self.labels.extend(labels);
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn set_labels(&mut self, labels: Vec<f64>) {
        assert_eq!(labels.len(), self.labels.len());
        self.labels = labels;
    }

    /// Per-column mean and standard deviation (population); zero deviations become 1.
    pub fn column_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len().max(1) as f64;
        let mut mean = vec![0.0; self.n_features];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut sd = vec![0.0; self.n_features];
        for row in self.rows() {
            for ((s, v), m) in sd.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut sd {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        (mean, sd)
    }

    /// Apply `(x - mean) / sd` to every non-categorical column.
    pub fn standardized(&self, mean: &[f64], sd: &[f64]) -> Dataset {
        let mut out = self.clone();
        for row in out.features.chunks_mut(self.n_features.max(1)) {
            for j in 0..row.len() {
                if !self.categorical_mask[j] {
                    row[j] = (row[j] - mean[j]) / sd[j];
                }
            }
        }
        out
    }

    /// Write `names..., label` with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in &self.feature_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("label\n");
        for (row, label) in self.rows().zip(&self.labels) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{label}\n"));
        }
        out
    }

    /// Write the CSV plus a `<path>.schema.toml` sidecar describing it.
    pub fn write_with_schema(&self, path: &Path) -> Result<()> {
        self.write_csv(path)?;
        let schema = TabularSchema {
            label_column: "label".into(),
            positive_label_token: "1".into(),
            id_columns: Vec::new(),
            categorical_columns: self
                .feature_names
                .iter()
                .zip(&self.categorical_mask)
                .filter(|(_, &c)| c)
                .map(|(n, _)| n.clone())
                .collect(),
        };
        let text = toml::to_string(&schema).map_err(|e| Error::Config(e.to_string()))?;
        let sidecar = schema_path(path);
        fs::write(&sidecar, text).map_err(|e| Error::io(sidecar, e))
    }
}

pub fn schema_path(csv: &Path) -> std::path::PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".schema.toml");
    name.into()
}

/// Describes how to read a delimited file.
///
/// Columns are referenced by header name, or by zero-based index when the
/// file has no header row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSchema {
    pub label_column: String,
    /// Label cell value mapped to class 1; anything else is class 0.
    pub positive_label_token: String,
    #[serde(default)]
    pub id_columns: Vec<String>,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
}

impl TabularSchema {
    /// Layout of the UCI WDBC file: id, diagnosis (M/B), 30 reals, no header.
    pub fn wdbc() -> Self {
        TabularSchema {
            label_column: "1".into(),
            positive_label_token: "M".into(),
            id_columns: vec!["0".into()],
            categorical_columns: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// WDBC feature names in file order.
pub const WDBC_FEATURES: [&str; 30] = [
    "radius_mean",
    "texture_mean",
    "perimeter_mean",
    "area_mean",
    "smoothness_mean",
    "compactness_mean",
    "concavity_mean",
    "concave_points_mean",
    "symmetry_mean",
    "fractal_dimension_mean",
    "radius_se",
    "texture_se",
    "perimeter_se",
    "area_se",
    "smoothness_se",
    "compactness_se",
    "concavity_se",
    "concave_points_se",
    "symmetry_se",
    "fractal_dimension_se",
    "radius_worst",
    "texture_worst",
    "perimeter_worst",
    "area_worst",
    "smoothness_worst",
    "compactness_worst",
    "concavity_worst",
    "concave_points_worst",
    "symmetry_worst",
    "fractal_dimension_worst",
];

pub fn load_tabular(path: &Path, schema: &TabularSchema) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tabular(&text, schema).map_err(|e| match e {
        Error::EmptyFile(_) => Error::EmptyFile(path.to_path_buf()),
        other => other,
    })
}

pub fn parse_tabular(text: &str, schema: &TabularSchema) -> Result<Dataset> {
    let lines: Vec<Vec<&str>> =
        text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.split(',').map(str::trim).collect()).collect();
    if lines.is_empty() {
        return Err(Error::EmptyFile(Default::default()));
    }
    let width = lines[0].len();
    for (i, l) in lines.iter().enumerate() {
        if l.len() != width {
            return Err(Error::RaggedRow { row: i, found: l.len(), expected: width });
        }
    }

    let label_index_hint = schema.label_column.parse::<usize>().ok();
    let has_header =
        lines[0].iter().enumerate().any(|(j, cell)| Some(j) != label_index_hint && cell.parse::<f64>().is_err());
    let header: Vec<String> = if has_header {
        lines[0].iter().map(|s| s.to_string()).collect()
    } else {
        (0..width).map(|j| j.to_string()).collect()
    };
    let resolve = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .or_else(|| {
                // Without a header, every column is addressable by index.
                if has_header {
                    None
                } else {
                    name.parse::<usize>().ok().filter(|&j| j < width)
                }
            })
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let label_col = resolve(&schema.label_column)?;
    let mut dropped = vec![false; width];
    dropped[label_col] = true;
    for id in &schema.id_columns {
        dropped[resolve(id)?] = true;
    }
    let mut categorical = vec![false; width];
    for c in &schema.categorical_columns {
        categorical[resolve(c)?] = true;
    }
    let kept: Vec<usize> = (0..width).filter(|&j| !dropped[j]).collect();

    let body = if has_header { &lines[1..] } else { &lines[..] };
    let mut features = Vec::with_capacity(body.len() * kept.len());
    let mut labels = Vec::with_capacity(body.len());
    let row_offset = usize::from(has_header);
    for (i, cells) in body.iter().enumerate() {
        labels.push(if cells[label_col] == schema.positive_label_token { 1.0 } else { 0.0 });
        for &j in &kept {
            let v = cells[j].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::NonNumericValue {
                row: i + row_offset,
                column: j,
                value: cells[j].to_string(),
            })?;
            features.push(v);
        }
    }
    let names = kept
        .iter()
        .map(|&j| {
            if has_header {
                header[j].clone()
            } else if width == 32 && kept.len() == 30 && j >= 2 {
                WDBC_FEATURES[j - 2].to_string()
            } else {
                format!("x{j}")
            }
        })
        .collect();
    let mask = kept.iter().map(|&j| categorical[j]).collect();
    Dataset::from_flat(features, kept.len(), labels, names)?.with_categorical_mask(mask)
}

/// Disjoint, stratified train/test partition.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Per class, `floor(fraction * class_size)` rows go to train and the rest to test.
pub fn stratified_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidDataset(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let labels = ds.hard_labels()?;
    let mut rng = rng::stream(seed, rng::stream::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::DegenerateClass { class, count: idx.len() });
        }
        idx.shuffle(&mut rng);
        let n_train = (train_fraction * idx.len() as f64).floor() as usize;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPair { train: ds.select(&train), test: ds.select(&test), seed, train_indices: train, test_indices: test })
}

/// Count of rows per distinct label value; used for reporting.
pub fn label_histogram(ds: &Dataset) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for l in ds.labels() {
        *out.entry(l.to_string()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n_neg: usize, n_pos: usize) -> Dataset {
        let rows = (0..n_neg + n_pos).map(|i| vec![i as f64]).collect();
        let labels = (0..n_neg + n_pos).map(|i| if i < n_neg { 0.0 } else { 1.0 }).collect();
        Dataset::new(rows, labels, vec!["a".into()]).unwrap()
    }

    #[test]
    fn single_row_file() {
        let schema = TabularSchema {
            label_column: "0".into(),
            positive_label_token: "1".into(),
            id_columns: vec![],
            categorical_columns: vec![],
        };
        let ds = parse_tabular("1,0.5,2.5\n", &schema).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels(), &[1.0]);
        assert_eq!(ds.row(0), &[0.5, 2.5]);
    }

    #[test]
    fn non_numeric_cell_reports_coordinates() {
        let schema = TabularSchema {
            label_column: "label".into(),
            positive_label_token: "1".into(),
            id_columns: vec![],
            categorical_columns: vec![],
        };
        let err = parse_tabular("a,b,label\n1,2,0\n3,abc,1\n", &schema).unwrap_err();
        match err {
            Error::NonNumericValue { row, column, value } => {
                assert_eq!((row, column, value.as_str()), (2, 1, "abc"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_label_column() {
        let schema = TabularSchema {
            label_column: "diagnosis".into(),
            positive_label_token: "M".into(),
            id_columns: vec![],
            categorical_columns: vec![],
        };
        assert!(matches!(parse_tabular("a,b\n1,2\n", &schema), Err(Error::MissingColumn(_))));
        assert!(matches!(parse_tabular("\n\n", &schema), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn header_and_categorical_mask() {
        let schema = TabularSchema {
            label_column: "y".into(),
            positive_label_token: "yes".into(),
            id_columns: vec!["id".into()],
            categorical_columns: vec!["c".into()],
        };
        let ds = parse_tabular("id,a,c,y\n7,1.5,2,yes\n8,2.5,1,no\n", &schema).unwrap();
        assert_eq!(ds.feature_names(), &["a".to_string(), "c".to_string()]);
        assert_eq!(ds.categorical_mask(), &[false, true]);
        assert_eq!(ds.labels(), &[1.0, 0.0]);
    }

    #[test]
    fn class_counts_edge_cases() {
        let empty = Dataset::new(vec![], vec![], vec!["a".into()]).unwrap();
        assert_eq!(empty.class_counts().unwrap(), (0, 0));
        assert_eq!(toy(0, 3).class_counts().unwrap(), (0, 3));
        let mut soft = toy(1, 1);
        soft.set_labels(vec![0.0, 0.5]);
        assert!(matches!(soft.class_counts(), Err(Error::SoftLabelsPresent)));
    }

    #[test]
    fn split_exact_division() {
        let s = stratified_split(&toy(5, 5), 0.8, 1).unwrap();
        assert_eq!(s.train.class_counts().unwrap(), (4, 4));
        assert_eq!(s.test.class_counts().unwrap(), (1, 1));
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy(40, 13);
        let a = stratified_split(&ds, 0.8, 7).unwrap();
        let b = stratified_split(&ds, 0.8, 7).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.train.to_csv(), b.train.to_csv());
        let c = stratified_split(&ds, 0.8, 8).unwrap();
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn split_rejects_degenerate_class() {
        assert!(matches!(stratified_split(&toy(10, 1), 0.8, 0), Err(Error::DegenerateClass { class: 1, count: 1 })));
    }

    #[test]
    fn csv_round_trip_via_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = toy(3, 2);
        ds.write_with_schema(&path).unwrap();
        let schema = TabularSchema::load(&schema_path(&path)).unwrap();
        let back = load_tabular(&path, &schema).unwrap();
        assert_eq!(back, ds);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn split_preserves_counts_and_stratifies(
                n_neg in 2usize..60, n_pos in 2usize..60, frac in 0.1f64..0.9, seed in 0u64..1000
            ) {
                let ds = toy(n_neg, n_pos);
                let s = stratified_split(&ds, frac, seed).unwrap();
                let (tn, tp) = s.train.class_counts().unwrap();
                let (sn, sp) = s.test.class_counts().unwrap();
                prop_assert_eq!((tn + sn, tp + sp), (n_neg, n_pos));
                let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
                all.sort_unstable();
                all.dedup();
                prop_assert_eq!(all.len(), n_neg + n_pos);
                prop_assert!((tn as f64 - frac * n_neg as f64).abs() < 1.0);
                prop_assert!((tp as f64 - frac * n_pos as f64).abs() < 1.0);
                if !s.train.is_empty() {
                    let full = n_pos as f64 / (n_neg + n_pos) as f64;
                    let tr = tp as f64 / (tn + tp) as f64;
                    prop_assert!((tr - full).abs() <= 1.0 / (tn + tp) as f64 + 1e-12);
                }
            }
        }
    }
}
