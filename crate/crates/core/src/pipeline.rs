//! End-to-end commands: feature extraction, experiment runs, method
//! comparison and result collation.
//!
//! A run writes one directory per setup:
//!
//! ```text
//! <out>/<setup>/manifest.json        seeds, config hash, per-cell status
//! <out>/<setup>/train.csv, test.csv  the single stratified split
//! <out>/<setup>/summary.csv          one results row per method
//! <out>/<setup>/feature_usage.csv    variable usage over all best GE trees
//! <out>/<setup>/<method>/{train_aug.csv, ge_runs.json, ge_aucs.csv, baselines.csv, ensemble.csv}
//! <out>/<setup>/comparison/{matrix.csv, scores.csv}   (written by compare)
//! ```
//!
//! Every artifact is a pure function of the spec and the input files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment, Method};
use crate::baselines::{fit_ensemble, predict_vote};
use crate::bayes::{comparison_matrix, BayesParams, ComparisonMatrix};
use crate::config::{DatasetSource, ExperimentSpec, Preset};
use crate::dataset::{load_tabular, schema_path, stratified_split, Dataset, TabularSchema};
use crate::evolution::{run_many, ExperimentSummary, RunResult};
use crate::glcm::{
    self, extract_features, feature_names, median_filter, read_pgm, remove_background, segment_image, GrayImage,
};
use crate::grammar::classifier_grammar;
use crate::metrics::{feature_usage, sensitivity_specificity, Rate};
use crate::{Error, Result};

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- features

/// One image listed in a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: u8,
    pub view: String,
}

fn parse_label(s: &str) -> Option<u8> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "m" | "malignant" | "positive" => Some(1),
        "0" | "b" | "benign" | "negative" | "normal" => Some(0),
        _ => None,
    }
}

/// Parse `path,label,view` lines; an optional header row is skipped and
/// relative paths are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && cells.first().is_some_and(|c| c.eq_ignore_ascii_case("path")) {
            continue;
        }
        if cells.len() < 2 {
            return Err(Error::Config(format!("manifest line {}: expected path,label[,view]", i + 1)));
        }
        let label = parse_label(cells[1])
            .ok_or_else(|| Error::Config(format!("manifest line {}: unknown label `{}`", i + 1, cells[1])))?;
        let path = Path::new(cells[0]);
        out.push(ManifestEntry {
            path: if path.is_relative() { base.join(path) } else { path.to_path_buf() },
            label,
            view: cells.get(2).map_or_else(String::new, |v| v.to_string()),
        })
    }
    Ok(out)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Median filter followed by background removal.
pub fn preprocess(img: &GrayImage, median_window: usize) -> Result<GrayImage> {
    let window = median_window.min(img.width().min(img.height()));
    let window = if window % 2 == 0 { window.saturating_sub(1) } else { window };
    let filtered = if window >= 3 { median_filter(img, window)? } else { img.clone() };
    remove_background(&filtered)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    #[default]
    Whole,
    /// Whole-image rows plus one row per overlapping band.
    Segments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturesOptions {
    pub levels: usize,
    pub overlap: f64,
    pub median_window: usize,
    pub mode: FeatureMode,
    /// Keep only manifest rows with this view tag.
    pub view: Option<String>,
}

impl Default for FeaturesOptions {
    fn default() -> Self {
        FeaturesOptions {
            levels: glcm::DEFAULT_LEVELS,
            overlap: glcm::DEFAULT_OVERLAP,
            median_window: glcm::DEFAULT_MEDIAN_WINDOW,
            mode: FeatureMode::Whole,
            view: None,
        }
    }
}

#[derive(Debug, Default)]
pub struct FeaturesOutcome {
    pub written: Vec<PathBuf>,
    pub images: usize,
    pub failures: Vec<(PathBuf, String)>,
}

const SEGMENT_TAGS: [&str; 3] = ["top", "middle", "bottom"];

fn image_rows(entry: &ManifestEntry, opts: &FeaturesOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let img = read_pgm(&entry.path)?;
    let clean = preprocess(&img, opts.median_window)?;
    let whole = extract_features(&clean, opts.levels)?.values.to_vec();
    let mut bands = Vec::new();
    if opts.mode == FeatureMode::Segments {
        let s = segment_image(&clean, opts.overlap)?;
        for band in [&s.top, &s.middle, &s.bottom] {
            bands.push(extract_features(band, opts.levels)?.values.to_vec());
        }
    }
    Ok((whole, bands))
}

/// Extract texture features for every manifest image.
///
/// Writes `whole.csv` (52 features + label) and, in segment mode,
/// `segments.csv` (52 features + segment tag + label), each with a schema
/// sidecar. Unreadable images are reported in the outcome and skipped.
pub fn cmd_features(manifest: &Path, opts: &FeaturesOptions, out_dir: &Path) -> Result<FeaturesOutcome> {
    let entries: Vec<ManifestEntry> = load_manifest(manifest)?
        .into_iter()
        .filter(|e| opts.view.as_ref().is_none_or(|v| e.view.eq_ignore_ascii_case(v)))
        .collect();
    let results: Vec<Result<(Vec<f64>, Vec<Vec<f64>>)>> = entries.par_iter().map(|e| image_rows(e, opts)).collect();

    let mut outcome = FeaturesOutcome::default();
    let (mut whole_rows, mut whole_labels) = (Vec::new(), Vec::new());
    let mut seg_csv = String::new();
    let names = feature_names();
    for n in &names {
        let _ = write!(seg_csv, "{n},");
    }
    seg_csv.push_str("segment,label\n");
    for (entry, res) in entries.iter().zip(results) {
        match res {
            Ok((whole, bands)) => {
                outcome.images += 1;
                whole_rows.push(whole);
                whole_labels.push(f64::from(entry.label));
                for (tag, band) in SEGMENT_TAGS.iter().zip(bands) {
                    for v in band {
                        let _ = write!(seg_csv, "{v},");
                    }
                    let _ = writeln!(seg_csv, "{tag},{}", entry.label);
                }
            }
            Err(e) => {
                log::error!("{}: {e}", entry.path.display());
                outcome.failures.push((entry.path.clone(), e.to_string()));
            }
        }
    }
    create_dir(out_dir)?;
    let whole_path = out_dir.join("whole.csv");
    Dataset::new(whole_rows, whole_labels, names)?.write_with_schema(&whole_path)?;
    outcome.written.push(whole_path);
    if opts.mode == FeatureMode::Segments {
        let seg_path = out_dir.join("segments.csv");
        write(&seg_path, seg_csv)?;
        let schema = TabularSchema {
            label_column: "label".into(),
            positive_label_token: "1".into(),
            id_columns: vec!["segment".into()],
            categorical_columns: Vec::new(),
        };
        let text = toml::to_string(&schema).map_err(|e| Error::Config(e.to_string()))?;
        write(&schema_path(&seg_path), text)?;
        outcome.written.push(seg_path);
    }
    Ok(outcome)
}

// --------------------------------------------------------------------- run

/// Materialise the dataset named by a spec.
pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Tabular { path, preset, schema } => {
            let schema = match (schema, preset) {
                (Some(s), _) => s.clone(),
                (None, Some(Preset::Wdbc)) => TabularSchema::wdbc(),
                (None, None) => TabularSchema::load(&schema_path(path))?,
            };
            let ds = load_tabular(path, &schema)?;
            if matches!(preset, Some(Preset::Wdbc)) && ds.n_features() == crate::dataset::WDBC_FEATURES.len() {
                let names = crate::dataset::WDBC_FEATURES.iter().map(|s| s.to_string()).collect();
                let labels = ds.labels().to_vec();
                let rows = ds.rows().map(<[f64]>::to_vec).collect();
                return Dataset::new(rows, labels, names);
            }
            Ok(ds)
        }
        DatasetSource::Manifest { manifest, view, levels, median_window } => {
            let opts = FeaturesOptions {
                levels: *levels,
                median_window: *median_window,
                view: view.clone(),
                ..Default::default()
            };
            let entries: Vec<ManifestEntry> = load_manifest(manifest)?
                .into_iter()
                .filter(|e| view.as_ref().is_none_or(|v| e.view.eq_ignore_ascii_case(v)))
                .collect();
            let rows = entries.par_iter().map(|e| image_rows(e, &opts).map(|(w, _)| w)).collect::<Result<Vec<_>>>()?;
            let labels = entries.iter().map(|e| f64::from(e.label)).collect();
            Dataset::new(rows, labels, feature_names())
        }
    }
}

/// Results of one (setup, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub train_counts: (usize, usize),
    pub ge: ExperimentSummary,
    pub ensemble: String,
    pub ensemble_auc: f64,
    #[serde(skip)]
    pub best_phenotypes: Vec<crate::grammar::Phenotype>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellRecord {
    method: Method,
    augment_seed: u64,
    ge_seeds: Vec<u64>,
    model_seed: u64,
    status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunManifest {
    setup: String,
    config_hash: String,
    base_seed: u64,
    split_seed: u64,
    train_fraction: f64,
    train_counts: (usize, usize),
    test_counts: (usize, usize),
    n_features: usize,
    standardized: bool,
    cells: Vec<CellRecord>,
    spec: ExperimentSpec,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub setup_dir: PathBuf,
    pub cells: Vec<(Method, std::result::Result<CellSummary, String>)>,
}

impl RunOutcome {
    pub fn failed(&self) -> Vec<Method> {
        self.cells.iter().filter(|(_, r)| r.is_err()).map(|(m, _)| *m).collect()
    }
}

fn fmt_rate(r: Rate) -> String {
    r.value().map_or_else(|| "NA".into(), |v| format!("{v}"))
}

fn run_cell(spec: &ExperimentSpec, method: Method, train: &Dataset, test: &Dataset, dir: &Path) -> Result<CellSummary> {
    create_dir(dir)?;
    let aug_cfg = spec.augment.for_method(method, spec.base_seed);
    let train_aug = augment(train, &aug_cfg)?;
    train_aug.write_csv(&dir.join("train_aug.csv"))?;

    let grammar = classifier_grammar(train.n_features())?;
    let ge_cfg = spec.ge_config();
    let runs: Vec<RunResult> = run_many(&ge_cfg, &grammar, &train_aug, test)?;
    write(&dir.join("ge_runs.json"), serde_json::to_string_pretty(&runs)? + "\n")?;
    let mut csv = String::from("run,seed,train_auc,test_auc\n");
    for r in &runs {
        let _ = writeln!(csv, "{},{},{},{}", r.run_index, r.seed, r.train_auc, r.test_auc);
    }
    write(&dir.join("ge_aucs.csv"), csv)?;
    let ge = ExperimentSummary::from_runs(&runs);

    let (models, ensemble) = fit_ensemble(&train_aug, &spec.baselines, spec.base_seed)?;
    let mut csv = String::from("model,train_auc,test_auc,selected\n");
    for m in &models {
        let selected = ensemble.members.iter().any(|e| e.kind == m.kind);
        let _ = writeln!(csv, "{},{},{},{}", m.kind, m.train_auc, m.auc(test)?, selected);
    }
    write(&dir.join("baselines.csv"), csv)?;
    let ensemble_auc = ensemble.auc(test)?;
    let hard: Vec<u8> = test.rows().map(|r| predict_vote(&ensemble, r).0).collect();
    let (sens, spec_) = sensitivity_specificity(&hard, &test.hard_labels()?)?;
    let initials = ensemble.initials();
    write(
        &dir.join("ensemble.csv"),
        format!(
            "setup,augmentation,ensemble,test_auc,sensitivity,specificity\n{},{},{},{},{},{}\n",
            spec.setup_name,
            method.label(),
            initials,
            ensemble_auc,
            fmt_rate(sens),
            fmt_rate(spec_)
        ),
    )?;
    Ok(CellSummary {
        method,
        train_counts: train_aug.class_counts()?,
        ge,
        ensemble: initials,
        ensemble_auc,
        best_phenotypes: runs.into_iter().map(|r| r.best_phenotype).collect(),
    })
}

/// Run every configured method on one shared split. A failing cell is
/// recorded in the manifest and the remaining cells still run.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let ds = load_dataset(&spec.dataset)?;
    let split = stratified_split(&ds, spec.train_fraction, spec.base_seed)?;
    let (train, test) = if spec.standardize {
        let (mean, sd) = split.train.column_stats();
        (split.train.standardized(&mean, &sd), split.test.standardized(&mean, &sd))
    } else {
        (split.train.clone(), split.test.clone())
    };
    let setup_dir = spec.output_dir.join(&spec.setup_name);
    create_dir(&setup_dir)?;
    train.write_with_schema(&setup_dir.join("train.csv"))?;
    test.write_with_schema(&setup_dir.join("test.csv"))?;

    let cells: Vec<(Method, std::result::Result<CellSummary, String>)> = spec
        .methods
        .par_iter()
        .map(|&m| {
            let res = run_cell(spec, m, &train, &test, &setup_dir.join(m.name())).map_err(|e| {
                log::error!("{}/{}: {e}", spec.setup_name, m.name());
                e.to_string()
            });
            (m, res)
        })
        .collect();

    let mut summary = String::from("setup,augmentation,ge_median,ge_q1,ge_q3,ensemble,ensemble_auc\n");
    let mut all_best = Vec::new();
    for (m, res) in &cells {
        if let Ok(c) = res {
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{},{}",
                spec.setup_name,
                m.label(),
                c.ge.median,
                c.ge.q1,
                c.ge.q3,
                c.ensemble,
                c.ensemble_auc
            );
            all_best.extend(c.best_phenotypes.iter());
        }
    }
    write(&setup_dir.join("summary.csv"), summary)?;
    if !all_best.is_empty() {
        write(&setup_dir.join("feature_usage.csv"), feature_usage(all_best)?.to_csv())?;
    }

    let ge_cfg = spec.ge_config();
    let manifest = RunManifest {
        setup: spec.setup_name.clone(),
        config_hash: spec.config_hash(),
        base_seed: spec.base_seed,
        split_seed: split.seed,
        train_fraction: spec.train_fraction,
        train_counts: train.class_counts()?,
        test_counts: test.class_counts()?,
        n_features: train.n_features(),
        standardized: spec.standardize,
        cells: cells
            .iter()
            .map(|(m, res)| CellRecord {
                method: *m,
                augment_seed: spec.base_seed,
                ge_seeds: (0..ge_cfg.runs).map(|i| ge_cfg.base_seed.wrapping_add(i as u64)).collect(),
                model_seed: spec.base_seed,
                status: match res {
                    Ok(_) => "ok".into(),
                    Err(e) => format!("error: {e}"),
                },
            })
            .collect(),
        spec: spec.clone(),
    };
    write(&setup_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutcome { setup_dir, cells })
}

// ----------------------------------------------------------------- compare

/// Read the per-run test AUC column of a `ge_aucs.csv`.
pub fn read_test_aucs(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = header.iter().position(|h| *h == "test_auc").ok_or_else(|| Error::MissingColumn("test_auc".into()))?;
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let cell = l.split(',').nth(col).unwrap_or_default();
            cell.trim().parse::<f64>().map_err(|_| Error::NonNumericValue {
                row: i + 2,
                column: col + 1,
                value: cell.to_string(),
            })
        })
        .collect()
}

/// Setup directories below `dir`: itself if it holds a run manifest,
/// otherwise its immediate children that do.
fn setup_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join("manifest.json").is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    out.sort();
    Ok(out)
}

/// Methods with GE results in a setup directory, in table order.
fn method_results(setup: &Path) -> Result<Vec<(String, PathBuf, Vec<f64>)>> {
    let mut out = Vec::new();
    for m in Method::ALL {
        let path = setup.join(m.name()).join("ge_aucs.csv");
        if path.is_file() {
            let aucs = read_test_aucs(&path)?;
            out.push((m.label().to_string(), setup.join(m.name()), aucs));
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub matrices: Vec<(PathBuf, ComparisonMatrix)>,
    /// Cumulative `Larger` counts per method over all setups.
    pub cumulative: Vec<(String, usize)>,
    /// `(methods - 1) * setups`.
    pub max_score: usize,
}

/// Pairwise Bayesian comparison of GE test AUCs for each setup.
pub fn cmd_compare(dirs: &[PathBuf], params: &BayesParams, scores_out: Option<&Path>) -> Result<CompareOutcome> {
    let mut setups = Vec::new();
    for d in dirs {
        setups.extend(setup_dirs(d)?);
    }
    if setups.is_empty() {
        return Err(Error::Config("no result directories found".into()));
    }
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut matrices = Vec::new();
    let mut max_score = 0;
    for setup in setups {
        let results = method_results(&setup)?;
        if results.len() < 2 {
            return Err(Error::Config(format!("{} holds fewer than two methods", setup.display())));
        }
        for w in results.windows(2) {
            if w[0].2.len() != w[1].2.len() {
                return Err(Error::RunCountMismatch {
                    left: w[0].1.display().to_string(),
                    left_runs: w[0].2.len(),
                    right: w[1].1.display().to_string(),
                    right_runs: w[1].2.len(),
                });
            }
        }
        let named: Vec<(String, Vec<f64>)> = results.into_iter().map(|(n, _, a)| (n, a)).collect();
        let matrix = comparison_matrix(&named, params)?;
        let dir = setup.join("comparison");
        create_dir(&dir)?;
        write(&dir.join("matrix.csv"), matrix.to_csv())?;
        let mut csv = String::from("method,score\n");
        for (name, s) in matrix.names.iter().zip(matrix.scores()) {
            let _ = writeln!(csv, "{name},{s}");
            if !totals.contains_key(name) {
                order.push(name.clone());
            }
            *totals.entry(name.clone()).or_default() += s;
        }
        write(&dir.join("scores.csv"), csv)?;
        max_score += matrix.names.len() - 1;
        matrices.push((setup, matrix));
    }
    let cumulative: Vec<(String, usize)> = order.into_iter().map(|n| (n.clone(), totals[&n])).collect();
    if let Some(path) = scores_out {
        let mut csv = String::from("method,cumulative_score,max_possible\n");
        for (n, s) in &cumulative {
            let _ = writeln!(csv, "{n},{s},{max_score}");
        }
        write(path, csv)?;
    }
    Ok(CompareOutcome { matrices, cumulative, max_score })
}

// ------------------------------------------------------------------ report

/// Concatenate the per-setup summary rows into one table.
pub fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<usize> {
    let mut table = String::new();
    let mut rows = 0;
    for d in dirs {
        for setup in setup_dirs(d)? {
            let path = setup.join("summary.csv");
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default();
            if table.is_empty() {
                table.push_str(header);
                table.push('\n');
            }
            for l in lines.filter(|l| !l.is_empty()) {
                table.push_str(l);
                table.push('\n');
                rows += 1;
            }
        }
    }
    if table.is_empty() {
        return Err(Error::Config("no summaries found".into()));
    }
    write(out, table)?;
    Ok(rows)
}
