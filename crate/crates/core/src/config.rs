//! Experiment specification files.
//!
//! ```toml
//! setup_name = "WBC"
//! output_dir = "results"
//! base_seed = 7
//! methods = ["smote", "stem"]
//!
//! [dataset]
//! path = "../data/wdbc.data"
//! preset = "wdbc"
//!
//! [ge]
//! "Number of runs" = 30
//! "Population size" = 200
//! ```
//!
//! Relative paths are resolved against the directory of the spec file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, Method};
use crate::baselines::BaselineConfig;
use crate::dataset::TabularSchema;
use crate::evolution::GeConfig;
use crate::glcm::{DEFAULT_LEVELS, DEFAULT_MEDIAN_WINDOW};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Wdbc,
}

/// Where the experiment's samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    /// Delimited file. The schema is, in order of precedence: inline,
    /// `preset`, or the `<path>.schema.toml` sidecar.
    Tabular {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<Preset>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<TabularSchema>,
    },
    /// Image manifest (`path,label,view`); whole-image features are
    /// extracted on the fly.
    Manifest {
        manifest: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        view: Option<String>,
        #[serde(default = "default_levels")]
        levels: usize,
        #[serde(default = "default_window")]
        median_window: usize,
    },
}

fn default_levels() -> usize {
    DEFAULT_LEVELS
}

fn default_window() -> usize {
    DEFAULT_MEDIAN_WINDOW
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

/// Augmentation parameters shared by every method of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentParams {
    pub k_neighbors: usize,
    pub enn_k: usize,
    pub mixup_alpha: f64,
    pub stem_multiplier: f64,
    pub soft_mixup: bool,
}

impl Default for AugmentParams {
    fn default() -> Self {
        let d = AugmentConfig::default();
        AugmentParams {
            k_neighbors: d.k_neighbors,
            enn_k: d.enn_k,
            mixup_alpha: d.mixup_alpha,
            stem_multiplier: d.stem_multiplier,
            soft_mixup: d.soft_mixup,
        }
    }
}

impl AugmentParams {
    pub fn for_method(&self, method: Method, seed: u64) -> AugmentConfig {
        AugmentConfig {
            method,
            k_neighbors: self.k_neighbors,
            enn_k: self.enn_k,
            mixup_alpha: self.mixup_alpha,
            stem_multiplier: self.stem_multiplier,
            soft_mixup: self.soft_mixup,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub setup_name: String,
    pub dataset: DatasetSource,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// z-score features with training-split statistics before anything else.
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub augment: AugmentParams,
    #[serde(default)]
    pub ge: GeConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub base_seed: u64,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parse a spec file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.resolve_paths(base);
        Ok(spec)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSource::Tabular { path, .. } => fix(path),
            DatasetSource::Manifest { manifest, .. } => fix(manifest),
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.setup_name.trim().is_empty() {
            return Err(Error::Config("setup_name must not be empty".into()));
        }
        if self.setup_name.contains(['/', '\\']) {
            return Err(Error::Config(format!("setup_name `{}` must not contain path separators", self.setup_name)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction {} outside (0, 1)", self.train_fraction)));
        }
        self.ge.validate()?;
        self.augment.for_method(Method::Stem, 0).validate()?;
        Ok(())
    }

    /// SHA-256 of the spec's canonical JSON form, hex encoded.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("spec serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// GE parameters with the experiment seed applied.
    pub fn ge_config(&self) -> GeConfig {
        GeConfig { base_seed: self.base_seed, ..self.ge.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
setup_name = "WBC"
output_dir = "out"
base_seed = 3
methods = ["smote", "stem"]

[dataset]
path = "data/wdbc.data"
preset = "wdbc"

[ge]
"Number of generations" = 5
"Population size" = 20
"Maximum depth" = 35
"#;

    #[test]
    fn parses_with_long_parameter_names() {
        let spec = ExperimentSpec::parse(SPEC).unwrap();
        assert_eq!(spec.methods, vec![Method::Smote, Method::Stem]);
        assert_eq!(spec.ge.generations, 5);
        assert_eq!(spec.ge.population, 20);
        assert_eq!(spec.ge.runs, 30);
        assert_eq!(spec.ge_config().base_seed, 3);
        assert!(matches!(spec.dataset, DatasetSource::Tabular { preset: Some(Preset::Wdbc), .. }));
    }

    #[test]
    fn unknown_method_is_rejected() {
        let bad = SPEC.replace("\"smote\"", "\"foo\"");
        let err = ExperimentSpec::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
    }

    #[test]
    fn manifest_source_and_path_resolution() {
        let text = "setup_name = \"S_CC\"\noutput_dir = \"r\"\n[dataset]\nmanifest = \"m.csv\"\nview = \"CC\"\n";
        let mut spec = ExperimentSpec::parse(text).unwrap();
        spec.resolve_paths(Path::new("/base"));
        match &spec.dataset {
            DatasetSource::Manifest { manifest, view, levels, .. } => {
                assert_eq!(manifest, Path::new("/base/m.csv"));
                assert_eq!(view.as_deref(), Some("CC"));
                assert_eq!(*levels, 16);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(spec.output_dir, Path::new("/base/r"));
    }

    #[test]
    fn invalid_values() {
        assert!(ExperimentSpec::parse(&SPEC.replace("\"WBC\"", "\"\"")).is_err());
        assert!(ExperimentSpec::parse(&format!("{SPEC}Wrapping = 2\n")).is_err());
    }
}
