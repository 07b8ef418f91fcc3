use crate::data::PreprocessOptions;
use crate::encoding::{EncodingConfig, N_MAX_SIM};
use crate::features::MapConfig;
use crate::quench::{QuenchConfig, DEFAULT_DT_NS};
use crate::schedule::{load_schedule_csv, AnnealSchedule, EnergyUnit, DEFAULT_SCALE};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Svm,
    Gbt,
}

impl ModelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Svm => "svm",
            ModelFamily::Gbt => "gbt",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(ModelFamily::Svm),
            "gbt" => Ok(ModelFamily::Gbt),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

/// Kernel used by the SVM on mapped features. Raw features always use the
/// linear kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Fidelity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSettings {
    pub path: PathBuf,
    #[serde(default = "default_label")]
    pub label_column: String,
    /// Name written to result files; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
}

fn default_label() -> String {
    "label".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuenchSettings {
    /// `linear` or `file:<path>` (columns s, A, B).
    pub schedule: String,
    /// Unit of tabulated envelopes: `ghz` or `rad_per_ns`.
    pub schedule_unit: String,
    pub gamma0: f64,
    pub beta0: f64,
    pub tau_list: Vec<f64>,
    pub dt_ns: f64,
    pub shots: Option<u64>,
    pub seed: u64,
    pub include_zz: bool,
    pub n_max_sim: usize,
}

impl Default for QuenchSettings {
    fn default() -> Self {
        Self {
            schedule: "linear".into(),
            schedule_unit: "ghz".into(),
            gamma0: DEFAULT_SCALE,
            beta0: DEFAULT_SCALE,
            tau_list: vec![5.0, 10.0, 20.0, 30.0, 40.0, 100.0],
            dt_ns: DEFAULT_DT_NS,
            shots: None,
            seed: 0,
            include_zz: false,
            n_max_sim: N_MAX_SIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub families: Vec<ModelFamily>,
    pub kernel: KernelChoice,
    pub svm_c: Vec<f64>,
    pub svm_tol: f64,
    pub gbt_trees: Vec<usize>,
    pub gbt_depth: Vec<usize>,
    pub gbt_rate: Vec<f64>,
    pub gbt_subsample: f64,
    /// Standardize mapped features with training-fold statistics.
    pub mapped_standardize: bool,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            families: vec![ModelFamily::Svm, ModelFamily::Gbt],
            kernel: KernelChoice::Linear,
            svm_c: vec![0.1, 1.0, 10.0, 100.0],
            svm_tol: 1e-4,
            gbt_trees: vec![100, 300],
            gbt_depth: vec![2, 3],
            gbt_rate: vec![0.05, 0.1],
            gbt_subsample: 1.0,
            mapped_standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSettings {
    pub n_splits: usize,
    pub n_repeats: usize,
    pub seed: u64,
    /// Validation share of the inner split used for model selection.
    pub inner_fraction: f64,
    /// Select hyperparameters by inner k-fold instead of one split.
    pub nested: bool,
    pub inner_splits: usize,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            n_splits: 10,
            n_repeats: 5,
            seed: 0,
            inner_fraction: 0.2,
            nested: false,
            inner_splits: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub out_dir: PathBuf,
    /// Worker threads; unset uses every core.
    pub jobs: Option<usize>,
    /// On-disk quench cache; `QUENCHMAP_CACHE_DIR` takes precedence.
    pub cache_dir: Option<PathBuf>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("results"),
            jobs: None,
            cache_dir: None,
        }
    }
}

/// The whole experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSettings,
    #[serde(default)]
    pub preprocess: PreprocessOptions,
    #[serde(default)]
    pub encoding: EncodingConfig,
    #[serde(default)]
    pub quench: QuenchSettings,
    #[serde(default)]
    pub models: ModelSettings,
    #[serde(default)]
    pub cv: CvSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

impl ExperimentConfig {
    /// Defaults everywhere except the dataset location.
    pub fn for_dataset(path: impl Into<PathBuf>, label_column: &str) -> Self {
        Self {
            dataset: DatasetSettings {
                path: path.into(),
                label_column: label_column.to_string(),
                name: None,
            },
            preprocess: PreprocessOptions::default(),
            encoding: EncodingConfig::default(),
            quench: QuenchSettings::default(),
            models: ModelSettings::default(),
            cv: CvSettings::default(),
            output: OutputSettings::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parses `path`, resolves relative paths against its directory and
    /// validates the result.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        self.dataset.path = join(&self.dataset.path);
        if let Some(file) = self.quench.schedule.strip_prefix("file:") {
            self.quench.schedule = format!("file:{}", join(Path::new(file)).display());
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = &self.quench;
        if q.tau_list.is_empty() {
            return Err(Error::Config("quench.tau_list must not be empty".into()));
        }
        if let Some(t) = q.tau_list.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::Config(format!("tau values must be positive, got {t}")));
        }
        if !(q.dt_ns > 0.0 && q.dt_ns.is_finite()) {
            return Err(Error::Config(format!("quench.dt_ns must be positive, got {}", q.dt_ns)));
        }
        if q.shots == Some(0) {
            return Err(Error::Config("quench.shots must be positive".into()));
        }
        if q.schedule != "linear" && !q.schedule.starts_with("file:") {
            return Err(Error::Config(format!("unknown schedule `{}`", q.schedule)));
        }
        q.schedule_unit.parse::<EnergyUnit>()?;
        let m = &self.models;
        if m.families.is_empty() {
            return Err(Error::Config("models.families must not be empty".into()));
        }
        let mut seen = m.families.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != m.families.len() {
            return Err(Error::Config("models.families has duplicates".into()));
        }
        if m.svm_c.is_empty() || m.svm_c.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Config("models.svm_c must be a non-empty list of positive values".into()));
        }
        if m.gbt_trees.is_empty() || m.gbt_depth.is_empty() || m.gbt_rate.is_empty() {
            return Err(Error::Config("GBT grids must not be empty".into()));
        }
        if m.gbt_depth.contains(&0) || m.gbt_rate.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(Error::Config("GBT depths must be positive and rates in (0, 1]".into()));
        }
        let cv = &self.cv;
        if cv.n_splits < 2 || cv.n_repeats == 0 {
            return Err(Error::Config("cv needs n_splits >= 2 and n_repeats >= 1".into()));
        }
        if !(cv.inner_fraction > 0.0 && cv.inner_fraction < 1.0) || cv.inner_splits < 2 {
            return Err(Error::Config("cv.inner_fraction must be in (0, 1) and inner_splits >= 2".into()));
        }
        if self.output.jobs == Some(0) {
            return Err(Error::Config("output.jobs must be positive".into()));
        }
        if !self.dataset.path.is_file() {
            return Err(Error::Config(format!(
                "dataset `{}` does not exist",
                self.dataset.path.display()
            )));
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.name.clone().unwrap_or_else(|| {
            self.dataset
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    pub fn schedule(&self, tau_ns: f64) -> Result<AnnealSchedule> {
        let q = &self.quench;
        match q.schedule.strip_prefix("file:") {
            None => AnnealSchedule::linear(q.gamma0, q.beta0, tau_ns),
            Some(path) => {
                let table = load_schedule_csv(path, q.schedule_unit.parse()?)?;
                AnnealSchedule::tabulated(table, tau_ns)
            }
        }
    }

    pub fn map_config(&self, tau_ns: f64) -> Result<MapConfig> {
        let q = &self.quench;
        let mut quench = QuenchConfig::new(self.schedule(tau_ns)?);
        quench.dt_ns = q.dt_ns.min(tau_ns);
        quench.shots = q.shots;
        quench.seed = q.seed;
        quench.n_max_sim = q.n_max_sim;
        Ok(MapConfig {
            quench,
            h_max: self.encoding.h_max,
            include_zz: q.include_zz,
        })
    }
}
