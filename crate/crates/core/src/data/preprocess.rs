use super::mutual_info::{mutual_information, DEFAULT_BINS};
use super::TabularDataset;
use crate::util::median;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Columns whose population standard deviation falls below this are constant.
pub const CONSTANT_STD_CUTOFF: f64 = 1e-12;

/// Replaces every missing cell by its column median.
///
/// Returns the medians so the same values can be applied to held-out rows with
/// [`impute_with`].
pub fn impute_median(data: &TabularDataset) -> Result<(TabularDataset, Vec<f64>)> {
    let (n, d) = (data.n_rows(), data.n_cols());
    let mut medians = Vec::with_capacity(d);
    for j in 0..d {
        let observed: Vec<f64> = (0..n)
            .filter(|&i| !data.is_missing(i, j))
            .map(|i| data.value(i, j))
            .collect();
        if observed.is_empty() {
            return Err(Error::EmptyColumn(data.column_names()[j].clone()));
        }
        medians.push(median(&observed));
    }
    let imputed = impute_with(data, &medians)?;
    Ok((imputed, medians))
}

/// Fills missing cells with externally supplied column values.
pub fn impute_with(data: &TabularDataset, medians: &[f64]) -> Result<TabularDataset> {
    let d = data.n_cols();
    if medians.len() != d {
        return Err(Error::LengthMismatch {
            what: "medians",
            expected: d,
            got: medians.len(),
        });
    }
    let values = data
        .values()
        .iter()
        .zip(data.missing_mask())
        .enumerate()
        .map(|(k, (&v, &m))| if m { medians[k % d] } else { v })
        .collect();
    Ok(data.with_values(values, vec![false; data.values().len()]))
}

/// Per-column scaler statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub constant: Vec<bool>,
}

impl ScalerStats {
    pub fn fit(data: &TabularDataset) -> Self {
        let (n, d) = (data.n_rows(), data.n_cols());
        let mut means = vec![0.0; d];
        let mut std_devs = vec![0.0; d];
        for j in 0..d {
            let mean = (0..n).map(|i| data.value(i, j)).sum::<f64>() / n as f64;
            let var = (0..n).map(|i| (data.value(i, j) - mean).powi(2)).sum::<f64>() / n as f64;
            means[j] = mean;
            std_devs[j] = var.sqrt();
        }
        let constant = std_devs.iter().map(|&s| s < CONSTANT_STD_CUTOFF).collect();
        Self {
            means,
            std_devs,
            constant,
        }
    }
}

/// Standard scaling `x -> (x - mean) / std`.
///
/// With `stats == None` the statistics are fitted on `data`; otherwise they are
/// applied as given. Constant columns map to zeros.
pub fn standardize(
    data: &TabularDataset,
    stats: Option<&ScalerStats>,
) -> Result<(TabularDataset, ScalerStats)> {
    if data.has_missing() {
        return Err(Error::InvalidArgument(
            "standardize requires imputed data".into(),
        ));
    }
    let stats = match stats {
        Some(s) => {
            if s.means.len() != data.n_cols() || s.std_devs.len() != data.n_cols() {
                return Err(Error::LengthMismatch {
                    what: "scaler stats",
                    expected: data.n_cols(),
                    got: s.means.len(),
                });
            }
            s.clone()
        }
        None => ScalerStats::fit(data),
    };
    let d = data.n_cols();
    let mut out = data.clone();
    for (k, v) in out.values_mut().iter_mut().enumerate() {
        let j = k % d;
        *v = if stats.constant[j] {
            0.0
        } else {
            (*v - stats.means[j]) / stats.std_devs[j]
        };
    }
    Ok((out, stats))
}

/// Outcome of mutual-information feature selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    /// Kept column indices, by descending MI then ascending index.
    pub selected_columns: Vec<usize>,
    /// MI (nats) per input column; zero-variance columns score 0.
    pub mi_scores: Vec<f64>,
    pub zero_variance: Vec<usize>,
}

/// Drops zero-variance columns and columns with MI below `mi_threshold`, then
/// keeps the `top_k` best. Output columns follow the ranking order.
pub fn select_features(
    data: &TabularDataset,
    top_k: Option<usize>,
    mi_threshold: f64,
    n_bins: usize,
) -> Result<(TabularDataset, FeatureSelection)> {
    if data.has_missing() {
        return Err(Error::InvalidArgument(
            "feature selection requires imputed data".into(),
        ));
    }
    let stats = ScalerStats::fit(data);
    let mut mi_scores = vec![0.0; data.n_cols()];
    let mut zero_variance = Vec::new();
    let mut ranked = Vec::new();
    for j in 0..data.n_cols() {
        if stats.constant[j] {
            zero_variance.push(j);
            continue;
        }
        mi_scores[j] = mutual_information(&data.column(j), data.labels(), n_bins)?;
        ranked.push(j);
    }
    ranked.sort_by(|&a, &b| mi_scores[b].total_cmp(&mi_scores[a]).then(a.cmp(&b)));
    ranked.retain(|&j| mi_scores[j] >= mi_threshold);
    if let Some(k) = top_k {
        ranked.truncate(k);
    }
    if ranked.is_empty() {
        return Err(Error::EmptySelection);
    }
    let selected = data.select_columns(&ranked)?;
    Ok((
        selected,
        FeatureSelection {
            selected_columns: ranked,
            mi_scores,
            zero_variance,
        },
    ))
}

/// Knobs for the impute / scale / select chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    pub top_k: Option<usize>,
    pub mi_threshold: f64,
    pub n_bins: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            top_k: None,
            mi_threshold: 0.005,
            n_bins: DEFAULT_BINS,
        }
    }
}

/// Everything fitted on training rows, reusable on held-out rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub constant_columns: Vec<usize>,
    pub selected_columns: Vec<usize>,
    pub mi_scores: Vec<f64>,
}

/// Fits imputation, scaling and selection on `train`.
pub fn fit_preprocess(
    train: &TabularDataset,
    options: &PreprocessOptions,
) -> Result<(TabularDataset, PreprocessReport)> {
    let (imputed, medians) = impute_median(train)?;
    let (scaled, stats) = standardize(&imputed, None)?;
    let (selected, selection) =
        select_features(&scaled, options.top_k, options.mi_threshold, options.n_bins)?;
    let report = PreprocessReport {
        medians,
        means: stats.means.clone(),
        std_devs: stats.std_devs.clone(),
        constant_columns: (0..stats.constant.len()).filter(|&j| stats.constant[j]).collect(),
        selected_columns: selection.selected_columns,
        mi_scores: selection.mi_scores,
    };
    Ok((selected, report))
}

impl PreprocessReport {
    pub fn scaler(&self) -> ScalerStats {
        let mut constant = vec![false; self.means.len()];
        for &j in &self.constant_columns {
            constant[j] = true;
        }
        ScalerStats {
            means: self.means.clone(),
            std_devs: self.std_devs.clone(),
            constant,
        }
    }

    /// Applies the fitted chain to other rows without refitting anything.
    pub fn transform(&self, data: &TabularDataset) -> Result<TabularDataset> {
        let imputed = impute_with(data, &self.medians)?;
        let (scaled, _) = standardize(&imputed, Some(&self.scaler()))?;
        scaled.select_columns(&self.selected_columns)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}
