use super::cache::QuenchCache;
use super::config::{ExperimentConfig, KernelChoice, ModelFamily};
use crate::data::{fit_preprocess, standardize, stratified_holdout, stratified_splits, Fold, PreprocessReport, ScalerStats, TabularDataset};
use crate::encoding::{fit_couplings, CouplingGraph};
use crate::features::{column_names, final_state, row_seed};
use crate::ml::{
    compute_metrics, gbt_predict, gbt_train, gram_fidelity, gram_fidelity_cross, gram_linear, svm_predict, svm_train,
    GbtParams, GramMatrix, Matrix, MetricsReport, SvmOptions,
};
use crate::{Error, Result};
use log::debug;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Representation {
    Raw,
    /// Quench-mapped features.
    Aqfm,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Raw => "raw",
            Representation::Aqfm => "aqfm",
        }
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Representation::Raw),
            "aqfm" => Ok(Representation::Aqfm),
            other => Err(Error::InvalidArgument(format!("unknown representation `{other}`"))),
        }
    }
}

/// Everything fit on the training rows of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldArtifacts {
    pub preprocess: PreprocessReport,
    pub couplings: CouplingGraph,
    /// Preprocessed training rows.
    pub train: TabularDataset,
    /// Test rows pushed through the training-fit preprocessing.
    pub test: TabularDataset,
}

pub fn fit_fold_artifacts(data: &TabularDataset, fold: &Fold, config: &ExperimentConfig) -> Result<FoldArtifacts> {
    let train_raw = data.subset_rows(&fold.train)?;
    let test_raw = data.subset_rows(&fold.test)?;
    let (train, preprocess) = fit_preprocess(&train_raw, &config.preprocess)?;
    let test = preprocess.transform(&test_raw)?;
    let couplings = fit_couplings(&train, &config.encoding)?;
    Ok(FoldArtifacts {
        preprocess,
        couplings,
        train,
        test,
    })
}

/// Test-set metrics of one tuned model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub family: ModelFamily,
    pub representation: Representation,
    pub metrics: MetricsReport,
    /// Chosen hyperparameters, e.g. `c=10`.
    pub params: String,
}

/// Per-split index lists `(fit, validate)` into the training rows.
type InnerPlan = Vec<(Vec<usize>, Vec<usize>)>;

pub enum PreparedFold<'a> {
    Ready(FoldRunner<'a>),
    Skipped(String),
}

/// A fold whose training-side fits are done; produces model reports.
pub struct FoldRunner<'a> {
    config: &'a ExperimentConfig,
    fold: &'a Fold,
    artifacts: FoldArtifacts,
    inner: InnerPlan,
}

fn inner_seed(config: &ExperimentConfig, fold: &Fold) -> u64 {
    config
        .cv
        .seed
        .wrapping_add(((fold.repeat as u64 + 1) << 20) + fold.fold as u64)
}

impl<'a> FoldRunner<'a> {
    /// Fits the fold. An impossible inner split skips the fold with a reason.
    pub fn prepare(config: &'a ExperimentConfig, data: &TabularDataset, fold: &'a Fold) -> Result<PreparedFold<'a>> {
        let artifacts = fit_fold_artifacts(data, fold, config)?;
        let labels = artifacts.train.labels();
        let seed = inner_seed(config, fold);
        let plan = if config.cv.nested {
            stratified_splits(labels, config.cv.inner_splits, 1, seed)
                .map(|p| p.folds.into_iter().map(|f| (f.train, f.test)).collect())
        } else {
            stratified_holdout(labels, config.cv.inner_fraction, seed).map(|pair| vec![pair])
        };
        match plan {
            Ok(inner) => Ok(PreparedFold::Ready(FoldRunner {
                config,
                fold,
                artifacts,
                inner,
            })),
            Err(e @ Error::ClassTooSmall { .. }) => Ok(PreparedFold::Skipped(format!("inner split impossible: {e}"))),
            Err(e) => Err(e),
        }
    }

    pub fn artifacts(&self) -> &FoldArtifacts {
        &self.artifacts
    }

    fn labels(&self) -> (&[u8], &[u8]) {
        (self.artifacts.train.labels(), self.artifacts.test.labels())
    }

    /// One report per model family on the preprocessed features.
    pub fn raw(&self) -> Result<Vec<ModelOutcome>> {
        let train = Matrix::from(&self.artifacts.train);
        let test = Matrix::from(&self.artifacts.test);
        let kernels = || Ok((gram_linear(&train, &train)?, gram_linear(&test, &train)?));
        self.evaluate_all(Representation::Raw, &train, &test, kernels)
    }

    /// One report per model family on features mapped at `tau_ns`.
    pub fn mapped(&self, tau_ns: f64, cache: &QuenchCache) -> Result<Vec<ModelOutcome>> {
        let map_cfg = self.config.map_config(tau_ns)?;
        let couplings = &self.artifacts.couplings;
        let map = |data: &TabularDataset, rows: &[usize]| -> Result<Matrix> {
            let samples: Vec<&[f64]> = (0..data.n_rows()).map(|i| data.row(i)).collect();
            let seeds: Vec<u64> = rows.iter().map(|&g| row_seed(map_cfg.quench.seed, g)).collect();
            let mapped = cache.map(&samples, &seeds, couplings, &map_cfg)?;
            Matrix::new(data.n_rows(), map_cfg.width(couplings), mapped.concat())
        };
        let mut train = map(&self.artifacts.train, &self.fold.train)?;
        let mut test = map(&self.artifacts.test, &self.fold.test)?;
        if self.config.models.mapped_standardize {
            (train, test) = self.standardize_mapped(train, test)?;
        }
        let kernels = || -> Result<(GramMatrix, GramMatrix)> {
            match self.config.models.kernel {
                KernelChoice::Linear => Ok((gram_linear(&train, &train)?, gram_linear(&test, &train)?)),
                KernelChoice::Fidelity => {
                    let states = |d: &TabularDataset| -> Result<Vec<_>> {
                        (0..d.n_rows())
                            .into_par_iter()
                            .map(|i| final_state(d.row(i), couplings, &map_cfg))
                            .collect()
                    };
                    let tr = states(&self.artifacts.train)?;
                    let te = states(&self.artifacts.test)?;
                    Ok((gram_fidelity(&tr)?, gram_fidelity_cross(&te, &tr)?))
                }
            }
        };
        self.evaluate_all(Representation::Aqfm, &train, &test, kernels)
    }

    fn standardize_mapped(&self, train: Matrix, test: Matrix) -> Result<(Matrix, Matrix)> {
        let (ytr, yte) = self.labels();
        let names = column_names(&self.artifacts.couplings, self.config.quench.include_zz);
        let as_data = |m: Matrix, y: &[u8]| {
            TabularDataset::new(m.values().to_vec(), vec![false; m.values().len()], y.to_vec(), names.clone())
        };
        let tr = as_data(train, ytr)?;
        let stats = ScalerStats::fit(&tr);
        let (tr, _) = standardize(&tr, Some(&stats))?;
        let (te, _) = standardize(&as_data(test, yte)?, Some(&stats))?;
        Ok((Matrix::from(&tr), Matrix::from(&te)))
    }

    fn evaluate_all<K>(&self, rep: Representation, train: &Matrix, test: &Matrix, kernels: K) -> Result<Vec<ModelOutcome>>
    where
        K: Fn() -> Result<(GramMatrix, GramMatrix)>,
    {
        self.config
            .models
            .families
            .iter()
            .map(|&family| {
                let outcome = match family {
                    ModelFamily::Svm => {
                        let (k_train, k_test) = kernels()?;
                        self.svm(&k_train, &k_test)?
                    }
                    ModelFamily::Gbt => self.gbt(train, test)?,
                };
                debug!(
                    "repeat {} fold {} {} {}: {} accuracy {}",
                    self.fold.repeat,
                    self.fold.fold,
                    family.as_str(),
                    rep.as_str(),
                    outcome.1,
                    outcome.0.accuracy
                );
                Ok(ModelOutcome {
                    family,
                    representation: rep,
                    metrics: outcome.0,
                    params: outcome.1,
                })
            })
            .collect()
    }

    /// Mean inner-validation balanced accuracy of `fit_predict(fit, val)`.
    fn inner_score<F>(&self, mut fit_predict: F) -> Result<f64>
    where
        F: FnMut(&[usize], &[usize]) -> Result<(Vec<f64>, Vec<u8>)>,
    {
        let labels = self.artifacts.train.labels();
        let mut total = 0.0;
        for (fit, val) in &self.inner {
            let (scores, pred) = fit_predict(fit, val)?;
            let truth: Vec<u8> = val.iter().map(|&i| labels[i]).collect();
            total += compute_metrics(&truth, &pred, &scores)?.accuracy;
        }
        Ok(total / self.inner.len() as f64)
    }

    fn svm(&self, k_train: &GramMatrix, k_test: &GramMatrix) -> Result<(MetricsReport, String)> {
        let (ytr, yte) = self.labels();
        let options = SvmOptions {
            tol: self.config.models.svm_tol,
            ..SvmOptions::default()
        };
        let mut best: Option<(f64, f64)> = None;
        for &c in &self.config.models.svm_c {
            let score = self.inner_score(|fit, val| {
                let y: Vec<u8> = fit.iter().map(|&i| ytr[i]).collect();
                let model = svm_train(&k_train.select(fit, fit)?, &y, c, &options)?;
                svm_predict(&model, &k_train.select(val, fit)?)
            })?;
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, c));
            }
        }
        let (_, c) = best.expect("non-empty C grid");
        let model = svm_train(k_train, ytr, c, &options)?;
        let (scores, pred) = svm_predict(&model, k_test)?;
        Ok((compute_metrics(yte, &pred, &scores)?, format!("c={c}")))
    }

    fn gbt(&self, train: &Matrix, test: &Matrix) -> Result<(MetricsReport, String)> {
        let (ytr, yte) = self.labels();
        let m = &self.config.models;
        let mut best: Option<(f64, GbtParams)> = None;
        for &n_trees in &m.gbt_trees {
            for &max_depth in &m.gbt_depth {
                for &learning_rate in &m.gbt_rate {
                    let params = GbtParams {
                        n_trees,
                        max_depth,
                        learning_rate,
                        subsample: m.gbt_subsample,
                        seed: self.config.cv.seed,
                    };
                    let score = self.inner_score(|fit, val| {
                        let y: Vec<u8> = fit.iter().map(|&i| ytr[i]).collect();
                        let model = gbt_train(&train.select_rows(fit)?, &y, &params)?;
                        gbt_predict(&model, &train.select_rows(val)?)
                    })?;
                    if best.is_none_or(|(s, _)| score > s) {
                        best = Some((score, params));
                    }
                }
            }
        }
        let (_, params) = best.expect("non-empty GBT grid");
        let model = gbt_train(train, ytr, &params)?;
        let (probs, pred) = gbt_predict(&model, test)?;
        let label = format!(
            "trees={},depth={},rate={}",
            params.n_trees, params.max_depth, params.learning_rate
        );
        Ok((compute_metrics(yte, &pred, &probs)?, label))
    }
}

/// Raw and mapped reports for one fold at one anneal time.
pub fn run_fold(
    config: &ExperimentConfig,
    data: &TabularDataset,
    fold: &Fold,
    tau_ns: f64,
    cache: &QuenchCache,
) -> Result<std::result::Result<Vec<ModelOutcome>, String>> {
    match FoldRunner::prepare(config, data, fold)? {
        PreparedFold::Skipped(reason) => Ok(Err(reason)),
        PreparedFold::Ready(runner) => {
            let mut out = runner.raw()?;
            out.extend(runner.mapped(tau_ns, cache)?);
            Ok(Ok(out))
        }
    }
}
