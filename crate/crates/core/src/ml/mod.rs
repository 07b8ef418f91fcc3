//! Classifiers and metrics used on raw and quench-mapped features.

mod gbt;
mod kernel;
mod metrics;
mod svm;

pub use gbt::{gbt_log_loss, gbt_predict, gbt_train, gbt_train_observed, GbtModel, GbtParams, Node, Tree, GBT_HEADER, LEAF_CLAMP};
pub use kernel::{check_psd, gram_fidelity, gram_fidelity_cross, gram_linear, GramMatrix, KernelKind};
pub use metrics::{auc, compute_metrics, MetricsReport};
pub use svm::{svm_predict, svm_train, SvmModel, SvmOptions, SVM_HEADER};

use crate::data::TabularDataset;
use crate::{Error, Result};

/// Dense row-major matrix of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "matrix values",
                expected: rows * cols,
                got: values.len(),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    what: "matrix row",
                    expected: cols,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::IndexOutOfRange { index: i, len: self.rows });
            }
            values.extend_from_slice(self.row(i));
        }
        Ok(Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        })
    }
}

impl From<&TabularDataset> for Matrix {
    fn from(data: &TabularDataset) -> Self {
        Self {
            rows: data.n_rows(),
            cols: data.n_cols(),
            values: data.values().to_vec(),
        }
    }
}

pub(crate) fn check_binary(labels: &[u8]) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Reads `key value` from a model text line.
pub(crate) fn parse_field<T: std::str::FromStr>(line: Option<(usize, &str)>, key: &str) -> Result<T> {
    let (no, line) = line.ok_or_else(|| Error::parse(0, format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::parse(no + 1, format!("expected `{key}`")));
    }
    let value = parts
        .next()
        .ok_or_else(|| Error::parse(no + 1, format!("`{key}` has no value")))?;
    if parts.next().is_some() {
        return Err(Error::parse(no + 1, "trailing tokens"));
    }
    value
        .parse()
        .map_err(|_| Error::parse(no + 1, format!("bad value for `{key}`")))
}
