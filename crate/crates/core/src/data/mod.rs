//! Tabular data: loading, preprocessing, feature selection and CV splits.

mod csv_io;
mod mutual_info;
mod preprocess;
mod split;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use mutual_info::{mutual_information, DEFAULT_BINS};
pub use preprocess::{
    fit_preprocess, impute_median, impute_with, select_features, standardize, FeatureSelection,
    PreprocessOptions, PreprocessReport, ScalerStats, CONSTANT_STD_CUTOFF,
};
pub use split::{stratified_holdout, stratified_splits, Fold, SplitPlan};

use crate::{Error, Result};
use std::collections::HashSet;

/// Numeric feature matrix (row-major) with a missing-value mask and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    values: Vec<f64>,
    missing: Vec<bool>,
    labels: Vec<u8>,
    column_names: Vec<String>,
}

impl TabularDataset {
    /// Builds a dataset from row-major `values`, checking every invariant.
    pub fn new(
        values: Vec<f64>,
        missing: Vec<bool>,
        labels: Vec<u8>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let d = column_names.len();
        let n = labels.len();
        if values.len() != n * d {
            return Err(Error::LengthMismatch {
                what: "values",
                expected: n * d,
                got: values.len(),
            });
        }
        if missing.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "missing mask",
                expected: values.len(),
                got: missing.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
        }
        let classes = labels.iter().copied().collect::<HashSet<_>>().len();
        if classes != 2 {
            return Err(Error::ClassCount(classes));
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        Ok(Self {
            values,
            missing,
            labels,
            column_names,
        })
    }

    /// Dataset without missing values.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>, column_names: Vec<String>) -> Result<Self> {
        let d = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::LengthMismatch {
                    what: "row width",
                    expected: d,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        let missing = vec![false; values.len()];
        Self::new(values, missing, labels, column_names)
    }

    /// Default column names `x0..x{d-1}`.
    pub fn default_names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("x{j}")).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i * self.n_cols() + j]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        let d = self.n_cols().max(1);
        self.values.chunks(d).take(self.n_rows())
    }

    /// Rows `indices` in the given order.
    pub fn subset_rows(&self, indices: &[usize]) -> Result<Self> {
        let d = self.n_cols();
        let mut values = Vec::with_capacity(indices.len() * d);
        let mut missing = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n_rows() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.n_rows(),
                });
            }
            values.extend_from_slice(self.row(i));
            missing.extend_from_slice(&self.missing[i * d..(i + 1) * d]);
            labels.push(self.labels[i]);
        }
        Self::new(values, missing, labels, self.column_names.clone())
    }

    /// Columns `indices` in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        let d = self.n_cols();
        if let Some(&bad) = indices.iter().find(|&&j| j >= d) {
            return Err(Error::IndexOutOfRange { index: bad, len: d });
        }
        let mut values = Vec::with_capacity(self.n_rows() * indices.len());
        let mut missing = Vec::with_capacity(self.n_rows() * indices.len());
        for i in 0..self.n_rows() {
            for &j in indices {
                values.push(self.value(i, j));
                missing.push(self.is_missing(i, j));
            }
        }
        let names = indices.iter().map(|&j| self.column_names[j].clone()).collect();
        Self::new(values, missing, self.labels.clone(), names)
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, missing: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            missing,
            labels: self.labels.clone(),
            column_names: self.column_names.clone(),
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        TabularDataset::default_names(d)
    }

    #[test]
    fn rejects_single_class() {
        let err = TabularDataset::from_rows(&[vec![1.0], vec![2.0]], vec![1, 1], names(1));
        assert!(matches!(err, Err(Error::ClassCount(1))));
    }

    #[test]
    fn rejects_duplicate_names() {
        let err = TabularDataset::from_rows(
            &[vec![1.0, 2.0], vec![2.0, 3.0]],
            vec![0, 1],
            vec!["a".into(), "a".into()],
        );
        assert!(matches!(err, Err(Error::DuplicateColumn(_))));
    }

    #[test]
    fn subsets_keep_order() {
        let ds = TabularDataset::from_rows(
            &[vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]],
            vec![0, 1, 0],
            names(2),
        )
        .unwrap();
        let sub = ds.subset_rows(&[2, 1]).unwrap();
        assert_eq!(sub.row(0), &[3.0, 30.0]);
        assert_eq!(sub.labels(), &[0, 1]);
        let cols = ds.select_columns(&[1]).unwrap();
        assert_eq!(cols.column(0), vec![10.0, 20.0, 30.0]);
        assert_eq!(cols.column_names(), &["x1".to_string()]);
    }
}
