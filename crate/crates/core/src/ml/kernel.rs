use super::Matrix;
use crate::quench::StateVector;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    LinearOnFeatures,
    Fidelity,
}

/// Kernel values between two sample sets, row-major `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub kind: KernelKind,
}

impl GramMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Sub-matrix on the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<GramMatrix> {
        for (&i, len) in rows.iter().map(|i| (i, self.rows)).chain(cols.iter().map(|j| (j, self.cols))) {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
        }
        let values = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Ok(GramMatrix {
            values,
            rows: rows.len(),
            cols: cols.len(),
            kind: self.kind,
        })
    }

    /// Smallest eigenvalue of a square matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::InvalidArgument("eigenvalues need a square Gram matrix".into()));
        }
        if self.rows == 0 {
            return Ok(0.0);
        }
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.values);
        let m = (&m + m.transpose()) * 0.5;
        Ok(SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// `K_ij = <a_i, b_j>`.
pub fn gram_linear(a: &Matrix, b: &Matrix) -> Result<GramMatrix> {
    if a.n_cols() != b.n_cols() {
        return Err(Error::LengthMismatch {
            what: "feature width",
            expected: a.n_cols(),
            got: b.n_cols(),
        });
    }
    let cols = b.n_rows();
    let mut values = vec![0.0; a.n_rows() * cols];
    if cols > 0 {
        values.par_chunks_mut(cols).enumerate().for_each(|(i, out)| {
            let x = a.row(i);
            for (j, o) in out.iter_mut().enumerate() {
                *o = x.iter().zip(b.row(j)).map(|(p, q)| p * q).sum();
            }
        });
    }
    Ok(GramMatrix {
        values,
        rows: a.n_rows(),
        cols,
        kind: KernelKind::LinearOnFeatures,
    })
}

/// `K_ij = |<psi_i|phi_j>|^2`.
pub fn gram_fidelity_cross(a: &[StateVector], b: &[StateVector]) -> Result<GramMatrix> {
    let cols = b.len();
    let rows: Vec<Vec<f64>> = a
        .par_iter()
        .map(|x| b.iter().map(|y| x.fidelity(y)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(GramMatrix {
        values: rows.concat(),
        rows: a.len(),
        cols,
        kind: KernelKind::Fidelity,
    })
}

pub fn gram_fidelity(states: &[StateVector]) -> Result<GramMatrix> {
    gram_fidelity_cross(states, states)
}

/// Fails with [`Error::NotPsd`] if `lambda_min < -1e-8 trace`.
pub fn check_psd(gram: &GramMatrix) -> Result<()> {
    let min_eig = gram.min_eigenvalue()?;
    let trace = gram.trace();
    if min_eig < -1e-8 * trace.abs() {
        return Err(Error::NotPsd { min_eig, trace });
    }
    Ok(())
}
