//! Quenched transverse-field Ising feature maps.
//!
//! Tabular samples are encoded as disordered Ising Hamiltonians, evolved
//! through a finite-time transverse-field quench by an exact state-vector
//! simulator, and the resulting expectation values are used as features (or
//! kernels) for classical classifiers. The [`evaluation`] module wires the
//! whole pipeline into a repeated stratified cross-validation protocol.
//!
//! Module map:
//!
//! * [`data`] - CSV ingestion, median imputation, standard scaling,
//!   mutual-information selection and stratified splits.
//! * [`encoding`] - features to longitudinal fields, correlations to couplings.
//! * [`schedule`] - annealing envelopes `A(s)`, `B(s)`.
//! * [`quench`] - state vector, second-order Trotter propagation, observables.
//! * [`features`] - per-sample feature vectors and mapped datasets.
//! * [`ml`] - kernels, SMO support vector machine, gradient-boosted trees, metrics.
//! * [`evaluation`] - fold runner, anneal-time sweeps, result files.
//! * [`oracle`] - independent reference computations used for cross-checks.
//! * [`synthetic`] - datasets with labels planted by an Ising model.

pub mod data;
pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ml;
pub mod oracle;
pub mod quench;
pub mod schedule;
pub mod synthetic;
mod util;

pub use error::{Error, Result};
