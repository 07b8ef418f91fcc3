//! Exact state-vector simulation of the transverse-field Ising quench
//! `H(s) = -A(s) sum_i X_i + B(s) H_z`, starting from the ground state of the
//! transverse term.

mod exact;
mod observables;
mod propagate;
mod state;

pub use exact::{dense_hamiltonian, exact_ground_state, exact_spectrum, N_MAX_EXACT};
pub use observables::{
    expect_z, expect_z_all, expect_zz, sample_bitstrings, z_from_samples, zz_from_samples,
};
pub use propagate::{evolve, evolve_observed, step_lengths, QuenchConfig, DEFAULT_DT_NS};
pub use state::{initial_state, StateVector, DUMP_MAGIC};
