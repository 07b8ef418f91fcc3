use super::state::StateVector;
use crate::encoding::{diagonal_energies, IsingInstance};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Largest register handled by dense diagonalization.
pub const N_MAX_EXACT: usize = 12;

fn check_size(instance: &IsingInstance) -> Result<()> {
    if instance.n() > N_MAX_EXACT {
        return Err(Error::TooManyQubits(instance.n(), N_MAX_EXACT));
    }
    Ok(())
}

/// Dense real matrix of `-gamma sum_i X_i + H_z`.
pub fn dense_hamiltonian(instance: &IsingInstance, gamma: f64) -> Result<DMatrix<f64>> {
    check_size(instance)?;
    let n = instance.n();
    let dim = 1usize << n;
    let energies = diagonal_energies(instance)?;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        h[(b, b)] = energies[b];
        for q in 0..n {
            h[(b, b ^ (1 << q))] -= gamma;
        }
    }
    Ok(h)
}

/// All eigenvalues of `-gamma sum X + H_z`, ascending.
pub fn exact_spectrum(instance: &IsingInstance, gamma: f64) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::new(dense_hamiltonian(instance, gamma)?);
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Lowest eigenpair of `-gamma sum_i X_i + H_z`.
///
/// At `gamma == 0` the Hamiltonian is diagonal and the result is the first
/// basis state of minimal energy.
pub fn exact_ground_state(instance: &IsingInstance, gamma: f64) -> Result<(f64, StateVector)> {
    check_size(instance)?;
    let n = instance.n();
    if n == 0 {
        return Err(Error::InvalidArgument("empty instance".into()));
    }
    if gamma == 0.0 {
        let energies = diagonal_energies(instance)?;
        let (best, &e) = energies
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("non-empty spectrum");
        return Ok((e, StateVector::basis(n, best)?));
    }
    let eig = SymmetricEigen::new(dense_hamiltonian(instance, gamma)?);
    let k = eig.eigenvalues.imin();
    let energy = eig.eigenvalues[k];
    let column = eig.eigenvectors.column(k);
    // fix the global sign so the largest component is positive
    let pivot = column.iamax();
    let sign = if column[pivot] < 0.0 { -1.0 } else { 1.0 };
    let norm = column.norm();
    let amps = column
        .iter()
        .map(|&v| Complex64::new(sign * v / norm, 0.0))
        .collect();
    Ok((energy, StateVector::from_amplitudes(n, amps)?))
}
