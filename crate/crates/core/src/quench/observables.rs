use super::state::StateVector;
use crate::util::rng;
use crate::{Error, Result};
use rand::Rng;

#[inline]
fn spin(b: usize, i: usize) -> f64 {
    if (b >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `<Z_i>`.
pub fn expect_z(state: &StateVector, i: usize) -> Result<f64> {
    if i >= state.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: state.n(),
        });
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(b, a)| a.norm_sqr() * spin(b, i))
        .sum())
}

/// `<Z_i>` for every qubit in one pass over the amplitudes.
pub fn expect_z_all(state: &StateVector) -> Vec<f64> {
    let n = state.n();
    let mut z = vec![0.0; n];
    for (b, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        for (i, zi) in z.iter_mut().enumerate() {
            *zi += p * spin(b, i);
        }
    }
    z
}

/// `<Z_i Z_j>` for `i != j`.
pub fn expect_zz(state: &StateVector, i: usize, j: usize) -> Result<f64> {
    let n = state.n();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "expect_zz needs distinct qubits, got {i} twice"
        )));
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(b, a)| a.norm_sqr() * spin(b, i) * spin(b, j))
        .sum())
}

/// Draws `shots` basis indices from `|amplitude|^2` by inverse CDF.
pub fn sample_bitstrings(state: &StateVector, shots: u64, seed: u64) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let mut cdf = Vec::with_capacity(state.amplitudes().len());
    let mut acc = 0.0;
    for a in state.amplitudes() {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let last = cdf.len() - 1;
    let mut r = rng(seed);
    Ok((0..shots)
        .map(|_| {
            let u = r.gen::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// Empirical `<Z_i>` from sampled basis indices.
pub fn z_from_samples(samples: &[usize], n: usize) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for &b in samples {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi += spin(b, i);
        }
    }
    let m = samples.len().max(1) as f64;
    z.iter_mut().for_each(|v| *v /= m);
    z
}

/// Empirical `<Z_i Z_j>` for each pair.
pub fn zz_from_samples(samples: &[usize], pairs: &[(usize, usize)]) -> Vec<f64> {
    let m = samples.len().max(1) as f64;
    pairs
        .iter()
        .map(|&(i, j)| samples.iter().map(|&b| spin(b, i) * spin(b, j)).sum::<f64>() / m)
        .collect()
}
