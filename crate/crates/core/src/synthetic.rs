//! Synthetic datasets with labels planted through an Ising model.

use crate::data::TabularDataset;
use crate::encoding::{CouplingGraph, Edge, IsingInstance};
use crate::quench::{exact_ground_state, expect_z_all};
use crate::util::rng;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Standard-normal features; the label of row `x` is 1 iff the classical
/// ground state of `H = sum x_i Z_i + sum J_ij Z_i Z_j` has positive total
/// magnetization (ties give 0). `J` is a ring with weights uniform in
/// `[-coupling, coupling]`, returned alongside the data.
pub fn planted_ising(samples: usize, features: usize, coupling: f64, seed: u64) -> Result<(TabularDataset, CouplingGraph)> {
    if !(2..=crate::quench::N_MAX_EXACT).contains(&features) {
        return Err(Error::InvalidArgument(format!(
            "planted datasets need 2..={} features",
            crate::quench::N_MAX_EXACT
        )));
    }
    let mut r = rng(seed);
    let mut edges: Vec<Edge> = (0..features)
        .map(|i| {
            let j = (i + 1) % features;
            Edge {
                i: i.min(j),
                j: i.max(j),
                weight: r.gen_range(-coupling..=coupling),
            }
        })
        .collect();
    edges.sort_by_key(|e| (e.i, e.j));
    edges.dedup_by_key(|e| (e.i, e.j));
    let planted = CouplingGraph::new(features, edges)?;
    let mut values = Vec::with_capacity(samples * features);
    let mut labels = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: Vec<f64> = (0..features).map(|_| StandardNormal.sample(&mut r)).collect();
        let (_, ground) = exact_ground_state(&IsingInstance::new(x.clone(), planted.clone())?, 0.0)?;
        let magnetization: f64 = expect_z_all(&ground).iter().sum();
        labels.push(u8::from(magnetization > 0.0));
        values.extend(x);
    }
    let data = TabularDataset::new(
        values,
        vec![false; samples * features],
        labels,
        TabularDataset::default_names(features),
    )?;
    Ok((data, planted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_ground_state_magnetization() {
        let (data, planted) = planted_ising(50, 4, 0.5, 3).unwrap();
        assert_eq!((data.n_rows(), data.n_cols()), (50, 4));
        assert_eq!(planted.edges().len(), 4);
        for i in 0..50 {
            let inst = IsingInstance::new(data.row(i).to_vec(), planted.clone()).unwrap();
            // brute force over spin configurations
            let mut best = (f64::INFINITY, 0.0);
            for b in 0..16usize {
                let z: Vec<f64> = (0..4).map(|q| if b >> q & 1 == 1 { -1.0 } else { 1.0 }).collect();
                let mut e: f64 = inst.fields().iter().zip(&z).map(|(h, s)| h * s).sum();
                for edge in planted.edges() {
                    e += edge.weight * z[edge.i] * z[edge.j];
                }
                if e < best.0 {
                    best = (e, z.iter().sum());
                }
            }
            assert_eq!(data.labels()[i], u8::from(best.1 > 0.0));
        }
        let again = planted_ising(50, 4, 0.5, 3).unwrap();
        assert_eq!(again.0, data);
    }
}
