//! Quantum feature vectors: `<sigma^z_i>` of the post-quench state, one per
//! input feature, optionally followed by `<sigma^z_i sigma^z_j>` per coupling.

use crate::data::TabularDataset;
use crate::encoding::{encode_sample, CouplingGraph, EncodingConfig};
use crate::quench::{
    evolve, expect_z_all, expect_zz, sample_bitstrings, z_from_samples, zz_from_samples,
    QuenchConfig, StateVector,
};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumFeatureVector {
    pub z: Vec<f64>,
    /// One entry per coupling edge, in edge order.
    pub zz: Option<Vec<f64>>,
}

impl QuantumFeatureVector {
    pub fn width(&self) -> usize {
        self.z.len() + self.zz.as_ref().map_or(0, Vec::len)
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = self.z.clone();
        if let Some(zz) = &self.zz {
            row.extend_from_slice(zz);
        }
        row
    }
}

/// Quench settings plus the encoding clamp and observable set.
#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub quench: QuenchConfig,
    pub h_max: f64,
    pub include_zz: bool,
}

impl MapConfig {
    pub fn new(quench: QuenchConfig) -> Self {
        Self {
            quench,
            h_max: EncodingConfig::default().h_max,
            include_zz: false,
        }
    }

    pub fn with_zz(mut self, include_zz: bool) -> Self {
        self.include_zz = include_zz;
        self
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Number of columns a mapped row has for `couplings`.
    pub fn width(&self, couplings: &CouplingGraph) -> usize {
        couplings.n() + if self.include_zz { couplings.edges().len() } else { 0 }
    }
}

/// Final state of the quench driven by sample `x`.
pub fn final_state(x: &[f64], couplings: &CouplingGraph, config: &MapConfig) -> Result<StateVector> {
    let instance = encode_sample(x, couplings, config.h_max)?;
    evolve(&instance, &config.quench)
}

/// Observables of an already evolved state. Shot mode draws one sample set
/// with `seed` and estimates every observable from it.
pub fn observe(
    state: &StateVector,
    couplings: &CouplingGraph,
    include_zz: bool,
    shots: Option<u64>,
    seed: u64,
) -> Result<QuantumFeatureVector> {
    let pairs: Vec<(usize, usize)> = couplings.edges().iter().map(|e| (e.i, e.j)).collect();
    match shots {
        None => {
            let z = expect_z_all(state);
            let zz = if include_zz {
                Some(
                    pairs
                        .iter()
                        .map(|&(i, j)| expect_zz(state, i, j))
                        .collect::<Result<Vec<_>>>()?,
                )
            } else {
                None
            };
            Ok(QuantumFeatureVector { z, zz })
        }
        Some(shots) => {
            let samples = sample_bitstrings(state, shots, seed)?;
            Ok(QuantumFeatureVector {
                z: z_from_samples(&samples, state.n()),
                zz: include_zz.then(|| zz_from_samples(&samples, &pairs)),
            })
        }
    }
}

pub fn map_sample(x: &[f64], couplings: &CouplingGraph, config: &MapConfig) -> Result<QuantumFeatureVector> {
    let state = final_state(x, couplings, config)?;
    observe(&state, couplings, config.include_zz, config.quench.shots, config.quench.seed)
}

/// Seed used for row `row` in shot mode.
pub fn row_seed(seed: u64, row: usize) -> u64 {
    seed ^ row as u64
}

/// Everything needed to reproduce a mapped dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapProvenance {
    pub tau_ns: f64,
    pub dt_ns: f64,
    pub schedule: String,
    pub shots: Option<u64>,
    pub seed: u64,
    pub h_max: f64,
    pub include_zz: bool,
    pub n_qubits: usize,
    /// Coupling graph in its text form.
    pub couplings: String,
    pub encoding: Option<EncodingConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappedDataset {
    /// Row-major, `n_rows x width`.
    pub features: Vec<f64>,
    pub n_rows: usize,
    pub width: usize,
    pub labels: Vec<u8>,
    pub column_names: Vec<String>,
    pub provenance: MapProvenance,
}

impl MappedDataset {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.width.max(1)).take(self.n_rows)
    }

    /// As a tabular dataset (needs both classes present).
    pub fn to_dataset(&self) -> Result<TabularDataset> {
        TabularDataset::new(
            self.features.clone(),
            vec![false; self.features.len()],
            self.labels.clone(),
            self.column_names.clone(),
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.column_names.clone();
        header.push("label".to_string());
        w.write_record(&header)?;
        for (row, label) in self.rows().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            record.push(label.to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Writes `path` and the provenance sidecar, returning the sidecar path.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let sidecar = sidecar_path(path);
        let text = toml::to_string(&self.provenance).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))?;
        Ok(sidecar)
    }
}

/// `results/mapped.csv` -> `results/mapped.provenance.toml`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("provenance.toml")
}

pub fn column_names(couplings: &CouplingGraph, include_zz: bool) -> Vec<String> {
    let mut names: Vec<String> = (0..couplings.n()).map(|i| format!("q{i}")).collect();
    if include_zz {
        names.extend((0..couplings.edges().len()).map(|k| format!("e{k}")));
    }
    names
}

fn provenance(couplings: &CouplingGraph, config: &MapConfig) -> MapProvenance {
    MapProvenance {
        tau_ns: config.quench.schedule.tau_ns(),
        dt_ns: config.quench.dt_ns,
        schedule: config.quench.schedule.descriptor(),
        shots: config.quench.shots,
        seed: config.quench.seed,
        h_max: config.h_max,
        include_zz: config.include_zz,
        n_qubits: couplings.n(),
        couplings: couplings.to_text(),
        encoding: None,
    }
}

/// Maps every row of `rows` (row-major, width `couplings.n()`), in parallel
/// and in order. Row `i` uses shot seed [`row_seed`]`(seed, i)`.
pub fn map_rows(rows: &[f64], couplings: &CouplingGraph, config: &MapConfig) -> Result<Vec<f64>> {
    let n = couplings.n();
    if n == 0 || !rows.len().is_multiple_of(n) {
        return Err(Error::LengthMismatch {
            what: "row-major sample block",
            expected: n,
            got: rows.len(),
        });
    }
    let samples: Vec<&[f64]> = rows.chunks(n).collect();
    let seeds: Vec<u64> = (0..samples.len()).map(|i| row_seed(config.quench.seed, i)).collect();
    Ok(map_rows_seeded(&samples, &seeds, couplings, config)?.concat())
}

/// Maps each sample with its own shot seed, in parallel and in order.
pub fn map_rows_seeded(
    samples: &[&[f64]],
    seeds: &[u64],
    couplings: &CouplingGraph,
    config: &MapConfig,
) -> Result<Vec<Vec<f64>>> {
    if samples.len() != seeds.len() {
        return Err(Error::LengthMismatch {
            what: "seed count",
            expected: samples.len(),
            got: seeds.len(),
        });
    }
    samples
        .par_iter()
        .zip(seeds)
        .map(|(x, &seed)| {
            let state = final_state(x, couplings, config)?;
            Ok(observe(&state, couplings, config.include_zz, config.quench.shots, seed)?.to_row())
        })
        .collect()
}

pub fn map_dataset(
    data: &TabularDataset,
    couplings: &CouplingGraph,
    config: &MapConfig,
) -> Result<MappedDataset> {
    if data.n_cols() != couplings.n() {
        return Err(Error::LengthMismatch {
            what: "dataset width",
            expected: couplings.n(),
            got: data.n_cols(),
        });
    }
    if data.has_missing() {
        return Err(Error::InvalidArgument("dataset still has missing values".into()));
    }
    let features = map_rows(data.values(), couplings, config)?;
    Ok(MappedDataset {
        features,
        n_rows: data.n_rows(),
        width: config.width(couplings),
        labels: data.labels().to_vec(),
        column_names: column_names(couplings, config.include_zz),
        provenance: provenance(couplings, config),
    })
}

/// Mapping of zero rows: an empty matrix of the right width.
pub fn map_empty(couplings: &CouplingGraph, config: &MapConfig) -> MappedDataset {
    MappedDataset {
        features: Vec::new(),
        n_rows: 0,
        width: config.width(couplings),
        labels: Vec::new(),
        column_names: column_names(couplings, config.include_zz),
        provenance: provenance(couplings, config),
    }
}

/// Final states for every row, for fidelity kernels.
pub fn map_states(data: &TabularDataset, couplings: &CouplingGraph, config: &MapConfig) -> Result<Vec<StateVector>> {
    (0..data.n_rows())
        .into_par_iter()
        .map(|i| final_state(data.row(i), couplings, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Edge;
    use crate::schedule::AnnealSchedule;
    use crate::util::rng;
    use rand::Rng;
    use std::f64::consts::TAU;

    fn config(tau: f64) -> MapConfig {
        MapConfig::new(QuenchConfig::new(AnnealSchedule::linear(TAU, TAU, tau).unwrap()))
    }

    fn chain(n: usize) -> CouplingGraph {
        let edges = (0..n - 1).map(|i| Edge { i, j: i + 1, weight: -0.4 }).collect();
        CouplingGraph::new(n, edges).unwrap()
    }

    #[test]
    fn zero_sample_maps_to_zero() {
        let v = map_sample(&[0.0; 3], &CouplingGraph::empty(3), &config(5.0)).unwrap();
        assert!(v.z.iter().all(|z| z.abs() < 1e-12));
        assert!(v.zz.is_none());
    }

    #[test]
    fn zz_extends_width() {
        let g = chain(2);
        let v = map_sample(&[0.5, -0.2], &g, &config(2.0).with_zz(true)).unwrap();
        assert_eq!(v.width(), 3);
        assert_eq!(v.to_row().len(), 3);
        assert!(v.to_row().iter().all(|x| x.abs() <= 1.0));
    }

    #[test]
    fn single_spin_matches_dense_integration() {
        let cfg = config(10.0);
        let v = map_sample(&[1.0], &CouplingGraph::empty(1), &cfg).unwrap();
        let inst = crate::encoding::IsingInstance::new(vec![1.0], CouplingGraph::empty(1)).unwrap();
        let reference = crate::oracle::rk4_evolve(&inst, &cfg.quench.schedule, 1e-4).unwrap();
        assert!((v.z[0] - expect_z_all(&reference)[0]).abs() < 1e-4);
    }

    fn random_data(rows: usize, n: usize, seed: u64) -> TabularDataset {
        let mut r = rng(seed);
        let values = (0..rows * n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let labels = (0..rows).map(|i| (i % 2) as u8).collect();
        TabularDataset::new(values, vec![false; rows * n], labels, TabularDataset::default_names(n)).unwrap()
    }

    #[test]
    fn duplicate_rows_map_identically() {
        let mut rows = vec![vec![0.3, -1.0, 0.7]; 2];
        rows.push(vec![-0.3, 1.0, -0.7]);
        let data = TabularDataset::from_rows(&rows, vec![0, 1, 1], TabularDataset::default_names(3)).unwrap();
        let mapped = map_dataset(&data, &chain(3), &config(3.0)).unwrap();
        assert_eq!(mapped.row(0), mapped.row(1));
        for (a, b) in mapped.row(0).iter().zip(mapped.row(2)) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_mapping_has_width() {
        let m = map_empty(&chain(4), &config(1.0).with_zz(true));
        assert_eq!((m.n_rows, m.width), (0, 7));
        assert_eq!(m.rows().count(), 0);
    }

    #[test]
    fn dataset_rows_match_standalone_samples() {
        let data = random_data(6, 4, 3);
        let g = chain(4);
        let cfg = config(2.0).with_zz(true);
        let mapped = map_dataset(&data, &g, &cfg).unwrap();
        assert_eq!((mapped.n_rows, mapped.width), (6, 7));
        for i in 0..6 {
            assert_eq!(mapped.row(i), map_sample(data.row(i), &g, &cfg).unwrap().to_row().as_slice());
        }
    }

    #[test]
    fn shot_mode_is_seeded_per_row() {
        let data = random_data(4, 3, 5);
        let mut cfg = config(2.0);
        cfg.quench.shots = Some(200);
        cfg.quench.seed = 9;
        let a = map_dataset(&data, &chain(3), &cfg).unwrap();
        let b = map_dataset(&data, &chain(3), &cfg).unwrap();
        assert_eq!(a.features, b.features);
        let mut one = cfg.clone();
        one.quench.seed = row_seed(9, 2);
        assert_eq!(a.row(2), map_sample(data.row(2), &chain(3), &one).unwrap().to_row().as_slice());
    }

    #[test]
    fn csv_and_sidecar_written() {
        let data = random_data(4, 2, 1);
        let mapped = map_dataset(&data, &chain(2), &config(1.0).with_zz(true)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mapped.csv");
        let sidecar = mapped.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("q0,q1,e0,label\n"));
        let back = crate::data::load_csv(&path, "label").unwrap();
        assert_eq!(back.values(), mapped.features.as_slice());
        let prov: MapProvenance = toml::from_str(&std::fs::read_to_string(sidecar).unwrap()).unwrap();
        assert_eq!(prov, mapped.provenance);
    }
}
