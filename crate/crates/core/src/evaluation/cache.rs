use crate::encoding::CouplingGraph;
use crate::features::{map_rows_seeded, MapConfig};
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Overrides the on-disk cache location.
pub const CACHE_DIR_ENV: &str = "QUENCHMAP_CACHE_DIR";

type Key = [u8; 32];

/// Mapped feature rows keyed by sample, couplings, schedule and step size.
#[derive(Debug, Default)]
pub struct QuenchCache {
    memory: Mutex<HashMap<Key, Vec<f64>>>,
    dir: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl QuenchCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir: Some(dir),
            ..Self::default()
        })
    }

    /// Disk-backed if `QUENCHMAP_CACHE_DIR` or `configured` names a directory.
    pub fn from_env_or(configured: Option<&Path>) -> Result<Self> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::with_dir(dir),
            _ => match configured {
                Some(dir) => Self::with_dir(dir),
                None => Ok(Self::in_memory()),
            },
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// `(hits, misses)` so far.
    pub fn stats(&self) -> (usize, usize) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    fn key(sample: &[f64], seed: u64, couplings: &[u8], config: &MapConfig) -> Key {
        let q = &config.quench;
        let mut h = Sha256::new();
        h.update(b"quenchmap-cache-v1");
        h.update((sample.len() as u64).to_le_bytes());
        for v in sample {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(couplings);
        h.update(q.schedule.descriptor().as_bytes());
        h.update(q.schedule.tau_ns().to_bits().to_le_bytes());
        h.update(q.dt_ns.to_bits().to_le_bytes());
        h.update(config.h_max.to_bits().to_le_bytes());
        h.update([u8::from(config.include_zz)]);
        if let Some(shots) = q.shots {
            h.update(shots.to_le_bytes());
            h.update(seed.to_le_bytes());
        }
        h.finalize().into()
    }

    fn entry_path(&self, key: &Key) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.f64", hex::encode(key))))
    }

    fn load(&self, key: &Key, width: usize) -> Option<Vec<f64>> {
        if let Some(v) = self.memory.lock().expect("cache lock").get(key) {
            return Some(v.clone());
        }
        let bytes = std::fs::read(self.entry_path(key)?).ok()?;
        if bytes.len() != width * 8 {
            return None;
        }
        let row: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        self.memory.lock().expect("cache lock").insert(*key, row.clone());
        Some(row)
    }

    fn store(&self, key: Key, row: &[f64]) -> Result<()> {
        if let Some(path) = self.entry_path(&key) {
            let bytes: Vec<u8> = row.iter().flat_map(|v| v.to_le_bytes()).collect();
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
            std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        }
        self.memory.lock().expect("cache lock").insert(key, row.to_vec());
        Ok(())
    }

    /// Maps `samples` through the quench, reusing cached rows.
    pub fn map(
        &self,
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
        let width = config.width(couplings);
        let fingerprint = couplings.fingerprint();
        let keys: Vec<Key> = samples
            .iter()
            .zip(seeds)
            .map(|(x, &s)| Self::key(x, s, &fingerprint, config))
            .collect();
        let mut out: Vec<Option<Vec<f64>>> = keys.iter().map(|k| self.load(k, width)).collect();
        let todo: Vec<usize> = (0..out.len()).filter(|&i| out[i].is_none()).collect();
        self.hits.fetch_add(out.len() - todo.len(), Ordering::Relaxed);
        self.misses.fetch_add(todo.len(), Ordering::Relaxed);
        if !todo.is_empty() {
            let pending: Vec<&[f64]> = todo.iter().map(|&i| samples[i]).collect();
            let pending_seeds: Vec<u64> = todo.iter().map(|&i| seeds[i]).collect();
            let rows = map_rows_seeded(&pending, &pending_seeds, couplings, config)?;
            for (i, row) in todo.into_iter().zip(rows) {
                self.store(keys[i], &row)?;
                out[i] = Some(row);
            }
        }
        Ok(out.into_iter().map(|r| r.expect("every row filled")).collect())
    }
}
