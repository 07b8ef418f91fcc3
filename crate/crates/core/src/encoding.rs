//! Samples to Ising problems.
//!
//! Convention: `H(x) = sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j`. In a basis index
//! `b`, bit `i` set means spin `i` has Z eigenvalue -1; bit 0 is qubit 0.

use crate::data::TabularDataset;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;

/// Largest register the state-vector simulator accepts by default.
pub const N_MAX_SIM: usize = 24;

/// Upper bound on `n` accepted by the text parsers.
const N_MAX_TEXT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Sparse symmetric couplings, edges sorted by `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl CouplingGraph {
    pub fn new(n: usize, mut edges: Vec<Edge>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &edges {
            if e.i >= e.j {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) must satisfy i < j",
                    e.i, e.j
                )));
            }
            if e.j >= n {
                return Err(Error::IndexOutOfRange { index: e.j, len: n });
            }
            if !e.weight.is_finite() {
                return Err(Error::InvalidArgument("non-finite coupling".into()));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge ({}, {})",
                    e.i, e.j
                )));
            }
        }
        edges.sort_by_key(|e| (e.i, e.j));
        Ok(Self { n, edges })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        write_edges(&mut out, &self.edges);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = parse_ising_text(text)?;
        if parsed.h.iter().any(Option::is_some) {
            return Err(Error::parse(0, "coupling graph must not contain `h` lines"));
        }
        CouplingGraph::new(parsed.n, parsed.edges)
    }

    /// Canonical little-endian byte image, for hashing.
    pub fn fingerprint(&self) -> Vec<u8> {
        let mut bytes = (self.n as u64).to_le_bytes().to_vec();
        for e in &self.edges {
            bytes.extend_from_slice(&(e.i as u64).to_le_bytes());
            bytes.extend_from_slice(&(e.j as u64).to_le_bytes());
            bytes.extend_from_slice(&e.weight.to_le_bytes());
        }
        bytes
    }
}

/// Per-sample longitudinal fields plus the shared couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingInstance {
    h: Vec<f64>,
    couplings: CouplingGraph,
}

impl IsingInstance {
    pub fn new(h: Vec<f64>, couplings: CouplingGraph) -> Result<Self> {
        if h.len() != couplings.n() {
            return Err(Error::LengthMismatch {
                what: "fields",
                expected: couplings.n(),
                got: h.len(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite field".into()));
        }
        Ok(Self { h, couplings })
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn couplings(&self) -> &CouplingGraph {
        &self.couplings
    }

    /// Same couplings, every field negated.
    pub fn flipped(&self) -> Self {
        Self {
            h: self.h.iter().map(|v| -v).collect(),
            couplings: self.couplings.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n());
        for (i, v) in self.h.iter().enumerate() {
            let _ = writeln!(out, "h {i} {v}");
        }
        write_edges(&mut out, self.couplings.edges());
        out
    }

    /// Parses the line format written by [`IsingInstance::to_text`]; fields
    /// without an `h` line are zero.
    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = parse_ising_text(text)?;
        let couplings = CouplingGraph::new(parsed.n, parsed.edges)?;
        let h = parsed.h.into_iter().map(|v| v.unwrap_or(0.0)).collect();
        IsingInstance::new(h, couplings)
    }
}

fn write_edges(out: &mut String, edges: &[Edge]) {
    for e in edges {
        let _ = writeln!(out, "J {} {} {}", e.i, e.j, e.weight);
    }
}

struct ParsedIsing {
    n: usize,
    h: Vec<Option<f64>>,
    edges: Vec<Edge>,
}

fn parse_ising_text(text: &str) -> Result<ParsedIsing> {
    let mut n: Option<usize> = None;
    let mut h: Vec<Option<f64>> = Vec::new();
    let mut edges = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let index = |tok: &str| -> Result<usize> {
            tok.parse::<usize>()
                .map_err(|e| Error::parse(line_no, format!("bad index `{tok}`: {e}")))
        };
        let real = |tok: &str| -> Result<f64> {
            let v = tok
                .parse::<f64>()
                .map_err(|e| Error::parse(line_no, format!("bad value `{tok}`: {e}")))?;
            if !v.is_finite() {
                return Err(Error::parse(line_no, "non-finite value"));
            }
            Ok(v)
        };
        match tokens.as_slice() {
            ["n", count] => {
                if n.is_some() {
                    return Err(Error::parse(line_no, "repeated `n` header"));
                }
                let count = index(count)?;
                if count == 0 || count > N_MAX_TEXT {
                    return Err(Error::parse(line_no, format!("qubit count {count} out of range")));
                }
                n = Some(count);
                h = vec![None; count];
            }
            ["h", i, v] => {
                let count = n.ok_or_else(|| Error::parse(line_no, "`h` before `n` header"))?;
                let i = index(i)?;
                if i >= count {
                    return Err(Error::parse(line_no, format!("field index {i} >= n")));
                }
                if h[i].replace(real(v)?).is_some() {
                    return Err(Error::parse(line_no, format!("duplicate field {i}")));
                }
            }
            ["J", i, j, v] => {
                let count = n.ok_or_else(|| Error::parse(line_no, "`J` before `n` header"))?;
                let (i, j) = (index(i)?, index(j)?);
                if i >= j || j >= count {
                    return Err(Error::parse(line_no, format!("bad edge ({i}, {j})")));
                }
                edges.push(Edge {
                    i,
                    j,
                    weight: real(v)?,
                });
            }
            _ => return Err(Error::parse(line_no, format!("unrecognized line `{line}`"))),
        }
    }
    let n = n.ok_or_else(|| Error::parse(0, "missing `n` header"))?;
    Ok(ParsedIsing { n, h, edges })
}

/// Knobs for turning preprocessed rows into Ising problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    pub corr_threshold: f64,
    pub max_degree: Option<usize>,
    pub h_max: f64,
    pub j_max: f64,
    pub coupling_scale: f64,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            corr_threshold: 0.1,
            max_degree: None,
            h_max: 4.0,
            j_max: 1.0,
            coupling_scale: 1.0,
        }
    }
}

/// Pearson correlation matrix (row-major, `d x d`) of the dataset columns.
/// Zero-variance columns correlate 0 with everything else.
pub fn pearson_matrix(data: &TabularDataset) -> Vec<f64> {
    let (n, d) = (data.n_rows(), data.n_cols());
    let mut centered = vec![0.0; n * d];
    let mut norms = vec![0.0; d];
    for j in 0..d {
        let mean = (0..n).map(|i| data.value(i, j)).sum::<f64>() / n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            let c = data.value(i, j) - mean;
            centered[j * n + i] = c;
            ss += c * c;
        }
        norms[j] = ss.sqrt();
    }
    let mut rho = vec![0.0; d * d];
    for a in 0..d {
        for b in a..d {
            let r = if norms[a] == 0.0 || norms[b] == 0.0 {
                0.0
            } else {
                let ca = &centered[a * n..(a + 1) * n];
                let cb = &centered[b * n..(b + 1) * n];
                let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0)
            };
            rho[a * d + b] = r;
            rho[b * d + a] = r;
        }
    }
    rho
}

/// Builds couplings `J_ij = -scale * rho_ij` from training-set correlations.
pub fn fit_couplings(train: &TabularDataset, config: &EncodingConfig) -> Result<CouplingGraph> {
    if train.n_rows() < 2 {
        return Err(Error::InvalidArgument(
            "fit_couplings needs at least two training rows".into(),
        ));
    }
    let d = train.n_cols();
    let rho = pearson_matrix(train);
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let r = rho[i * d + j];
            if r.abs() >= config.corr_threshold {
                candidates.push((i, j, r));
            }
        }
    }
    let keep: Vec<bool> = match config.max_degree {
        None => vec![true; candidates.len()],
        Some(cap) => {
            let mut keep = vec![false; candidates.len()];
            for node in 0..d {
                let mut incident: Vec<usize> = (0..candidates.len())
                    .filter(|&k| candidates[k].0 == node || candidates[k].1 == node)
                    .collect();
                // candidates are already in (i, j) order, so a stable sort keeps ties lexicographic
                incident.sort_by(|&a, &b| candidates[b].2.abs().total_cmp(&candidates[a].2.abs()));
                for &k in incident.iter().take(cap) {
                    keep[k] = true;
                }
            }
            keep
        }
    };
    let edges = candidates
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|((i, j, r), _)| Edge {
            i,
            j,
            weight: (-config.coupling_scale * r).clamp(-config.j_max, config.j_max),
        })
        .collect();
    CouplingGraph::new(d, edges)
}

/// `h_i = clamp(x_i, -h_max, h_max)` with the shared couplings attached.
pub fn encode_sample(x: &[f64], couplings: &CouplingGraph, h_max: f64) -> Result<IsingInstance> {
    if x.len() != couplings.n() {
        return Err(Error::LengthMismatch {
            what: "sample width",
            expected: couplings.n(),
            got: x.len(),
        });
    }
    let h = x.iter().map(|&v| v.clamp(-h_max, h_max)).collect();
    IsingInstance::new(h, couplings.clone())
}

/// Classical energy of every basis state, indexed as described at module level.
pub fn diagonal_energies(instance: &IsingInstance) -> Result<Vec<f64>> {
    diagonal_energies_limited(instance, N_MAX_SIM)
}

pub fn diagonal_energies_limited(instance: &IsingInstance, n_max: usize) -> Result<Vec<f64>> {
    let n = instance.n();
    if n > n_max || n >= usize::BITS as usize {
        return Err(Error::TooManyQubits(n, n_max));
    }
    let h = instance.fields();
    let edges = instance.couplings().edges();
    let dim = 1usize << n;
    let spin = |b: usize, i: usize| if (b >> i) & 1 == 0 { 1.0 } else { -1.0 };
    Ok((0..dim)
        .map(|b| {
            let mut e = 0.0;
            for (i, &hi) in h.iter().enumerate() {
                e += hi * spin(b, i);
            }
            for edge in edges {
                e += edge.weight * spin(b, edge.i) * spin(b, edge.j);
            }
            e
        })
        .collect())
}
