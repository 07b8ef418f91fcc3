use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

/// Bin index of every value under equal-frequency binning.
///
/// Edges are order statistics of the data itself, so the assignment depends
/// only on ranks. Duplicate edges collapse into one.
fn equal_frequency_bins(feature: &[f64], n_bins: usize) -> (Vec<usize>, usize) {
    let mut sorted = feature.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..n_bins).map(|k| sorted[k * n / n_bins]).collect();
    edges.dedup();
    let bins = feature
        .iter()
        .map(|&v| edges.partition_point(|&e| e < v))
        .collect();
    (bins, edges.len() + 1)
}

/// Mutual information (nats) between a real feature and binary labels.
pub fn mutual_information(feature: &[f64], labels: &[u8], n_bins: usize) -> Result<f64> {
    if feature.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: feature.len(),
            got: labels.len(),
        });
    }
    if feature.len() < 2 {
        return Err(Error::InvalidArgument(
            "mutual information needs at least two samples".into(),
        ));
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be positive".into()));
    }
    let (bins, k) = equal_frequency_bins(feature, n_bins);
    Ok(mi_from_bins(&bins, k, labels))
}

fn mi_from_bins(bins: &[usize], k: usize, labels: &[u8]) -> f64 {
    let mut joint = vec![[0usize; 2]; k];
    for (&b, &y) in bins.iter().zip(labels) {
        joint[b][usize::from(y.min(1))] += 1;
    }
    let n = bins.len() as f64;
    let py = [0, 1].map(|c| joint.iter().map(|row| row[c]).sum::<usize>() as f64 / n);
    let mut mi = 0.0;
    for row in &joint {
        let pb = (row[0] + row[1]) as f64 / n;
        for c in 0..2 {
            if row[c] == 0 {
                continue;
            }
            let pj = row[c] as f64 / n;
            mi += pj * (pj / (pb * py[c])).ln();
        }
    }
    mi.max(0.0)
}
