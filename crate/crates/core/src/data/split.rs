use crate::util::rng;
use crate::{Error, Result};
use rand::seq::SliceRandom;

/// One train/test partition of the row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Repeated stratified k-fold plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub n_splits: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

fn class_indices(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut by_class = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        by_class[usize::from(y.min(1))].push(i);
    }
    by_class
}

/// Repeated stratified k-fold.
///
/// Repeat `r` shuffles each class with a generator seeded by `seed + r`, then
/// deals the shuffled indices round-robin into the folds. The dealing position
/// carries over from class 0 to class 1 so fold sizes differ by at most one.
pub fn stratified_splits(
    labels: &[u8],
    n_splits: usize,
    n_repeats: usize,
    seed: u64,
) -> Result<SplitPlan> {
    if n_splits < 2 {
        return Err(Error::InvalidArgument("n_splits must be at least 2".into()));
    }
    if n_repeats == 0 {
        return Err(Error::InvalidArgument("n_repeats must be positive".into()));
    }
    let by_class = class_indices(labels);
    for (class, idx) in by_class.iter().enumerate() {
        if idx.len() < n_splits {
            return Err(Error::ClassTooSmall {
                class: class as u8,
                count: idx.len(),
                needed: n_splits,
            });
        }
    }
    let n = labels.len();
    let mut folds = Vec::with_capacity(n_splits * n_repeats);
    for repeat in 0..n_repeats {
        let mut rng = rng(seed.wrapping_add(repeat as u64));
        let mut tests = vec![Vec::new(); n_splits];
        let mut slot = 0;
        for idx in &by_class {
            let mut shuffled = idx.clone();
            shuffled.shuffle(&mut rng);
            for i in shuffled {
                tests[slot % n_splits].push(i);
                slot += 1;
            }
        }
        for (k, mut test) in tests.into_iter().enumerate() {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            for &i in &test {
                in_test[i] = true;
            }
            let train = (0..n).filter(|&i| !in_test[i]).collect();
            folds.push(Fold {
                repeat,
                fold: k,
                train,
                test,
            });
        }
    }
    Ok(SplitPlan {
        n_splits,
        n_repeats,
        seed,
        folds,
    })
}

/// Single stratified holdout: returns `(fit, validation)` positions into `labels`.
///
/// Each class contributes `round(fraction * count)` rows to validation, clamped
/// so both sides keep at least one row of every class.
pub fn stratified_holdout(
    labels: &[u8],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction {fraction} outside (0, 1)"
        )));
    }
    let by_class = class_indices(labels);
    let mut rng = rng(seed);
    let mut fit = Vec::new();
    let mut val = Vec::new();
    for (class, idx) in by_class.iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: class as u8,
                count: idx.len(),
                needed: 2,
            });
        }
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        let k = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&shuffled[..k]);
        fit.extend_from_slice(&shuffled[k..]);
    }
    fit.sort_unstable();
    val.sort_unstable();
    Ok((fit, val))
}
