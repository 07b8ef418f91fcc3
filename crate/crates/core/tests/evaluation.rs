use quenchmap::data::{stratified_splits, Fold, TabularDataset};
use quenchmap::evaluation::{
    fit_fold_artifacts, read_folds_csv, run_experiment, run_experiment_on, run_fold, summarize, ExperimentConfig,
    ModelFamily, QuenchCache, Representation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    // Box-Muller
                    let u: f64 = r.gen_range(1e-12..1.0);
                    let v: f64 = r.gen();
                    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
                })
                .collect()
        })
        .collect()
}

/// Label is the sign of feature 0.
fn sign_dataset(n: usize, d: usize, seed: u64) -> TabularDataset {
    let rows = gaussian_rows(n, d, seed);
    let labels = rows.iter().map(|r| u8::from(r[0] > 0.0)).collect();
    TabularDataset::from_rows(&rows, labels, TabularDataset::default_names(d)).unwrap()
}

fn write_dataset(data: &TabularDataset, path: &Path) {
    let f = std::fs::File::create(path).unwrap();
    quenchmap::data::write_csv(data, f, "label").unwrap();
}

fn quick_config(path: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_dataset(path, "label");
    c.preprocess.mi_threshold = 0.0;
    c.quench.tau_list = vec![1.0];
    c.quench.dt_ns = 0.05;
    c.models.families = vec![ModelFamily::Svm];
    c.models.svm_c = vec![0.1, 1.0];
    c.models.gbt_trees = vec![10];
    c.models.gbt_depth = vec![2];
    c.models.gbt_rate = vec![0.3];
    c.cv.n_splits = 2;
    c.cv.n_repeats = 1;
    c
}

#[test]
fn raw_svm_learns_sign_of_first_feature() {
    let data = sign_dataset(300, 3, 1);
    let mut config = quick_config(Path::new("unused.csv"));
    config.models.svm_c = vec![0.1, 1.0, 10.0, 100.0];
    config.quench.tau_list = vec![0.5];
    let fold = Fold {
        repeat: 0,
        fold: 0,
        train: (0..200).collect(),
        test: (200..300).collect(),
    };
    let reports = run_fold(&config, &data, &fold, 0.5, &QuenchCache::in_memory()).unwrap().unwrap();
    let raw = reports.iter().find(|r| r.representation == Representation::Raw).unwrap();
    assert!(raw.metrics.accuracy >= 0.95, "{:?}", raw.metrics);
    assert_eq!(reports.len(), 2);
}

#[test]
fn vanishing_anneal_time_carries_no_signal() {
    let data = sign_dataset(120, 3, 2);
    let config = quick_config(Path::new("unused.csv"));
    let plan = stratified_splits(data.labels(), 2, 1, 3).unwrap();
    for fold in &plan.folds {
        let reports = run_fold(&config, &data, fold, 1e-6, &QuenchCache::in_memory()).unwrap().unwrap();
        let mapped = reports.iter().find(|r| r.representation == Representation::Aqfm).unwrap();
        assert!((mapped.metrics.accuracy - 0.5).abs() <= 0.05, "{:?}", mapped.metrics);
    }
}

#[test]
fn two_fold_run_gives_two_scores_and_their_median() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    write_dataset(&sign_dataset(40, 3, 4), &path);
    let mut config = quick_config(&path);
    config.output.out_dir = dir.path().join("out");
    let result = run_experiment(&config).unwrap();
    assert!(result.skipped.is_empty());
    for rep in [Representation::Raw, Representation::Aqfm] {
        let g = result.group(ModelFamily::Svm, rep, 1.0, "accuracy_balanced").unwrap();
        assert_eq!(g.scores.len(), 2);
        assert_eq!(g.median, (g.scores[0] + g.scores[1]) / 2.0);
        assert!(g.min <= g.median && g.median <= g.max);
    }
    let from_csv = read_folds_csv(config.output.out_dir.join("folds.csv")).unwrap();
    assert_eq!(from_csv, result.records);
    assert_eq!(summarize(&from_csv), result.summary);
    let summary = std::fs::read_to_string(config.output.out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("dataset,model,representation,tau_ns,metric,n,median,q1,q3,iqr,min,max\n"));
    assert!(config.output.out_dir.join("provenance.toml").is_file());
}

#[test]
fn protocol_yields_fifty_scores_per_group() {
    let data = sign_dataset(60, 2, 5);
    let mut config = quick_config(Path::new("unused.csv"));
    config.cv.n_splits = 10;
    config.cv.n_repeats = 5;
    config.cv.inner_fraction = 0.25;
    config.quench.tau_list = vec![0.5, 1.0];
    config.models.families = vec![ModelFamily::Svm, ModelFamily::Gbt];
    let result = run_experiment_on(&config, &data, None).unwrap();
    assert!(result.skipped.is_empty());
    assert_eq!(result.summary.len(), 2 * 2 * 2 * 6);
    for g in &result.summary {
        assert_eq!(g.scores.len(), 50, "{:?} {:?} {}", g.model, g.representation, g.metric);
    }
}

#[test]
fn resumed_run_reproduces_results() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    write_dataset(&sign_dataset(48, 3, 6), &path);
    let mut config = quick_config(&path);
    config.cv.n_splits = 3;
    config.quench.tau_list = vec![0.5, 2.0];
    let out = dir.path().join("out");
    config.output.out_dir = out.clone();
    run_experiment(&config).unwrap();
    let folds = std::fs::read(out.join("folds.csv")).unwrap();
    let summary = std::fs::read(out.join("summary.csv")).unwrap();

    // drop the last cell and cut the one before it mid-line
    let ledger = std::fs::read_to_string(out.join("ledger.csv")).unwrap();
    let lines: Vec<&str> = ledger.lines().collect();
    let mut kept = lines[..lines.len() - 4].join("\n");
    kept.push('\n');
    kept.push_str(&lines[lines.len() - 4][..10]);
    std::fs::write(out.join("ledger.csv"), kept).unwrap();
    std::fs::remove_file(out.join("folds.csv")).unwrap();

    run_experiment(&config).unwrap();
    assert_eq!(std::fs::read(out.join("folds.csv")).unwrap(), folds);
    assert_eq!(std::fs::read(out.join("summary.csv")).unwrap(), summary);

    let mut other = config.clone();
    other.cv.seed = 99;
    assert!(run_experiment(&other).is_err());
}

#[test]
fn test_rows_do_not_leak_into_fits() {
    let data = sign_dataset(60, 4, 7);
    let mut config = quick_config(Path::new("unused.csv"));
    config.preprocess.top_k = Some(3);
    config.encoding.corr_threshold = 0.0;
    let plan = stratified_splits(data.labels(), 3, 1, 8).unwrap();
    let fold = &plan.folds[1];
    let before = fit_fold_artifacts(&data, fold, &config).unwrap();

    let mut rows: Vec<Vec<f64>> = data.rows().map(|r| r.to_vec()).collect();
    for &i in &fold.test {
        for v in rows[i].iter_mut() {
            *v = *v * 7.0 + 100.0;
        }
    }
    let perturbed = TabularDataset::from_rows(&rows, data.labels().to_vec(), data.column_names().to_vec()).unwrap();
    let after = fit_fold_artifacts(&perturbed, fold, &config).unwrap();
    assert_eq!(before.preprocess, after.preprocess);
    assert_eq!(before.couplings, after.couplings);
    assert_eq!(before.train, after.train);
    assert_ne!(before.test, after.test);
}

#[test]
fn different_split_seeds_change_folds_not_shape() {
    let data = sign_dataset(40, 2, 9);
    let mut a = quick_config(Path::new("unused.csv"));
    a.cv.n_splits = 4;
    let mut b = a.clone();
    b.cv.seed = 1;
    let ra = run_experiment_on(&a, &data, None).unwrap();
    let rb = run_experiment_on(&b, &data, None).unwrap();
    assert_eq!(ra.records.len(), rb.records.len());
    let pa = stratified_splits(data.labels(), 4, 1, 0).unwrap();
    let pb = stratified_splits(data.labels(), 4, 1, 1).unwrap();
    assert_ne!(pa.folds, pb.folds);
}

#[test]
fn tiny_classes_skip_folds_with_reason() {
    let rows = gaussian_rows(12, 2, 10);
    let labels: Vec<u8> = (0..12).map(|i| u8::from(i < 2)).collect();
    let data = TabularDataset::from_rows(&rows, labels, TabularDataset::default_names(2)).unwrap();
    let config = quick_config(Path::new("unused.csv"));
    let result = run_experiment_on(&config, &data, None).unwrap();
    assert_eq!(result.skipped.len(), 2);
    assert!(result.skipped[0].reason.contains("inner split"));
    assert!(result.records.is_empty());
}
