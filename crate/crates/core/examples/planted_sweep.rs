//! Anneal-time sweep on a synthetic Ising-planted dataset.
//!
//! `cargo run --release --example planted_sweep -- <splits> <repeats> <tau>...`

use quenchmap::evaluation::{run_experiment_on, ExperimentConfig, ModelFamily, Representation};
use quenchmap::synthetic::planted_ising;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let splits = args.first().map_or(Ok(5), |s| s.parse())?;
    let repeats = args.get(1).map_or(Ok(1), |s| s.parse())?;
    let taus: Vec<f64> = if args.len() > 2 {
        args[2..].iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    } else {
        vec![0.001, 20.0]
    };
    let (data, _) = planted_ising(200, 12, 0.5, 2024)?;
    let positives = data.labels().iter().filter(|&&y| y == 1).count();
    println!("planted dataset: 200 rows, {positives} positive");
    let mut config = ExperimentConfig::for_dataset("planted.csv", "label");
    config.preprocess.mi_threshold = 0.0;
    config.quench.tau_list = taus.clone();
    config.cv.n_splits = splits;
    config.cv.n_repeats = repeats;
    let start = Instant::now();
    let result = run_experiment_on(&config, &data, None)?;
    println!("{} folds in {:.1} s", splits * repeats, start.elapsed().as_secs_f64());
    for family in [ModelFamily::Svm, ModelFamily::Gbt] {
        for rep in [Representation::Raw, Representation::Aqfm] {
            for &tau in &taus {
                if let Some(g) = result.group(family, rep, tau, "accuracy_balanced") {
                    println!(
                        "{:>4} {:>5} tau={:<6} median {:.3} iqr {:.3}",
                        family.as_str(),
                        rep.as_str(),
                        tau,
                        g.median,
                        g.iqr
                    );
                }
            }
        }
    }
    Ok(())
}
