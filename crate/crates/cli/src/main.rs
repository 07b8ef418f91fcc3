//! `quenchmap` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use quenchmap::data::{fit_preprocess, load_csv, write_csv, TabularDataset};
use quenchmap::encoding::fit_couplings;
use quenchmap::evaluation::{run_experiment, ExperimentConfig, KernelChoice, SweepResult};
use quenchmap::features::{map_dataset, map_states};
use quenchmap::ml::{
    compute_metrics, gbt_predict, gbt_train, gram_fidelity, gram_linear, svm_predict, svm_train, GbtParams, Matrix,
    SvmOptions,
};
use quenchmap::oracle::run_checks;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "quenchmap", version, about = "Quenched Ising feature maps for tabular classification")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Impute, standardize and select features; writes the transformed CSV and the fitted report.
    Preprocess(Common),
    /// Fit the coupling graph on the preprocessed dataset.
    Encode(Common),
    /// Quench every row and write the mapped CSV with its provenance sidecar.
    Map(Common),
    /// Fit one model on the whole dataset and write it as text.
    Train(TrainArgs),
    /// Cross-validated evaluation at a single anneal time.
    Evaluate(Common),
    /// Cross-validated evaluation over every anneal time in `tau_list`.
    Sweep(Common),
    /// Cross-check the simulator against dense ODE integration and exact diagonalization.
    Oracle(OracleArgs),
}

/// Config file plus overrides; flags win over file values.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV, when no config is given or to replace its path.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column of the dataset.
    #[arg(long)]
    label: Option<String>,
    /// Anneal time in ns.
    #[arg(long)]
    tau_ns: Option<f64>,
    /// Trotter step in ns.
    #[arg(long)]
    dt_ns: Option<f64>,
    /// Measurement shots per sample; omit for exact expectation values.
    #[arg(long)]
    shots: Option<u64>,
    /// Quench seed (shot sampling).
    #[arg(long)]
    seed: Option<u64>,
    /// Keep the k features with highest mutual information.
    #[arg(long)]
    top_k: Option<usize>,
    /// Minimum absolute correlation for a coupling.
    #[arg(long)]
    corr_threshold: Option<f64>,
    /// Maximum couplings per qubit.
    #[arg(long)]
    max_degree: Option<usize>,
    /// `linear` or `file:<path>` with columns s, A, B.
    #[arg(long)]
    schedule: Option<String>,
    /// Transverse envelope scale in rad/ns.
    #[arg(long)]
    gamma0: Option<f64>,
    /// Problem envelope scale in rad/ns.
    #[arg(long)]
    beta0: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Svm,
    Gbt,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Features {
    Raw,
    Aqfm,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Model family.
    #[arg(long, value_enum, default_value = "svm")]
    model: Family,
    /// Train on the original or the quench-mapped features.
    #[arg(long, value_enum, default_value = "aqfm")]
    features: Features,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Qubits of the seeded instance (1 to 8).
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Anneal time used by single-tau commands when none is given.
const DEFAULT_TAU_NS: f64 = 20.0;

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome<T> = std::result::Result<T, Failure>;

fn runtime<T>(r: anyhow::Result<T>) -> Outcome<T> {
    r.map_err(Failure::Runtime)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Preprocess(c) => preprocess(&effective(&c, None)?),
        Command::Encode(c) => encode(&effective(&c, None)?),
        Command::Map(c) => {
            let cfg = effective(&c, Some(DEFAULT_TAU_NS))?;
            map(&cfg)
        }
        Command::Train(t) => {
            let cfg = effective(&t.common, Some(DEFAULT_TAU_NS))?;
            train(&cfg, t.model, t.features)
        }
        Command::Evaluate(c) => {
            let cfg = effective(&c, Some(DEFAULT_TAU_NS))?;
            evaluate(&cfg)
        }
        Command::Sweep(c) => evaluate(&effective(&c, None)?),
        Command::Oracle(o) => oracle(o.n, o.seed),
    }
}

/// Loads the config, applies flag overrides, validates and echoes the result.
/// `single_tau` collapses `tau_list` to the `--tau-ns` value or that default.
fn effective(flags: &Common, single_tau: Option<f64>) -> Outcome<ExperimentConfig> {
    let mut cfg = match (&flags.config, &flags.data) {
        (Some(path), _) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))
            .map_err(Failure::Usage)?,
        (None, Some(data)) => ExperimentConfig::for_dataset(data, "label"),
        (None, None) => return Err(Failure::Usage(anyhow!("either --config or --data is required"))),
    };
    if let (Some(_), Some(data)) = (&flags.config, &flags.data) {
        cfg.dataset.path = data.clone();
    }
    if let Some(label) = &flags.label {
        cfg.dataset.label_column = label.clone();
    }
    let q = &mut cfg.quench;
    if let Some(tau) = flags.tau_ns {
        q.tau_list = vec![tau];
    } else if let Some(tau) = single_tau {
        q.tau_list = vec![tau];
    }
    set(&mut q.dt_ns, flags.dt_ns);
    if flags.shots.is_some() {
        q.shots = flags.shots;
    }
    set(&mut q.seed, flags.seed);
    set(&mut q.schedule, flags.schedule.clone());
    set(&mut q.gamma0, flags.gamma0);
    set(&mut q.beta0, flags.beta0);
    if flags.top_k.is_some() {
        cfg.preprocess.top_k = flags.top_k;
    }
    set(&mut cfg.encoding.corr_threshold, flags.corr_threshold);
    if flags.max_degree.is_some() {
        cfg.encoding.max_degree = flags.max_degree;
    }
    if flags.jobs.is_some() {
        cfg.output.jobs = flags.jobs;
    }
    set(&mut cfg.output.out_dir, flags.out.clone());
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    println!("# effective config\n{}", cfg.to_toml());
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn out_dir(cfg: &ExperimentConfig) -> anyhow::Result<&Path> {
    let dir = cfg.output.out_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load(cfg: &ExperimentConfig) -> anyhow::Result<TabularDataset> {
    load_csv(&cfg.dataset.path, &cfg.dataset.label_column)
        .with_context(|| format!("reading {}", cfg.dataset.path.display()))
}

fn preprocess(cfg: &ExperimentConfig) -> Outcome<()> {
    runtime((|| {
        let data = load(cfg)?;
        let (processed, report) = fit_preprocess(&data, &cfg.preprocess)?;
        let dir = out_dir(cfg)?;
        let csv = dir.join("preprocessed.csv");
        write_csv(&processed, fs::File::create(&csv)?, &cfg.dataset.label_column)?;
        report.write(dir.join("preprocess.toml"))?;
        println!(
            "kept {} of {} columns -> {}",
            processed.n_cols(),
            data.n_cols(),
            csv.display()
        );
        Ok(())
    })())
}

fn encode(cfg: &ExperimentConfig) -> Outcome<()> {
    runtime((|| {
        let data = load(cfg)?;
        let (processed, _) = fit_preprocess(&data, &cfg.preprocess)?;
        let couplings = fit_couplings(&processed, &cfg.encoding)?;
        let path = out_dir(cfg)?.join("couplings.txt");
        fs::write(&path, couplings.to_text())?;
        println!(
            "{} qubits, {} couplings -> {}",
            couplings.n(),
            couplings.edges().len(),
            path.display()
        );
        Ok(())
    })())
}

fn tau_of(cfg: &ExperimentConfig) -> f64 {
    cfg.quench.tau_list.first().copied().unwrap_or(DEFAULT_TAU_NS)
}

fn map(cfg: &ExperimentConfig) -> Outcome<()> {
    runtime((|| {
        let data = load(cfg)?;
        let (processed, _) = fit_preprocess(&data, &cfg.preprocess)?;
        let couplings = fit_couplings(&processed, &cfg.encoding)?;
        let tau = tau_of(cfg);
        let mapped = map_dataset(&processed, &couplings, &cfg.map_config(tau)?)?;
        let path = out_dir(cfg)?.join(format!("mapped_tau{tau}.csv"));
        let sidecar = mapped.write(&path)?;
        println!(
            "{} rows x {} features -> {} (provenance {})",
            mapped.n_rows,
            mapped.width,
            path.display(),
            sidecar.display()
        );
        Ok(())
    })())
}

fn train(cfg: &ExperimentConfig, family: Family, features: Features) -> Outcome<()> {
    runtime((|| {
        let data = load(cfg)?;
        let (processed, report) = fit_preprocess(&data, &cfg.preprocess)?;
        let dir = out_dir(cfg)?;
        report.write(dir.join("preprocess.toml"))?;
        let labels = processed.labels().to_vec();
        let (x, states) = match features {
            Features::Raw => (Matrix::from(&processed), None),
            Features::Aqfm => {
                let couplings = fit_couplings(&processed, &cfg.encoding)?;
                fs::write(dir.join("couplings.txt"), couplings.to_text())?;
                let map_cfg = cfg.map_config(tau_of(cfg))?;
                let mapped = map_dataset(&processed, &couplings, &map_cfg)?;
                let states = (family == Family::Svm && cfg.models.kernel == KernelChoice::Fidelity)
                    .then(|| map_states(&processed, &couplings, &map_cfg))
                    .transpose()?;
                (Matrix::new(mapped.n_rows, mapped.width, mapped.features)?, states)
            }
        };
        let (text, name, scores, predicted) = match family {
            Family::Svm => {
                let c = *cfg.models.svm_c.first().ok_or_else(|| anyhow!("models.svm_c is empty"))?;
                let gram = match &states {
                    Some(s) => gram_fidelity(s)?,
                    None => gram_linear(&x, &x)?,
                };
                let options = SvmOptions {
                    tol: cfg.models.svm_tol,
                    ..SvmOptions::default()
                };
                let model = svm_train(&gram, &labels, c, &options)?;
                let (scores, predicted) = svm_predict(&model, &gram)?;
                (model.to_text(), "svm_model.txt", scores, predicted)
            }
            Family::Gbt => {
                let m = &cfg.models;
                let first = |v: &[usize], what: &str| v.first().copied().ok_or_else(|| anyhow!("models.{what} is empty"));
                let params = GbtParams {
                    n_trees: first(&m.gbt_trees, "gbt_trees")?,
                    max_depth: first(&m.gbt_depth, "gbt_depth")?,
                    learning_rate: *m.gbt_rate.first().ok_or_else(|| anyhow!("models.gbt_rate is empty"))?,
                    subsample: m.gbt_subsample,
                    seed: cfg.cv.seed,
                };
                let model = gbt_train(&x, &labels, &params)?;
                let (probs, predicted) = gbt_predict(&model, &x)?;
                (model.to_text(), "gbt_model.txt", probs, predicted)
            }
        };
        let path = dir.join(name);
        fs::write(&path, text)?;
        let metrics = compute_metrics(&labels, &predicted, &scores)?;
        println!(
            "training balanced accuracy {:.4}, auc {} -> {}",
            metrics.accuracy,
            metrics.auc.map_or("undefined".into(), |a| format!("{a:.4}")),
            path.display()
        );
        Ok(())
    })())
}

fn evaluate(cfg: &ExperimentConfig) -> Outcome<()> {
    let result = runtime(run_experiment(cfg).map_err(Into::into))?;
    print_summary(&result);
    println!("results in {}", cfg.output.out_dir.display());
    Ok(())
}

fn print_summary(result: &SweepResult) {
    println!("{:<5} {:<5} {:>8} {:>10} {:>8}", "model", "rep", "tau_ns", "median", "iqr");
    for g in result.summary.iter().filter(|g| g.metric == "accuracy_balanced") {
        println!(
            "{:<5} {:<5} {:>8} {:>10.4} {:>8.4}",
            g.model.as_str(),
            g.representation.as_str(),
            g.tau_ns,
            g.median,
            g.iqr
        );
    }
    if !result.skipped.is_empty() {
        println!("{} fold(s) skipped, see skipped.csv", result.skipped.len());
    }
}

fn oracle(n: usize, seed: u64) -> Outcome<()> {
    let checks = run_checks(n, seed).map_err(|e| Failure::Usage(e.into()))?;
    println!("{:<36} {:>12} {:>12}  result", "check", "value", "threshold");
    for c in &checks {
        println!(
            "{:<36} {:>12.3e} {:>12.3e}  {}",
            c.name,
            c.value,
            c.threshold,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Runtime(anyhow!("{failed} oracle check(s) failed")));
    }
    Ok(())
}
