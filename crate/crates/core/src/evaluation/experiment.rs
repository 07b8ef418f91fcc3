use super::cache::QuenchCache;
use super::config::{ExperimentConfig, ModelFamily};
use super::fold::{FoldRunner, ModelOutcome, PreparedFold, Representation};
use crate::data::{load_csv, stratified_splits, Fold, TabularDataset};
use crate::ml::MetricsReport;
use crate::util::{median, quantile};
use crate::{Error, Result};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub const METRICS: [&str; 6] = ["accuracy_balanced", "accuracy_plain", "precision", "recall", "f1", "auc"];

const FOLD_COLUMNS: [&str; 6] = ["dataset", "model", "representation", "tau_ns", "repeat", "fold"];

/// One row of `folds.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub dataset: String,
    pub model: ModelFamily,
    pub representation: Representation,
    pub tau_ns: f64,
    pub repeat: usize,
    pub fold: usize,
    pub metrics: MetricsReport,
}

impl FoldRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        let m = &self.metrics;
        match name {
            "accuracy_balanced" => Some(m.accuracy),
            "accuracy_plain" => Some(m.accuracy_plain),
            "precision" => Some(m.precision),
            "recall" => Some(m.recall),
            "f1" => Some(m.f1),
            "auc" => m.auc,
            _ => None,
        }
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.dataset.clone(),
            self.model.as_str().to_string(),
            self.representation.as_str().to_string(),
            self.tau_ns.to_string(),
            self.repeat.to_string(),
            self.fold.to_string(),
        ];
        f.extend(METRICS.iter().map(|m| self.metric(m).map_or(String::new(), |v| v.to_string())));
        f
    }

    fn from_fields(f: &[&str], line: usize) -> Result<Self> {
        if f.len() < 12 {
            return Err(Error::parse(line, "too few fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(line, format!("bad number `{s}`")));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(line, format!("bad index `{s}`")));
        Ok(Self {
            dataset: f[0].to_string(),
            model: f[1].parse().map_err(|_| Error::parse(line, "bad model"))?,
            representation: f[2].parse().map_err(|_| Error::parse(line, "bad representation"))?,
            tau_ns: num(f[3])?,
            repeat: idx(f[4])?,
            fold: idx(f[5])?,
            metrics: MetricsReport {
                accuracy: num(f[6])?,
                accuracy_plain: num(f[7])?,
                precision: num(f[8])?,
                recall: num(f[9])?,
                f1: num(f[10])?,
                auc: if f[11].is_empty() { None } else { Some(num(f[11])?) },
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFold {
    pub repeat: usize,
    pub fold: usize,
    pub reason: String,
}

/// Distribution of one metric over folds for one (model, representation, tau).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub model: ModelFamily,
    pub representation: Representation,
    pub tau_ns: f64,
    pub metric: &'static str,
    pub scores: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub dataset: String,
    pub records: Vec<FoldRecord>,
    pub summary: Vec<GroupSummary>,
    pub skipped: Vec<SkippedFold>,
}

impl SweepResult {
    pub fn group(&self, model: ModelFamily, rep: Representation, tau_ns: f64, metric: &str) -> Option<&GroupSummary> {
        self.summary
            .iter()
            .find(|g| g.model == model && g.representation == rep && g.tau_ns == tau_ns && g.metric == metric)
    }
}

/// Groups records by (model, representation, tau) in first-seen order.
pub fn summarize(records: &[FoldRecord]) -> Vec<GroupSummary> {
    let mut order: Vec<(ModelFamily, Representation, u64)> = Vec::new();
    let mut groups: HashMap<(ModelFamily, Representation, u64), Vec<&FoldRecord>> = HashMap::new();
    for r in records {
        let key = (r.model, r.representation, r.tau_ns.to_bits());
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(&key).expect("inserted").push(r);
    }
    let mut out = Vec::new();
    for key in order {
        let rows = &groups[&key];
        for metric in METRICS {
            let scores: Vec<f64> = rows.iter().filter_map(|r| r.metric(metric)).collect();
            if scores.is_empty() {
                continue;
            }
            let (q1, q3) = (quantile(&scores, 0.25), quantile(&scores, 0.75));
            out.push(GroupSummary {
                model: key.0,
                representation: key.1,
                tau_ns: f64::from_bits(key.2),
                metric,
                median: median(&scores),
                q1,
                q3,
                iqr: q3 - q1,
                min: scores.iter().copied().fold(f64::INFINITY, f64::min),
                max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                scores,
            });
        }
    }
    out
}

fn fold_header() -> Vec<&'static str> {
    FOLD_COLUMNS.iter().chain(METRICS.iter()).copied().collect()
}

pub fn write_folds_csv<W: Write>(records: &[FoldRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(fold_header())?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|e| Error::io("folds.csv", e))?;
    Ok(())
}

pub fn read_folds_csv(path: impl AsRef<Path>) -> Result<Vec<FoldRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_folds_csv(file)
}

/// Reads records written by [`write_folds_csv`]; the header must match.
pub fn parse_folds_csv<R: Read>(reader: R) -> Result<Vec<FoldRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != fold_header() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected folds.csv header `{}`", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let fields: Vec<&str> = rec.iter().collect();
        out.push(FoldRecord::from_fields(&fields, i + 2)?);
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(dataset: &str, summary: &[GroupSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset", "model", "representation", "tau_ns", "metric", "n", "median", "q1", "q3", "iqr", "min", "max",
    ])?;
    for g in summary {
        w.write_record([
            dataset.to_string(),
            g.model.as_str().to_string(),
            g.representation.as_str().to_string(),
            g.tau_ns.to_string(),
            g.metric.to_string(),
            g.scores.len().to_string(),
            g.median.to_string(),
            g.q1.to_string(),
            g.q3.to_string(),
            g.iqr.to_string(),
            g.min.to_string(),
            g.max.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("summary.csv", e))?;
    Ok(())
}

/// Append-only record of finished cells, used to resume interrupted runs.
struct Ledger {
    file: Option<Mutex<File>>,
    done: Mutex<Vec<(FoldRecord, String)>>,
    skipped: Mutex<Vec<SkippedFold>>,
}

const LEDGER_FILE: &str = "ledger.csv";
const LEDGER_KEY_FILE: &str = "ledger.key";

impl Ledger {
    fn memory() -> Self {
        Self {
            file: None,
            done: Mutex::new(Vec::new()),
            skipped: Mutex::new(Vec::new()),
        }
    }

    fn open(dir: &Path, identity: &str) -> Result<Self> {
        let key_path = dir.join(LEDGER_KEY_FILE);
        let path = dir.join(LEDGER_FILE);
        match std::fs::read_to_string(&key_path) {
            Ok(existing) if existing.trim() != identity => {
                return Err(Error::Config(format!(
                    "{} holds results of a different configuration; remove it or use another output directory",
                    dir.display()
                )))
            }
            Ok(_) => {}
            Err(_) => {
                let _ = std::fs::remove_file(&path);
                std::fs::write(&key_path, format!("{identity}\n")).map_err(|e| Error::io(&key_path, e))?;
            }
        }
        let mut done = Vec::new();
        let mut skipped = Vec::new();
        let text = std::fs::read_to_string(&path).unwrap_or_default();
        // an interrupted append may leave a partial last line
        let complete = &text[..text.rfind('\n').map_or(0, |i| i + 1)];
        if complete.len() != text.len() {
            let f = OpenOptions::new().write(true).open(&path).map_err(|e| Error::io(&path, e))?;
            f.set_len(complete.len() as u64).map_err(|e| Error::io(&path, e))?;
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(complete.as_bytes());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let f: Vec<&str> = rec.iter().collect();
            match f.first().copied() {
                Some("done") if f.len() == 15 => done.push((FoldRecord::from_fields(&f[1..13], i + 1)?, f[13].to_string())),
                Some("skipped") if f.len() == 15 => skipped.push(SkippedFold {
                    repeat: f[5].parse().map_err(|_| Error::parse(i + 1, "bad repeat"))?,
                    fold: f[6].parse().map_err(|_| Error::parse(i + 1, "bad fold"))?,
                    reason: f[14].to_string(),
                }),
                _ => return Err(Error::parse(i + 1, format!("unreadable ledger line in {}", path.display()))),
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            file: Some(Mutex::new(file)),
            done: Mutex::new(done),
            skipped: Mutex::new(skipped),
        })
    }

    fn append(&self, lines: &[Vec<String>]) -> Result<()> {
        if let Some(file) = &self.file {
            let mut w = csv::Writer::from_writer(Vec::new());
            for l in lines {
                w.write_record(l)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
            let mut f = file.lock().expect("ledger lock");
            f.write_all(&bytes).map_err(|e| Error::io(LEDGER_FILE, e))?;
            f.flush().map_err(|e| Error::io(LEDGER_FILE, e))?;
        }
        Ok(())
    }

    fn record_cell(&self, records: Vec<(FoldRecord, String)>) -> Result<()> {
        let lines: Vec<Vec<String>> = records
            .iter()
            .map(|(r, params)| {
                let mut l = vec!["done".to_string()];
                l.extend(r.fields());
                l.push(params.clone());
                l.push(String::new());
                l
            })
            .collect();
        self.append(&lines)?;
        self.done.lock().expect("ledger lock").extend(records);
        Ok(())
    }

    fn record_skip(&self, dataset: &str, skip: SkippedFold) -> Result<()> {
        let mut l = vec!["skipped".to_string(), dataset.to_string(), String::new(), String::new(), String::new()];
        l.push(skip.repeat.to_string());
        l.push(skip.fold.to_string());
        l.extend(std::iter::repeat_n(String::new(), 7));
        l.push(skip.reason.clone());
        self.append(&[l])?;
        self.skipped.lock().expect("ledger lock").push(skip);
        Ok(())
    }

    fn is_skipped(&self, fold: &Fold) -> bool {
        self.skipped
            .lock()
            .expect("ledger lock")
            .iter()
            .any(|s| s.repeat == fold.repeat && s.fold == fold.fold)
    }

    /// Cells (repeat, fold, tau bits) holding `expected` records.
    fn complete_cells(&self, expected: usize) -> HashSet<(usize, usize, u64)> {
        let mut counts: HashMap<(usize, usize, u64), HashSet<(ModelFamily, Representation)>> = HashMap::new();
        for (r, _) in self.done.lock().expect("ledger lock").iter() {
            counts
                .entry((r.repeat, r.fold, r.tau_ns.to_bits()))
                .or_default()
                .insert((r.model, r.representation));
        }
        counts.into_iter().filter(|(_, v)| v.len() == expected).map(|(k, _)| k).collect()
    }
}

fn dataset_digest(data: &TabularDataset) -> String {
    let mut h = Sha256::new();
    for name in data.column_names() {
        h.update(name.as_bytes());
        h.update([0]);
    }
    for v in data.values() {
        h.update(v.to_bits().to_le_bytes());
    }
    for m in data.missing_mask() {
        h.update([u8::from(*m)]);
    }
    h.update(data.labels());
    hex::encode(h.finalize())
}

fn run_identity(config: &ExperimentConfig, data_digest: &str) -> String {
    let mut c = config.clone();
    c.output = Default::default();
    let mut h = Sha256::new();
    h.update(c.to_toml().as_bytes());
    h.update(data_digest.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Serialize)]
struct Provenance<'a> {
    version: &'static str,
    dataset_sha256: String,
    n_rows: usize,
    n_cols: usize,
    n_folds: usize,
    n_skipped: usize,
    config: &'a ExperimentConfig,
}

/// Loads the configured dataset and runs [`run_experiment_on`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let data = load_csv(&config.dataset.path, &config.dataset.label_column)?;
    run_experiment_on(config, &data, Some(&config.output.out_dir))
}

/// Repeated stratified CV over every anneal time in the configuration.
///
/// With `out_dir`, writes `folds.csv`, `summary.csv`, `skipped.csv`,
/// `provenance.toml` and the resume ledger there; cells already in the ledger
/// are not recomputed.
pub fn run_experiment_on(config: &ExperimentConfig, data: &TabularDataset, out_dir: Option<&Path>) -> Result<SweepResult> {
    let dataset = config.dataset_name();
    let digest = dataset_digest(data);
    let ledger = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Ledger::open(dir, &run_identity(config, &digest))?
        }
        None => Ledger::memory(),
    };
    let plan = stratified_splits(data.labels(), config.cv.n_splits, config.cv.n_repeats, config.cv.seed)?;
    let cache = QuenchCache::from_env_or(config.output.cache_dir.as_deref())?;
    let taus = &config.quench.tau_list;
    let per_cell = config.models.families.len() * 2;
    let complete = ledger.complete_cells(per_cell);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = config.output.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;

    let process = |fold: &Fold| -> Result<()> {
        if ledger.is_skipped(fold) {
            return Ok(());
        }
        let pending: Vec<f64> = taus
            .iter()
            .copied()
            .filter(|t| !complete.contains(&(fold.repeat, fold.fold, t.to_bits())))
            .collect();
        if pending.is_empty() {
            return Ok(());
        }
        let runner = match FoldRunner::prepare(config, data, fold)? {
            PreparedFold::Ready(r) => r,
            PreparedFold::Skipped(reason) => {
                info!("repeat {} fold {} skipped: {reason}", fold.repeat, fold.fold);
                return ledger.record_skip(
                    &dataset,
                    SkippedFold {
                        repeat: fold.repeat,
                        fold: fold.fold,
                        reason,
                    },
                );
            }
        };
        let raw = runner.raw()?;
        for tau in pending {
            let mapped = runner.mapped(tau, &cache)?;
            let to_record = |o: &ModelOutcome| {
                (
                    FoldRecord {
                        dataset: dataset.clone(),
                        model: o.family,
                        representation: o.representation,
                        tau_ns: tau,
                        repeat: fold.repeat,
                        fold: fold.fold,
                        metrics: o.metrics,
                    },
                    o.params.clone(),
                )
            };
            ledger.record_cell(raw.iter().chain(&mapped).map(to_record).collect())?;
            info!("repeat {} fold {} tau {tau} ns done", fold.repeat, fold.fold);
        }
        Ok(())
    };
    pool.install(|| plan.folds.par_iter().map(process).collect::<Result<Vec<()>>>())?;

    let tau_rank = |t: f64| taus.iter().position(|&x| x.to_bits() == t.to_bits()).unwrap_or(usize::MAX);
    let family_rank = |f: ModelFamily| config.models.families.iter().position(|&x| x == f).unwrap_or(usize::MAX);
    let mut records: Vec<FoldRecord> = ledger
        .done
        .into_inner()
        .expect("ledger lock")
        .into_iter()
        .map(|(r, _)| r)
        .filter(|r| tau_rank(r.tau_ns) != usize::MAX)
        .collect();
    records.sort_by_key(|r| (tau_rank(r.tau_ns), r.repeat, r.fold, family_rank(r.model), r.representation));
    records.dedup_by_key(|r| (r.tau_ns.to_bits(), r.repeat, r.fold, r.model, r.representation));
    let mut skipped = ledger.skipped.into_inner().expect("ledger lock");
    skipped.sort_by_key(|s| (s.repeat, s.fold));
    let summary = summarize(&records);

    if let Some(dir) = out_dir {
        write_outputs(dir, config, data, &digest, &dataset, &records, &summary, &skipped, plan.folds.len())?;
    }
    Ok(SweepResult {
        dataset,
        records,
        summary,
        skipped,
    })
}

#[allow(clippy::too_many_arguments)]
fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    data: &TabularDataset,
    digest: &str,
    dataset: &str,
    records: &[FoldRecord],
    summary: &[GroupSummary],
    skipped: &[SkippedFold],
    n_folds: usize,
) -> Result<()> {
    let create = |name: &str| -> Result<(File, PathBuf)> {
        let p = dir.join(name);
        Ok((File::create(&p).map_err(|e| Error::io(&p, e))?, p))
    };
    write_folds_csv(records, create("folds.csv")?.0)?;
    write_summary_csv(dataset, summary, create("summary.csv")?.0)?;
    let (f, _) = create("skipped.csv")?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["repeat", "fold", "reason"])?;
    for s in skipped {
        w.write_record([s.repeat.to_string(), s.fold.to_string(), s.reason.clone()])?;
    }
    w.flush().map_err(|e| Error::io("skipped.csv", e))?;
    let prov = Provenance {
        version: env!("CARGO_PKG_VERSION"),
        dataset_sha256: digest.to_string(),
        n_rows: data.n_rows(),
        n_cols: data.n_cols(),
        n_folds,
        n_skipped: skipped.len(),
        config,
    };
    let text = toml::to_string(&prov).map_err(|e| Error::Config(e.to_string()))?;
    let (mut f, p) = create("provenance.toml")?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(p, e))?;
    Ok(())
}
