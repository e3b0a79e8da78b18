//! Sample-size sweeps with repeated seeded trials.
//!
//! Each `(n, repeat)` cell derives its own seed from the base seed, so a
//! cell's result never depends on which other cells run or in what order.
//! Cells may run concurrently; results are always emitted sorted by
//! `(n, repeat, estimator)`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{dual_t_estimate, t_estimate, EstimationReport, EstimatorKind};
use crate::matrix::TransitionMatrix;
use crate::model::{split_train_val, train, NetworkSpec, TrainConfig, TrainedModel};
use crate::noise::{corrupt, NoiseKind};
use crate::seed;
use crate::synth::{generate, GaussianSpec};

/// Sample sizes used when none are given.
pub const DEFAULT_SAMPLE_SIZES: [usize; 5] = [2_000, 5_000, 10_000, 20_000, 40_000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub noise_kind: NoiseKind,
    pub eps: f64,
    pub sample_sizes: Vec<usize>,
    pub repeats: usize,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub test_size: usize,
    pub data: GaussianSpec,
    pub hidden_sizes: Vec<usize>,
    pub train: TrainConfig,
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            noise_kind: NoiseKind::Sym,
            eps: 0.2,
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            repeats: 5,
            base_seed: 0,
            estimators: vec![EstimatorKind::T, EstimatorKind::DualT],
            test_size: 1000,
            data: GaussianSpec::default(),
            hidden_sizes: vec![25, 25],
            train: TrainConfig::default(),
            jobs: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::InvalidConfig("sample sizes must be positive".into()));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("sample sizes must be strictly ascending".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimators requested".into()));
        }
        if self.test_size == 0 {
            return Err(Error::InvalidConfig("test_size must be positive".into()));
        }
        self.data.validate()?;
        self.train.validate()?;
        self.truth().map(|_| ())
    }

    pub fn truth(&self) -> Result<TransitionMatrix> {
        self.noise_kind.matrix(2, self.eps)
    }

    pub fn network(&self) -> NetworkSpec {
        NetworkSpec { hidden_sizes: self.hidden_sizes.clone(), ..NetworkSpec::synthetic(self.data.dim, 2) }
    }

    fn sorted_estimators(&self) -> Vec<EstimatorKind> {
        let mut e = self.estimators.clone();
        e.sort();
        e.dedup();
        e
    }
}

/// Seed of cell `(n, repeat)`.
pub fn cell_seed(base_seed: u64, n: usize, repeat: usize) -> u64 {
    base_seed ^ seed::splitmix64(seed::splitmix64(n as u64) ^ repeat as u64)
}

/// Sub-stream indices under a cell seed.
mod stream {
    pub const GENERATE: u64 = 1;
    pub const CORRUPT: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const TEST: u64 = 5;
}

/// Everything produced by one sweep cell.
#[derive(Debug, Clone)]
pub struct Trial {
    pub n: usize,
    pub repeat: usize,
    pub seed: u64,
    pub truth: TransitionMatrix,
    pub train: Dataset,
    pub val: Dataset,
    /// Clean held-out data, `test_size` rows.
    pub test: Dataset,
    pub model: TrainedModel,
    /// Seed the model was trained with.
    pub train_seed: u64,
    pub train_seconds: f64,
    /// Estimation reports with the time each estimator took.
    pub reports: Vec<(EstimationReport, f64)>,
}

impl Trial {
    pub fn report(&self, kind: EstimatorKind) -> Option<&EstimationReport> {
        self.reports.iter().map(|(r, _)| r).find(|r| r.estimator == kind)
    }
}

/// Generates, corrupts, splits 80/20, trains, and runs each estimator on
/// the training split.
pub fn run_trial(cfg: &SweepConfig, n: usize, repeat: usize) -> Result<Trial> {
    let cell = cell_seed(cfg.base_seed, n, repeat);
    let truth = cfg.truth()?;
    let clean = generate(&cfg.data, n, seed::derive(cell, stream::GENERATE))?;
    let noisy = corrupt(&clean, &truth, seed::derive(cell, stream::CORRUPT))?;
    let (train_set, val_set) =
        split_train_val(&noisy, cfg.train.val_fraction, seed::derive(cell, stream::SPLIT))?;
    let test = generate(&cfg.data, cfg.test_size, seed::derive(cell, stream::TEST))?;

    let started = Instant::now();
    let train_cfg = TrainConfig { seed: seed::derive(cell, stream::TRAIN), ..cfg.train.clone() };
    let model = train(&train_set, &val_set, &cfg.network(), &train_cfg)?;
    let train_seconds = started.elapsed().as_secs_f64();

    let mut reports = Vec::new();
    for kind in cfg.sorted_estimators() {
        let started = Instant::now();
        let report = match kind {
            EstimatorKind::T => t_estimate(&model, &train_set)?,
            EstimatorKind::DualT => dual_t_estimate(&model, &train_set)?,
        };
        let report = report.with_ground_truth(&truth)?.with_seed(cell);
        reports.push((report, started.elapsed().as_secs_f64()));
    }
    Ok(Trial {
        n,
        repeat,
        seed: cell,
        truth,
        train: train_set,
        val: val_set,
        test,
        model,
        train_seed: train_cfg.seed,
        train_seconds,
        reports,
    })
}

/// One CSV row. `l1_error` is empty for a failed cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub noise: NoiseKind,
    pub eps: f64,
    pub n: usize,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub l1_error: Option<f64>,
    #[serde(rename = "wall_time_s")]
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub n: usize,
    pub repeat: usize,
    pub seed: u64,
    pub message: String,
}

/// Mean and sample standard deviation over successful repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub noise: NoiseKind,
    pub eps: f64,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub count: usize,
    pub mean_l1_error: f64,
    pub std_l1_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<CellRecord>,
    pub aggregates: Vec<Aggregate>,
    #[serde(default)]
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    pub fn from_records(records: Vec<CellRecord>) -> Self {
        let aggregates = aggregate(&records);
        SweepResult { records, aggregates, failures: Vec::new() }
    }

    pub fn aggregate_for(&self, n: usize, estimator: EstimatorKind) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == n && a.estimator == estimator)
    }
}

/// Groups by `(noise, eps, n, estimator)` in first-seen order.
pub fn aggregate(records: &[CellRecord]) -> Vec<Aggregate> {
    let mut groups: Vec<(Aggregate, Vec<f64>)> = Vec::new();
    for r in records {
        let pos = groups.iter().position(|(a, _)| {
            a.noise == r.noise && a.eps == r.eps && a.n == r.n && a.estimator == r.estimator
        });
        let idx = pos.unwrap_or_else(|| {
            groups.push((
                Aggregate {
                    noise: r.noise,
                    eps: r.eps,
                    n: r.n,
                    estimator: r.estimator,
                    count: 0,
                    mean_l1_error: f64::NAN,
                    std_l1_error: f64::NAN,
                },
                Vec::new(),
            ));
            groups.len() - 1
        });
        if let Some(e) = r.l1_error {
            groups[idx].1.push(e);
        }
    }
    groups
        .into_iter()
        .map(|(mut a, values)| {
            let (mean, std) = mean_std(&values);
            a.count = values.len();
            a.mean_l1_error = mean;
            a.std_l1_error = std;
            a
        })
        .collect()
}

/// Mean and sample (n-1) standard deviation; std is 0 for one value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Runs every `(n, repeat)` cell and returns the trials in canonical order.
/// Failed cells come back as errors rather than aborting the rest.
pub fn run_trials(cfg: &SweepConfig) -> Result<Vec<(usize, usize, Result<Trial>)>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..cfg.repeats).map(move |r| (n, r)))
        .collect();
    let out = pool(cfg.jobs)?.install(|| {
        cells
            .par_iter()
            .map(|&(n, r)| {
                log::info!("cell n={n} repeat={r}");
                (n, r, run_trial(cfg, n, r))
            })
            .collect()
    });
    Ok(out)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let trials = run_trials(cfg)?;
    Ok(collect_records(cfg, &trials))
}

/// Flattens trials into records; failed cells get one empty record per
/// estimator and a failure entry.
pub fn collect_records(cfg: &SweepConfig, trials: &[(usize, usize, Result<Trial>)]) -> SweepResult {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (n, repeat, trial) in trials {
        match trial {
            Ok(t) => {
                for (report, seconds) in &t.reports {
                    records.push(CellRecord {
                        noise: cfg.noise_kind,
                        eps: cfg.eps,
                        n: *n,
                        seed: t.seed,
                        estimator: report.estimator,
                        l1_error: report.l1_error,
                        wall_time_seconds: t.train_seconds + seconds,
                    });
                }
            }
            Err(e) => {
                let seed = cell_seed(cfg.base_seed, *n, *repeat);
                for estimator in cfg.sorted_estimators() {
                    records.push(CellRecord {
                        noise: cfg.noise_kind,
                        eps: cfg.eps,
                        n: *n,
                        seed,
                        estimator,
                        l1_error: None,
                        wall_time_seconds: 0.0,
                    });
                }
                failures.push(CellFailure { n: *n, repeat: *repeat, seed, message: e.to_string() });
            }
        }
    }
    let mut result = SweepResult::from_records(records);
    result.failures = failures;
    result
}

/// Sibling path `<stem>_agg.csv`.
pub fn aggregate_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    path.with_file_name(format!("{stem}_agg.csv"))
}

/// Writes per-cell records to `path` and aggregates to the `_agg.csv`
/// sibling.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if result.records.is_empty() {
        w.write_record(["noise", "eps", "n", "seed", "estimator", "l1_error", "wall_time_s"])?;
    }
    for r in &result.records {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(aggregate_path(path))?;
    if result.aggregates.is_empty() {
        w.write_record(["noise", "eps", "n", "estimator", "count", "mean_l1_error", "std_l1_error"])?;
    }
    for a in &result.aggregates {
        w.serialize(a)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads per-cell records and recomputes the aggregates.
pub fn read_csv(path: &Path) -> Result<SweepResult> {
    let mut r = csv::Reader::from_path(path)?;
    let records = r.deserialize().collect::<std::result::Result<Vec<CellRecord>, _>>()?;
    Ok(SweepResult::from_records(records))
}

pub fn read_aggregates(path: &Path) -> Result<Vec<Aggregate>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<Aggregate>, _>>()?)
}
