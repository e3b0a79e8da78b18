//! Command-line front end. Every subcommand takes `--config <file.toml>`
//! whose keys are the subcommand's flag names, either at top level or
//! under a `[<subcommand>]` table. Flags given on the command line win.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use noisyt::corrections::{train_corrected, CorrectionMethod};
use noisyt::deltas::{audit_theorem1, AuditConfig, DeltaReport, DEFAULT_BOUND_SLACK};
use noisyt::estimators::{dual_t_estimate, t_estimate, EstimatorKind};
use noisyt::model::split_train_val;
use noisyt::sweep::{self, run_trials, SweepConfig};
use noisyt::{plot, seed, Dataset, Error, GaussianSpec, LossAdapter, NetworkSpec, NoiseKind};
use noisyt::{TrainConfig, TrainedModel, TransitionMatrix};

#[derive(Parser)]
#[command(name = "noisyt", version, about = "Transition-matrix estimation under label noise")]
#[command(args_override_self = true)]
struct Cli {
    /// TOML file whose keys mirror the flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the two-Gaussian dataset with clean labels.
    Gen(GenArgs),
    /// Add noisy labels drawn from a transition matrix.
    Corrupt(CorruptArgs),
    /// Train a classifier on noisy labels.
    Train(TrainArgs),
    /// Estimate the transition matrix from a trained model.
    Estimate(EstimateArgs),
    /// Sample-size sweep of estimation error.
    Sweep(SweepArgs),
    /// Error-decomposition audit per sweep cell.
    Deltas(DeltasArgs),
    /// Train with forward or reweighting correction.
    TrainCorrected(TrainCorrectedArgs),
    /// Render a sweep CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mean0: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    mean1: f64,
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    #[arg(long, default_value_t = 0.5)]
    prior1: f64,
}

impl DataArgs {
    fn spec(&self) -> GaussianSpec {
        GaussianSpec {
            dim: self.dim,
            mean0: self.mean0,
            mean1: self.mean1,
            variance: self.variance,
            prior1: self.prior1,
        }
    }
}

#[derive(Args)]
struct NetArgs {
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "25,25")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 10.0)]
    lr_decay_factor: f64,
    #[arg(long, default_value_t = 50)]
    lr_decay_epoch: usize,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
}

impl NetArgs {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr_initial: self.lr,
            lr_decay_factor: self.lr_decay_factor,
            lr_decay_epoch: self.lr_decay_epoch,
            batch_size: self.batch_size,
            seed,
            val_fraction: self.val_fraction,
        }
    }

    fn network(&self, data: &Dataset, loss_adapter: LossAdapter) -> NetworkSpec {
        NetworkSpec {
            hidden_sizes: self.hidden.clone(),
            loss_adapter,
            ..NetworkSpec::synthetic(data.dim(), data.num_classes())
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    noise: NoiseKind,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the true transition matrix as JSON.
    #[arg(long)]
    matrix_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossKind {
    PlainCe,
    Forward,
    Reweight,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset with noisy labels; split into train and validation.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = LossKind::PlainCe)]
    loss: LossKind,
    /// Transition matrix (or estimation report) for corrected losses.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    out: PathBuf,
    /// Write the training split, the rows anchors should be searched over.
    #[arg(long)]
    train_split_out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Rows to search anchors over (normally the training split).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "dualt")]
    estimator: EstimatorKind,
    /// Ground-truth matrix JSON.
    #[arg(long, conflicts_with_all = ["noise", "eps"])]
    truth: Option<PathBuf>,
    /// Ground truth given as a noise kind and rate.
    #[arg(long, requires = "eps")]
    noise: Option<NoiseKind>,
    #[arg(long, requires = "noise")]
    eps: Option<f64>,
    /// Recorded in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepGrid {
    #[arg(long, default_value = "sym")]
    noise: NoiseKind,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "2000,5000,10000,20000,40000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
    /// Worker threads; NOISYT_JOBS overrides.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    net: NetArgs,
}

impl SweepGrid {
    fn config(&self, estimators: Vec<EstimatorKind>) -> Result<SweepConfig, Error> {
        Ok(SweepConfig {
            noise_kind: self.noise,
            eps: self.eps,
            sample_sizes: self.sizes.clone(),
            repeats: self.repeats,
            base_seed: self.seed,
            estimators,
            test_size: self.test_size,
            data: self.data.spec(),
            hidden_sizes: self.net.hidden.clone(),
            train: self.net.train_config(0),
            jobs: jobs(self.jobs)?,
        })
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: SweepGrid,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "t,dualt")]
    estimators: Vec<EstimatorKind>,
    /// Per-cell CSV; aggregates go to the `_agg.csv` sibling.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct DeltasArgs {
    #[command(flatten)]
    grid: SweepGrid,
    /// Monte Carlo draw size for the counting oracle; default 10x the
    /// training split.
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BOUND_SLACK)]
    bound_slack: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainCorrectedArgs {
    #[arg(long)]
    input: PathBuf,
    /// Transition matrix JSON or an estimation report.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value = "forward")]
    method: MethodArg,
    /// Clean-labelled test set for the reported accuracy.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Forward,
    Reweight,
}

#[derive(Args)]
struct PlotArgs {
    /// Per-cell sweep CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn jobs(flag: usize) -> Result<usize, Error> {
    match std::env::var("NOISYT_JOBS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&j| j > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("NOISYT_JOBS={v:?} is not a positive integer"))),
        Err(_) => Ok(flag.max(1)),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a bare matrix or pulls `estimated` out of an estimation report.
fn load_matrix(path: &Path) -> Result<TransitionMatrix, Error> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let value = match value.get("estimated") {
        Some(m) => m.clone(),
        None => value,
    };
    Ok(serde_json::from_value(value)?)
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    noisyt::generate(&a.data.spec(), a.n, a.seed)?.save_csv(&a.out)
}

fn cmd_corrupt(a: CorruptArgs) -> Result<(), Error> {
    let data = Dataset::load_csv(&a.input, Some(2))?;
    let t = a.noise.matrix(data.num_classes(), a.eps)?;
    noisyt::corrupt(&data, &t, a.seed)?.save_csv(&a.out)?;
    if let Some(p) = a.matrix_out {
        write_json(&p, &t)?;
    }
    Ok(())
}

fn loss_adapter(kind: LossKind, matrix: Option<&Path>) -> Result<LossAdapter, Error> {
    let need = || {
        matrix
            .ok_or_else(|| Error::InvalidConfig("--matrix is required for corrected losses".into()))
            .and_then(load_matrix)
    };
    Ok(match kind {
        LossKind::PlainCe => LossAdapter::PlainCe,
        LossKind::Forward => CorrectionMethod::Forward.adapter(need()?)?,
        LossKind::Reweight => CorrectionMethod::Reweight.adapter(need()?)?,
    })
}

fn cmd_train(a: TrainArgs) -> Result<(), Error> {
    let data = Dataset::load_csv(&a.input, None)?;
    let cfg = a.net.train_config(a.seed);
    let (tr, val) = split_train_val(&data, cfg.val_fraction, seed::derive(a.seed, 3))?;
    let spec = a.net.network(&data, loss_adapter(a.loss, a.matrix.as_deref())?);
    let model = noisyt::train(&tr, &val, &spec, &cfg)?;
    log::info!("best val accuracy {} at epoch {}", model.best_val_accuracy, model.best_epoch);
    write_json(&a.out, &model)?;
    if let Some(p) = a.train_split_out {
        tr.save_csv(&p)?;
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<(), Error> {
    let model: TrainedModel = serde_json::from_str(&std::fs::read_to_string(&a.model)?)?;
    let data = Dataset::load_csv(&a.input, Some(model.spec.num_classes))?;
    let mut report = match a.estimator {
        EstimatorKind::T => t_estimate(&model, &data)?,
        EstimatorKind::DualT => dual_t_estimate(&model, &data)?,
    }
    .with_seed(a.seed);
    let truth = match (&a.truth, a.noise, a.eps) {
        (Some(p), _, _) => Some(load_matrix(p)?),
        (None, Some(kind), Some(eps)) => Some(kind.matrix(model.spec.num_classes, eps)?),
        _ => None,
    };
    if let Some(t) = truth {
        report = report.with_ground_truth(&t)?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&a.out, &report)
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Error> {
    let cfg = a.grid.config(a.estimators)?;
    let result = sweep::run_sweep(&cfg)?;
    for f in &result.failures {
        eprintln!("cell n={} repeat={} failed: {}", f.n, f.repeat, f.message);
    }
    sweep::emit_csv(&result, &a.out)?;
    if let Some(p) = a.plot {
        plot::emit_plot(&result, &p)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DeltaRow<'a> {
    noise: NoiseKind,
    eps: f64,
    n: usize,
    repeat: usize,
    #[serde(flatten)]
    report: &'a DeltaReport,
}

/// The csv crate cannot flatten, so the summary row is spelled out.
#[derive(Serialize)]
struct DeltaCsvRow {
    noise: NoiseKind,
    eps: f64,
    n: usize,
    repeat: usize,
    seed: u64,
    delta1_mean: f64,
    delta2_mean: f64,
    delta3_mean: f64,
    eps_t: f64,
    eps_dt: f64,
    bound: f64,
    bound_holds: bool,
    dual_t_better: bool,
    assumption1_fraction: f64,
}

fn cmd_deltas(a: DeltasArgs) -> Result<(), Error> {
    let cfg = a.grid.config(vec![EstimatorKind::T, EstimatorKind::DualT])?;
    std::fs::create_dir_all(&a.out_dir)?;
    let trials = run_trials(&cfg)?;
    let mut summary = csv::Writer::from_path(a.out_dir.join("deltas_summary.csv"))?;
    let mut failed = None;
    for (n, repeat, trial) in trials {
        let trial = match trial {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cell n={n} repeat={repeat} failed: {e}");
                failed.get_or_insert(e);
                continue;
            }
        };
        let audit_cfg = AuditConfig {
            mc_samples: a.mc_samples.unwrap_or(10 * trial.train.len()),
            seed: seed::derive(trial.seed, 6),
            bound_slack: a.bound_slack,
        };
        let audit = audit_theorem1(&trial.model, &cfg.data, &trial.truth, &trial.train, audit_cfg)?;
        let row = DeltaRow { noise: cfg.noise_kind, eps: cfg.eps, n, repeat, report: &audit.report };
        let name = format!("deltas_{}_{}_n{}_r{}.json", cfg.noise_kind, cfg.eps, n, repeat);
        write_json(&a.out_dir.join(name), &row)?;
        let r = &audit.report;
        summary.serialize(DeltaCsvRow {
            noise: cfg.noise_kind,
            eps: cfg.eps,
            n,
            repeat,
            seed: r.seed,
            delta1_mean: r.delta1_mean,
            delta2_mean: r.delta2_mean,
            delta3_mean: r.delta3_mean,
            eps_t: r.eps_t,
            eps_dt: r.eps_dt,
            bound: r.bound,
            bound_holds: r.bound_holds,
            dual_t_better: r.dual_t_better,
            assumption1_fraction: r.assumption1_fraction,
        })?;
    }
    summary.flush()?;
    match failed {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct CorrectedMetrics {
    method: CorrectionMethod,
    best_val_accuracy: f64,
    best_epoch: usize,
    test_accuracy: Option<f64>,
}

fn cmd_train_corrected(a: TrainCorrectedArgs) -> Result<(), Error> {
    let data = Dataset::load_csv(&a.input, None)?;
    let t_hat = load_matrix(&a.matrix)?;
    let method = match a.method {
        MethodArg::Forward => CorrectionMethod::Forward,
        MethodArg::Reweight => CorrectionMethod::Reweight,
    };
    let cfg = a.net.train_config(a.seed);
    let (tr, val) = split_train_val(&data, cfg.val_fraction, seed::derive(a.seed, 3))?;
    let spec = a.net.network(&data, LossAdapter::PlainCe);
    let model = train_corrected(&tr, &val, &t_hat, method, &spec, &cfg)?;
    let test_accuracy = match &a.test {
        Some(p) => {
            let test = Dataset::load_csv(p, Some(data.num_classes()))?;
            Some(model.accuracy(&test, test.require_clean()?)?)
        }
        None => None,
    };
    write_json(&a.out, &model)?;
    let metrics = CorrectedMetrics {
        method,
        best_val_accuracy: model.best_val_accuracy,
        best_epoch: model.best_epoch,
        test_accuracy,
    };
    match a.metrics_out {
        Some(p) => write_json(&p, &metrics),
        None => {
            println!("{}", serde_json::to_string(&metrics)?);
            Ok(())
        }
    }
}

fn cmd_plot(a: PlotArgs) -> Result<(), Error> {
    plot::emit_plot(&sweep::read_csv(&a.input)?, &a.out)
}

/// Turns the config file into flag tokens for `subcommand`.
fn config_tokens(path: &Path, subcommand: &str) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let table: toml::Table = text.parse().map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    let mut push = |key: &str, value: &toml::Value| -> Result<(), String> {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(format!("config key {key}: unsupported value {other}")),
        };
        match value {
            toml::Value::Boolean(true) => out.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                out.push(flag.into());
                out.push(parts.join(",").into());
            }
            v => {
                out.push(flag.into());
                out.push(scalar(v)?.into());
            }
        }
        Ok(())
    };
    for (key, value) in &table {
        if let toml::Value::Table(_) = value {
            continue;
        }
        push(key, value)?;
    }
    if let Some(toml::Value::Table(sub)) = table.get(subcommand) {
        for (key, value) in sub {
            push(key, value)?;
        }
    }
    Ok(out)
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Gen(_) => "gen",
        Command::Corrupt(_) => "corrupt",
        Command::Train(_) => "train",
        Command::Estimate(_) => "estimate",
        Command::Sweep(_) => "sweep",
        Command::Deltas(_) => "deltas",
        Command::TrainCorrected(_) => "train-corrected",
        Command::Plot(_) => "plot",
    }
}

fn parse(args: Vec<OsString>) -> Result<Cli, ExitCode> {
    let fail = |e: clap::Error| {
        let _ = e.print();
        if e.use_stderr() {
            ExitCode::from(1)
        } else {
            ExitCode::SUCCESS
        }
    };
    // Required flags may live in the config file, so the first pass only
    // looks for the subcommand and the config path.
    let first = Cli::try_parse_from(&args);
    let (path, name) = match &first {
        Ok(cli) => match &cli.config {
            None => return first.map_err(fail),
            Some(p) => (p.clone(), subcommand_name(&cli.command)),
        },
        Err(_) => match prescan(&args) {
            Some(found) => found,
            None => return first.map_err(fail),
        },
    };
    let tokens = match config_tokens(&path, name) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Err(ExitCode::from(1));
        }
    };
    let pos = args.iter().position(|a| a == name).expect("subcommand present");
    let mut merged = args[..=pos].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&args[pos + 1..]);
    Cli::try_parse_from(merged).map_err(fail)
}

/// Finds `--config` and the subcommand without full validation.
fn prescan(args: &[OsString]) -> Option<(PathBuf, &'static str)> {
    const NAMES: [&str; 8] =
        ["gen", "corrupt", "train", "estimate", "sweep", "deltas", "train-corrected", "plot"];
    let mut path = None;
    let mut name = None;
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_str()?;
        if let Some(v) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(v));
        } else if s == "--config" {
            path = it.next().map(PathBuf::from);
        } else if name.is_none() {
            name = NAMES.iter().find(|n| **n == s).copied();
        }
    }
    Some((path?, name?))
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }
    fn log(&self, record: &log::Record) {
        eprintln!("[{}] {}", record.level(), record.args());
    }
    fn flush(&self) {}
}

fn main() -> ExitCode {
    let cli = match parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let _ = log::set_logger(&StderrLogger);
    log::set_max_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn });

    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Corrupt(a) => cmd_corrupt(a),
        Command::Train(a) => cmd_train(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Deltas(a) => cmd_deltas(a),
        Command::TrainCorrected(a) => cmd_train_corrected(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
