//! Command-line front end.
//!
//! Reports are JSON lines: a `config` record echoing the effective
//! configuration, one `epoch` record per epoch
//! (`epoch, val_rmse, a_t, phi, kp, ki, kd, update_secs, eval_secs`) and a
//! closing `summary` record. Exit codes: 0 success, 2 usage or
//! configuration, 3 parse or I/O, 4 numerical divergence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{format_table, run_benchmark, BenchCase, BenchRow, RowSummary};
use crate::config::{ConfigLayer, RunConfig};
use crate::data_io::{
    generate_synthetic, load_index, load_model, parse_dataset, save_index, save_model, write_csv,
    Dataset, DatasetFormat, FormatKind, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::training::{compute_rmse, train_with, EpochMetrics, OptimizerKind, TrainReport};
use crate::types::{DatasetSplit, SparseMatrix};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_DIVERGENCE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "fps-lfa", version, about = "Latent factor analysis with SGD, PID-SGD and fuzzy-PID SGD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write its per-epoch report and snapshot.
    Train(TrainArgs),
    /// Score a saved model on a dataset split.
    Evaluate(EvaluateArgs),
    /// Compare optimizers on the same split over several repeats.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic low-rank rating matrix as CSV.
    Generate(GenerateArgs),
}

/// Data and training options shared by `train` and `benchmark`.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Rating file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// movielens_dat, csv or tsv.
    #[arg(long)]
    pub format: Option<FormatKind>,
    /// The file starts with a header line.
    #[arg(long)]
    pub header: bool,
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Latent dimension.
    #[arg(long = "f")]
    pub f: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    /// Factor initialisation (and shuffle) seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Reshuffle the visit order every epoch.
    #[arg(long)]
    pub shuffle: bool,
}

impl CommonArgs {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            data: self.data.clone(),
            format: self.format,
            header: self.header.then_some(true),
            f: self.f,
            eta: self.eta,
            lambda: self.lambda,
            max_epochs: self.max_epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            seed: self.seed,
            split_seed: self.split_seed,
            shuffle: self.shuffle.then_some(true),
            ..Default::default()
        }
    }

    fn file_layer(&self) -> Result<ConfigLayer> {
        match &self.config {
            Some(path) => ConfigLayer::from_file(path),
            None => Ok(ConfigLayer::default()),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    /// Initial folded shrinkage (fps only).
    #[arg(long)]
    pub phi: Option<f64>,
    /// Proportional gain: raw for pid, folded initial value for fps.
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub ki: Option<f64>,
    #[arg(long)]
    pub kd: Option<f64>,
    /// Report path; the snapshot is written next to it with extension `.model`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EntrySet {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Model snapshot written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<FormatKind>,
    #[arg(long)]
    pub header: bool,
    /// Configuration file supplying data, format and split seed defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Which entries to score.
    #[arg(long, value_enum, default_value = "test")]
    pub set: EntrySet,
    /// Write `user,item,rating,prediction` rows here.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated optimizers to compare.
    #[arg(long, value_delimiter = ',', default_value = "sgd,pid,fps")]
    pub optimizers: Vec<OptimizerKind>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Learning rates tried for the sgd and pid baselines.
    #[arg(long, value_delimiter = ',')]
    pub grid_eta: Vec<f64>,
    /// Regularisation values tried for the sgd and pid baselines.
    #[arg(long, value_delimiter = ',')]
    pub grid_lambda: Vec<f64>,
    /// Optional JSON-lines record of the comparison.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (`user,item,rating` with header).
    #[arg(long)]
    pub output: PathBuf,
}

impl clap::ValueEnum for OptimizerKind {
    fn value_variants<'a>() -> &'a [Self] {
        &OptimizerKind::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

impl clap::ValueEnum for FormatKind {
    fn value_variants<'a>() -> &'a [Self] {
        &[FormatKind::MovielensDat, FormatKind::Csv, FormatKind::Tsv]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            FormatKind::MovielensDat => "movielens_dat",
            FormatKind::Csv => "csv",
            FormatKind::Tsv => "tsv",
        }))
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Io { .. } | Error::Format(_) => EXIT_PARSE,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::InvalidArgument(_) | Error::Config(_) => EXIT_CONFIG,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args).map(|outcome| {
            println!(
                "best validation RMSE {:.6} at epoch {}, test RMSE {:.6}; report {}",
                outcome.report.best_validation_rmse,
                outcome.report.best_epoch,
                outcome.report.test_rmse,
                args.output.display()
            );
        }),
        Command::Evaluate(args) => cmd_evaluate(args).map(|r| {
            println!("{}", serde_json::to_string(&r).expect("serialisable"));
        }),
        Command::Benchmark(args) => cmd_benchmark(args).map(|rows| print!("{}", format_table(&rows))),
        Command::Generate(args) => cmd_generate(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn ms(secs: f64) -> f64 {
    (secs * 1000.0).round() / 1000.0
}

#[derive(Serialize)]
struct ConfigRecord<'a> {
    record: &'static str,
    #[serde(flatten)]
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct EpochRecord {
    record: &'static str,
    epoch: usize,
    val_rmse: f64,
    a_t: Option<f64>,
    phi: f64,
    kp: f64,
    ki: f64,
    kd: f64,
    update_secs: f64,
    eval_secs: f64,
}

impl From<&EpochMetrics<f64>> for EpochRecord {
    fn from(m: &EpochMetrics<f64>) -> Self {
        EpochRecord {
            record: "epoch",
            epoch: m.epoch,
            val_rmse: m.validation_rmse,
            a_t: m.a_t,
            phi: m.adapted.phi,
            kp: m.adapted.gains.kp,
            ki: m.adapted.gains.ki,
            kd: m.adapted.gains.kd,
            update_secs: ms(m.update_seconds),
            eval_secs: ms(m.eval_seconds),
        }
    }
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    record: &'static str,
    status: &'a str,
    epochs: usize,
    best_epoch: Option<usize>,
    best_val_rmse: Option<f64>,
    test_rmse: Option<f64>,
    update_secs: f64,
    eval_secs: f64,
    total_secs: f64,
    error: Option<String>,
}

impl<'a> SummaryRecord<'a> {
    fn new(status: &'a str, report: Option<&TrainReport<f64>>, error: Option<String>) -> Self {
        SummaryRecord {
            record: "summary",
            status,
            epochs: report.map_or(0, |r| r.per_epoch.len()),
            best_epoch: report.map(|r| r.best_epoch),
            best_val_rmse: report.map(|r| r.best_validation_rmse),
            test_rmse: report.map(|r| r.test_rmse),
            update_secs: ms(report.map_or(0.0, |r| r.update_seconds)),
            eval_secs: ms(report.map_or(0.0, |r| r.eval_seconds)),
            total_secs: ms(report.map_or(0.0, |r| r.total_seconds)),
            error,
        }
    }
}

struct JsonLines {
    out: BufWriter<File>,
    path: PathBuf,
}

impl JsonLines {
    fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(JsonLines { out: BufWriter::new(file), path: path.to_path_buf() })
    }

    fn write(&mut self, record: &impl Serialize) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)
            .map_err(std::io::Error::from)
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn load_data(cfg: &RunConfig) -> Result<Dataset<f64>> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset given (use --data or `data` in the config file)".into()))?;
    parse_dataset(path, DatasetFormat::new(cfg.format, cfg.header))
}

/// Snapshot and identifier-table paths that accompany a report.
pub fn snapshot_paths(report: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        report.with_extension("model"),
        report.with_extension("rows"),
        report.with_extension("cols"),
    )
}

fn index_paths(model: &Path) -> (PathBuf, PathBuf) {
    (model.with_extension("rows"), model.with_extension("cols"))
}

/// Result of a successful `train` command.
#[derive(Debug)]
pub struct TrainOutcome {
    pub config: RunConfig,
    pub report: TrainReport<f64>,
    pub model_path: PathBuf,
}

/// Resolves the effective configuration of a `train` invocation.
pub fn train_config(args: &TrainArgs) -> Result<RunConfig> {
    let file = args.common.file_layer()?;
    let mut flags = args.common.layer();
    flags.optimizer = args.optimizer;
    let kind = flags.optimizer.or(file.optimizer).unwrap_or(OptimizerKind::Fps);
    let gains_given = args.kp.is_some() || args.ki.is_some() || args.kd.is_some();
    match kind {
        OptimizerKind::Sgd if gains_given || args.phi.is_some() => {
            return Err(Error::Config("--phi/--kp/--ki/--kd have no effect with --optimizer sgd".into()));
        }
        OptimizerKind::Pid if args.phi.is_some() => {
            return Err(Error::Config(
                "--phi applies to fps only; pid derives phi from --eta and --lambda".into(),
            ));
        }
        OptimizerKind::Pid => {
            flags.pid_kp = args.kp;
            flags.pid_ki = args.ki;
            flags.pid_kd = args.kd;
        }
        OptimizerKind::Fps => {
            flags.fps_phi = args.phi;
            flags.fps_kp = args.kp;
            flags.fps_ki = args.ki;
            flags.fps_kd = args.kd;
        }
        OptimizerKind::Sgd => {}
    }
    RunConfig::resolve(&file.merge(&flags))
}

/// Trains one model, writing the report to `args.output` and the best
/// snapshot (plus identifier tables) next to it.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainOutcome> {
    let config = train_config(args)?;
    let tcfg = config.train_config(config.optimizer)?;
    let dataset = load_data(&config)?;
    let split = DatasetSplit::new(&dataset.matrix, config.split_seed)?;
    log::info!(
        "{}x{} matrix, {} train / {} validation / {} test entries",
        dataset.matrix.num_rows(),
        dataset.matrix.num_cols(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );

    let mut out = JsonLines::create(&args.output)?;
    out.write(&ConfigRecord { record: "config", config: &config })?;
    let mut write_err = None;
    let result = train_with(&split, &tcfg, |m| {
        log::debug!("epoch {} val_rmse {:.6}", m.epoch, m.validation_rmse);
        if write_err.is_none() {
            write_err = out.write(&EpochRecord::from(m)).err();
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }

    match result {
        Ok((model, report)) => {
            let status = if report.per_epoch.len() < config.max_epochs { "converged" } else { "max_epochs" };
            out.write(&SummaryRecord::new(status, Some(&report), None))?;
            out.finish()?;
            let (model_path, rows_path, cols_path) = snapshot_paths(&args.output);
            save_model(&model, &model_path)?;
            save_index(&dataset.row_ids, rows_path)?;
            save_index(&dataset.col_ids, cols_path)?;
            Ok(TrainOutcome { config, report, model_path })
        }
        Err(failure) => {
            out.write(&SummaryRecord::new("diverged", failure.partial.as_ref(), Some(failure.error.to_string())))?;
            out.finish()?;
            Err(failure.error)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateResult {
    pub record: &'static str,
    pub set: &'static str,
    pub entries: usize,
    pub rmse: f64,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluateResult> {
    let file = match &args.config {
        Some(path) => ConfigLayer::from_file(path)?,
        None => ConfigLayer::default(),
    };
    let flags = ConfigLayer {
        data: args.data.clone(),
        format: args.format,
        header: args.header.then_some(true),
        split_seed: args.split_seed,
        ..Default::default()
    };
    let config = RunConfig::resolve(&file.merge(&flags))?;
    let model = load_model::<f64>(&args.model)?;
    let dataset = load_data(&config)?;
    if !model.fits(&dataset.matrix) {
        return Err(Error::Config(format!(
            "snapshot is {}x{} but the dataset is {}x{}",
            model.num_rows(),
            model.num_cols(),
            dataset.matrix.num_rows(),
            dataset.matrix.num_cols()
        )));
    }
    let (rows_path, cols_path) = index_paths(&args.model);
    let tables = if rows_path.exists() && cols_path.exists() {
        let (rows, cols) = (load_index(&rows_path)?, load_index(&cols_path)?);
        if rows != dataset.row_ids || cols != dataset.col_ids {
            return Err(Error::Config(
                "dataset identifiers differ from the ones the snapshot was trained on".into(),
            ));
        }
        Some((rows, cols))
    } else {
        None
    };

    let (name, selected): (&'static str, SparseMatrix<f64>) = match args.set {
        EntrySet::All => ("all", dataset.matrix.clone()),
        set => {
            let split = DatasetSplit::new(&dataset.matrix, config.split_seed)?;
            match set {
                EntrySet::Train => ("train", split.train),
                EntrySet::Validation => ("validation", split.validation),
                _ => ("test", split.test),
            }
        }
    };
    if selected.is_empty() {
        return Err(Error::invalid(format!("the {name} selection is empty")));
    }
    let rmse = compute_rmse(&model, &selected)?;

    if let Some(path) = &args.predictions {
        let mut text = String::from("user,item,rating,prediction\n");
        for e in selected.entries() {
            let p = model.predict(e.row, e.col)?;
            match &tables {
                Some((rows, cols)) => text.push_str(&format!("{},{},{:?},{:?}\n", rows[e.row], cols[e.col], e.value, p)),
                None => text.push_str(&format!("{},{},{:?},{:?}\n", e.row, e.col, e.value, p)),
            }
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(EvaluateResult { record: "evaluate", set: name, entries: selected.len(), rmse })
}

#[derive(Serialize)]
struct BenchRecord<'a> {
    record: &'static str,
    label: &'a str,
    summary: RowSummary,
    runs: &'a [crate::bench::RunStats],
}

/// Benchmark cases for the requested optimizers; baselines expand over the
/// `eta x lambda` grid.
pub fn benchmark_cases(config: &RunConfig, args: &BenchmarkArgs) -> Result<Vec<BenchCase<f64>>> {
    let etas = if args.grid_eta.is_empty() { vec![config.eta] } else { args.grid_eta.clone() };
    let lambdas = if args.grid_lambda.is_empty() { vec![config.lambda] } else { args.grid_lambda.clone() };
    let gridded = etas.len() * lambdas.len() > 1;
    let mut cases = Vec::new();
    for &kind in &args.optimizers {
        if kind == OptimizerKind::Fps {
            cases.push(BenchCase { label: kind.to_string(), config: config.train_config(kind)? });
            continue;
        }
        for &eta in &etas {
            for &lambda in &lambdas {
                let cfg = RunConfig { eta, lambda, ..config.clone() }.train_config(kind)?;
                let label = if gridded { format!("{kind}(eta={eta},lambda={lambda})") } else { kind.to_string() };
                cases.push(BenchCase { label, config: cfg });
            }
        }
    }
    if cases.len() < 2 {
        return Err(Error::Config("benchmark needs at least two optimizer configurations".into()));
    }
    Ok(cases)
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<Vec<BenchRow>> {
    let file = args.common.file_layer()?;
    let mut flags = args.common.layer();
    flags.repeats = args.repeats;
    let config = RunConfig::resolve(&file.merge(&flags))?;
    let cases = benchmark_cases(&config, args)?;
    let dataset = load_data(&config)?;
    let split = DatasetSplit::new(&dataset.matrix, config.split_seed)?;
    let rows = run_benchmark(&split, &cases, config.repeats).map_err(|f| f.error)?;
    if let Some(path) = &args.output {
        let mut out = JsonLines::create(path)?;
        out.write(&ConfigRecord { record: "config", config: &config })?;
        for row in &rows {
            out.write(&BenchRecord { record: "benchmark", label: &row.label, summary: row.summary(), runs: &row.runs })?;
        }
        out.finish()?;
    }
    Ok(rows)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = SyntheticSpec {
        num_rows: args.rows,
        num_cols: args.cols,
        rank: args.rank,
        density: args.density,
        noise_std: args.noise,
        seed: args.seed,
    };
    let (matrix, _) = generate_synthetic::<f64>(&spec)?;
    write_csv(&matrix, &args.output)
}
