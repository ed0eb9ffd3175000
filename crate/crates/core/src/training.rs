//! Epoch loop, validation RMSE, the per-epoch improvement signal and fuzzy
//! re-scheduling, early stopping and timing.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{adapt, default_table, AdaptedParams, FuzzyTable};
use crate::optimizer::{fps_update, psl_update, sgd_update, ControllerBank, Diverged};
use crate::scalar::Scalar;
use crate::types::{init_factors, DatasetSplit, FactorModel, Hyperparams, PidGains, SparseMatrix};

/// Residuals per partial sum in [`compute_rmse`].
pub const RMSE_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Regularised SGD on the raw instance error.
    Sgd,
    /// SGD on the PID-refined error with fixed raw gains.
    Pid,
    /// Folded PID-refined SGD with fuzzy-scheduled `phi` and gains.
    Fps,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Sgd, OptimizerKind::Pid, OptimizerKind::Fps];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Pid => "pid",
            OptimizerKind::Fps => "fps",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "pid" | "psl" => Ok(OptimizerKind::Pid),
            "fps" => Ok(OptimizerKind::Fps),
            other => Err(Error::invalid(format!(
                "unknown optimizer '{other}' (expected sgd, pid or fps)"
            ))),
        }
    }
}

/// Everything [`train`] needs besides the data.
///
/// For [`OptimizerKind::Fps`] the hyperparameters and gains are read in the
/// folded frame: `hyperparams.phi` is the initial `phi` and `initial_gains`
/// are the initial learning-rate-folded gains.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub optimizer: OptimizerKind,
    pub f: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: T,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    pub hyperparams: Hyperparams<T>,
    pub initial_gains: PidGains<T>,
    pub fuzzy_table: FuzzyTable<T>,
}

impl<T: Scalar> TrainConfig<T> {
    /// Plain SGD with the given learning rate and regularisation.
    pub fn sgd(f: usize, eta: T, lambda: T) -> Result<Self> {
        Ok(TrainConfig {
            optimizer: OptimizerKind::Sgd,
            f,
            max_epochs: 1000,
            patience: 5,
            min_delta: T::lit(1e-5),
            seed: 0,
            shuffle_each_epoch: false,
            hyperparams: Hyperparams::new(eta, lambda)?,
            initial_gains: PidGains::proportional_only(),
            fuzzy_table: default_table(),
        })
    }

    /// Fixed-gain PID learner with raw gains.
    pub fn pid(f: usize, eta: T, lambda: T, gains: PidGains<T>) -> Result<Self> {
        Ok(TrainConfig {
            optimizer: OptimizerKind::Pid,
            initial_gains: gains,
            ..Self::sgd(f, eta, lambda)?
        })
    }

    /// Fuzzy learner starting from folded `initial` parameters.
    pub fn fps(f: usize, initial: AdaptedParams<T>, table: FuzzyTable<T>) -> Result<Self> {
        Ok(TrainConfig {
            optimizer: OptimizerKind::Fps,
            f,
            hyperparams: Hyperparams::folded(initial.phi)?,
            initial_gains: initial.gains,
            fuzzy_table: table,
            ..Self::sgd(f, T::one(), T::zero())?
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.f == 0 {
            return Err(Error::invalid("latent dimension f must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if !(self.min_delta >= T::zero()) || !self.min_delta.is_finite() {
            return Err(Error::invalid("min_delta must be a non-negative finite number"));
        }
        // Re-run the constructor checks on fields that may have been edited.
        Hyperparams::new(self.hyperparams.eta, self.hyperparams.lambda)?;
        PidGains::new(self.initial_gains.kp, self.initial_gains.ki, self.initial_gains.kd)?;
        if self.optimizer == OptimizerKind::Fps
            && !self.fuzzy_table.a_points.windows(2).all(|w| w[0] < w[1])
        {
            return Err(Error::invalid("fuzzy breakpoints must be strictly increasing"));
        }
        Ok(())
    }

    /// Parameters of the first epoch, expressed in the folded frame.
    pub fn initial_params(&self) -> AdaptedParams<T> {
        let h = &self.hyperparams;
        match self.optimizer {
            OptimizerKind::Sgd => AdaptedParams::new(h.phi, PidGains::proportional_only().scaled(h.eta)),
            OptimizerKind::Pid => AdaptedParams::new(h.phi, self.initial_gains.scaled(h.eta)),
            OptimizerKind::Fps => AdaptedParams::new(h.phi, self.initial_gains),
        }
    }
}

/// Metrics of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics<T> {
    pub epoch: usize,
    pub validation_rmse: T,
    /// Previous epoch's validation RMSE minus this one's; absent at epoch 0.
    pub a_t: Option<T>,
    /// Folded parameters in effect during this epoch.
    pub adapted: AdaptedParams<T>,
    pub update_seconds: f64,
    pub eval_seconds: f64,
}

impl<T> EpochMetrics<T> {
    pub fn elapsed_seconds(&self) -> f64 {
        self.update_seconds + self.eval_seconds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    pub per_epoch: Vec<EpochMetrics<T>>,
    pub best_epoch: usize,
    pub best_validation_rmse: T,
    /// Test RMSE of the snapshot taken at `best_epoch`.
    pub test_rmse: T,
    pub update_seconds: f64,
    pub eval_seconds: f64,
    pub total_seconds: f64,
}

impl<T: Scalar> TrainReport<T> {
    /// Number of epochs run until validation RMSE first reached
    /// `ratio * best_validation_rmse`.
    pub fn epochs_to_within(&self, ratio: f64) -> usize {
        let target = T::lit(ratio) * self.best_validation_rmse;
        self.per_epoch
            .iter()
            .position(|m| m.validation_rmse <= target)
            .map_or(self.per_epoch.len(), |i| i + 1)
    }

    /// Cumulative update and evaluation time through epoch `epoch`.
    pub fn seconds_through(&self, epoch: usize) -> (f64, f64) {
        self.per_epoch
            .iter()
            .take(epoch + 1)
            .fold((0.0, 0.0), |(u, e), m| (u + m.update_seconds, e + m.eval_seconds))
    }

    pub fn seconds_to_best(&self) -> f64 {
        let (u, e) = self.seconds_through(self.best_epoch);
        u + e
    }

    pub fn seconds_to_within(&self, ratio: f64) -> f64 {
        let (u, e) = self.seconds_through(self.epochs_to_within(ratio).saturating_sub(1));
        u + e
    }
}

/// Training failure; divergence carries the report up to the failing epoch.
#[derive(Debug)]
pub struct TrainError<T> {
    pub error: Error,
    pub partial: Option<TrainReport<T>>,
}

impl<T> fmt::Display for TrainError<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: fmt::Debug> std::error::Error for TrainError<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl<T> From<Error> for TrainError<T> {
    fn from(error: Error) -> Self {
        TrainError { error, partial: None }
    }
}

/// Root mean squared residual of `model` over `entries`.
///
/// Squared residuals are summed in fixed chunks of [`RMSE_CHUNK`] and the
/// chunk sums combined by a pairwise tree, so the result does not depend on
/// how many threads evaluate the chunks.
pub fn compute_rmse<T: Scalar>(model: &FactorModel<T>, entries: &SparseMatrix<T>) -> Result<T> {
    if entries.is_empty() {
        return Err(Error::invalid("RMSE over an empty entry set"));
    }
    if !model.fits(entries) {
        return Err(Error::invalid(format!(
            "model is {}x{} but entries are {}x{}",
            model.num_rows(),
            model.num_cols(),
            entries.num_rows(),
            entries.num_cols()
        )));
    }
    let partials: Vec<T> = entries
        .entries()
        .par_chunks(RMSE_CHUNK)
        .map(|chunk| {
            chunk.iter().fold(T::zero(), |acc, e| {
                let r = e.value - model.predict_unchecked(e.row, e.col);
                acc + r * r
            })
        })
        .collect();
    let sum = pairwise_sum(&partials);
    Ok((sum / T::from_usize(entries.len()).expect("count fits in float")).sqrt())
}

fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// One pass over `train` in storage order. See [`run_epoch_ordered`].
pub fn run_epoch<T: Scalar>(
    model: &mut FactorModel<T>,
    bank: &mut ControllerBank<T>,
    train: &SparseMatrix<T>,
    cfg: &TrainConfig<T>,
    current: &AdaptedParams<T>,
) -> Result<(), Diverged> {
    let order: Vec<usize> = (0..train.len()).collect();
    run_epoch_ordered(model, bank, train, cfg, current, &order)
}

/// One pass over the training entries at positions `order`.
///
/// `current` drives the fuzzy learner and is held for the whole pass; the
/// other learners read `cfg`. Controller `i` always belongs to entry `i`.
pub fn run_epoch_ordered<T: Scalar>(
    model: &mut FactorModel<T>,
    bank: &mut ControllerBank<T>,
    train: &SparseMatrix<T>,
    cfg: &TrainConfig<T>,
    current: &AdaptedParams<T>,
    order: &[usize],
) -> Result<(), Diverged> {
    assert_eq!(bank.len(), train.len(), "controller bank must match training set");
    let entries = train.entries();
    let h = &cfg.hyperparams;
    match cfg.optimizer {
        OptimizerKind::Sgd => {
            for &i in order {
                sgd_update(model, &entries[i], h)?;
            }
        }
        OptimizerKind::Pid => {
            for &i in order {
                psl_update(model, &entries[i], bank.get_mut(i), h, &cfg.initial_gains)?;
            }
        }
        OptimizerKind::Fps => {
            for &i in order {
                fps_update(model, &entries[i], bank.get_mut(i), current)?;
            }
        }
    }
    Ok(())
}

/// [`train_with`] without an epoch observer.
pub fn train<T: Scalar>(
    data: &DatasetSplit<T>,
    cfg: &TrainConfig<T>,
) -> Result<(FactorModel<T>, TrainReport<T>), TrainError<T>> {
    train_with(data, cfg, |_| {})
}

/// Trains a fresh model and returns the snapshot with the lowest validation
/// RMSE.
///
/// Epoch 0 uses the configured initial parameters. From epoch 1 on,
/// `A^t = RMSE^{t-1} - RMSE^t`, and the fuzzy learner schedules the next
/// epoch's parameters from it. Training stops after `patience` epochs
/// without an improvement larger than `min_delta`, or at `max_epochs`.
pub fn train_with<T: Scalar>(
    data: &DatasetSplit<T>,
    cfg: &TrainConfig<T>,
    mut on_epoch: impl FnMut(&EpochMetrics<T>),
) -> Result<(FactorModel<T>, TrainReport<T>), TrainError<T>> {
    cfg.validate()?;
    if data.train.is_empty() || data.validation.is_empty() || data.test.is_empty() {
        return Err(Error::invalid("train, validation and test sets must all be non-empty").into());
    }

    let mut model = init_factors(data.num_rows(), data.num_cols(), cfg.f, cfg.seed)?;
    let mut bank = ControllerBank::new(data.train.len());
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut shuffler = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffler.set_stream(1);

    let mut current = cfg.initial_params();
    let mut per_epoch: Vec<EpochMetrics<T>> = Vec::new();
    let mut best: Option<(usize, T, FactorModel<T>)> = None;
    let mut anchor = T::infinity();
    let mut stale = 0usize;
    let started = Instant::now();

    for epoch in 0..cfg.max_epochs {
        if cfg.shuffle_each_epoch {
            order.shuffle(&mut shuffler);
        }
        let t0 = Instant::now();
        let step = run_epoch_ordered(&mut model, &mut bank, &data.train, cfg, &current, &order);
        let update_seconds = t0.elapsed().as_secs_f64();
        if let Err(Diverged { row, col }) = step {
            let error = Error::Divergence { row, col, epoch };
            let partial = best
                .map(|(best_epoch, best_rmse, snapshot)| {
                    finish(per_epoch, best_epoch, best_rmse, &snapshot, data, started)
                })
                .transpose()?;
            return Err(TrainError { error, partial });
        }

        let t1 = Instant::now();
        let rmse = compute_rmse(&model, &data.validation)?;
        let eval_seconds = t1.elapsed().as_secs_f64();

        let a_t = per_epoch.last().map(|m| m.validation_rmse - rmse);
        let metrics = EpochMetrics {
            epoch,
            validation_rmse: rmse,
            a_t,
            adapted: current,
            update_seconds,
            eval_seconds,
        };
        on_epoch(&metrics);
        per_epoch.push(metrics);

        if best.as_ref().is_none_or(|(_, b, _)| rmse < *b) {
            best = Some((epoch, rmse, model.clone()));
        }
        if rmse < anchor - cfg.min_delta {
            anchor = rmse;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }

        if cfg.optimizer == OptimizerKind::Fps {
            if let Some(a_t) = a_t {
                current = adapt(a_t, &cfg.fuzzy_table)?;
            }
        }
    }

    let (best_epoch, best_rmse, snapshot) = best.expect("at least one epoch ran");
    let report = finish(per_epoch, best_epoch, best_rmse, &snapshot, data, started)?;
    Ok((snapshot, report))
}

fn finish<T: Scalar>(
    per_epoch: Vec<EpochMetrics<T>>,
    best_epoch: usize,
    best_validation_rmse: T,
    snapshot: &FactorModel<T>,
    data: &DatasetSplit<T>,
    started: Instant,
) -> Result<TrainReport<T>> {
    let test_rmse = compute_rmse(snapshot, &data.test)?;
    let update_seconds = per_epoch.iter().map(|m| m.update_seconds).sum();
    let eval_seconds = per_epoch.iter().map(|m| m.eval_seconds).sum();
    Ok(TrainReport {
        per_epoch,
        best_epoch,
        best_validation_rmse,
        test_rmse,
        update_seconds,
        eval_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::sgd_update;
    use crate::types::Entry;

    fn matrix(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> SparseMatrix<f64> {
        SparseMatrix::new(rows, cols, entries.iter().map(|&(r, c, v)| Entry::new(r, c, v)).collect()).unwrap()
    }

    #[test]
    fn rmse_examples() {
        let m = FactorModel::from_parts(2, 1, 1, vec![1.0, 2.0], vec![3.0]).unwrap();
        assert_eq!(compute_rmse(&m, &matrix(2, 1, &[(0, 0, 3.0), (1, 0, 6.0)])).unwrap(), 0.0);
        assert_eq!(compute_rmse(&m, &matrix(2, 1, &[(0, 0, 3.5)])).unwrap(), 0.5);
        let r = compute_rmse(&m, &matrix(2, 1, &[(0, 0, 6.0), (1, 0, 10.0)])).unwrap();
        assert!((r - 3.5355339059327378).abs() < 1e-15);
        assert!(compute_rmse(&m, &matrix(2, 1, &[])).is_err());
        assert!(compute_rmse(&m, &matrix(3, 1, &[(2, 0, 1.0)])).is_err());
    }

    #[test]
    fn optimizer_names_round_trip() {
        for k in OptimizerKind::ALL {
            assert_eq!(k.name().parse::<OptimizerKind>().unwrap(), k);
        }
        assert!("adam".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn null_update_epoch_leaves_model() {
        let train = matrix(3, 3, &[(0, 0, 1.0), (1, 2, 4.0), (2, 1, -3.0)]);
        let mut cfg = TrainConfig::fps(2, AdaptedParams::new(0.0, PidGains::new(0.0, 0.0, 0.0).unwrap()), default_table()).unwrap();
        cfg.seed = 4;
        let mut model = init_factors::<f64>(3, 3, 2, 4).unwrap();
        let before = model.clone();
        let mut bank = ControllerBank::new(3);
        run_epoch(&mut model, &mut bank, &train, &cfg, &cfg.initial_params()).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn single_entry_sgd_epoch_is_one_update() {
        let train = matrix(2, 2, &[(1, 0, 2.0)]);
        let cfg = TrainConfig::sgd(3, 0.1, 0.05).unwrap();
        let mut a = init_factors::<f64>(2, 2, 3, 9).unwrap();
        let mut b = a.clone();
        run_epoch(&mut a, &mut ControllerBank::new(1), &train, &cfg, &cfg.initial_params()).unwrap();
        sgd_update(&mut b, &train.entries()[0], &cfg.hyperparams).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fps_scalar_recurrence_oracle() {
        // Three entries on a 2x2 matrix, f = 1, two epochs of the folded rule.
        let data = [(0usize, 0usize, 1.0f64), (0, 1, 2.0), (1, 0, 0.5)];
        let (phi, kp, ki, kd) = (0.01, 0.2, 0.05, 0.1);
        let (mut x, mut y) = ([0.3f64, 0.6], [0.4f64, 0.2]);
        let mut integral = [0.0f64; 3];
        let mut prev = [0.0f64; 3];
        for _ in 0..2 {
            for (i, &(r, c, v)) in data.iter().enumerate() {
                let e = v - x[r] * y[c];
                integral[i] += e;
                let s = kp * e + ki * integral[i] + kd * (e - prev[i]);
                prev[i] = e;
                let (xo, yo) = (x[r], y[c]);
                x[r] = (1.0 - phi) * xo + s * yo;
                y[c] = (1.0 - phi) * yo + s * xo;
            }
        }

        let train = matrix(2, 2, &data);
        let params = AdaptedParams::new(phi, PidGains::new(kp, ki, kd).unwrap());
        let cfg = TrainConfig::fps(1, params, FuzzyTable::constant(params)).unwrap();
        let mut model = FactorModel::from_parts(2, 2, 1, vec![0.3, 0.6], vec![0.4, 0.2]).unwrap();
        let mut bank = ControllerBank::new(3);
        for _ in 0..2 {
            run_epoch(&mut model, &mut bank, &train, &cfg, &params).unwrap();
        }
        for k in 0..2 {
            assert!((model.x()[k] - x[k]).abs() < 1e-12);
            assert!((model.y()[k] - y[k]).abs() < 1e-12);
        }
    }

    fn rank_one_split() -> DatasetSplit<f64> {
        let u = [0.5, 1.0, 1.5, 2.0];
        let v = [1.0, 0.5, 2.0, 1.5];
        let entries = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .map(|(r, c)| Entry::new(r, c, u[r] * v[c]))
            .collect();
        DatasetSplit::new(&SparseMatrix::new(4, 4, entries).unwrap(), 5).unwrap()
    }

    #[test]
    fn rank_one_matrix_is_fitted_by_sgd() {
        let split = rank_one_split();
        assert_eq!(split.train.len(), 12);
        let mut cfg = TrainConfig::sgd(1, 0.05, 0.0).unwrap();
        cfg.max_epochs = 500;
        cfg.min_delta = 0.0;
        cfg.patience = 500;
        cfg.seed = 1;
        let (_, report) = train(&split, &cfg).unwrap();
        assert!(report.best_validation_rmse < 1e-3, "{}", report.best_validation_rmse);
        let rmse: Vec<f64> = report.per_epoch.iter().map(|m| m.validation_rmse).collect();
        let first_below = rmse.iter().position(|&r| r < 1e-3).unwrap();
        assert!(rmse[..=first_below].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_epoch_report() {
        let mut cfg = TrainConfig::sgd(2, 0.01, 0.0).unwrap();
        cfg.max_epochs = 1;
        let (_, report) = train(&rank_one_split(), &cfg).unwrap();
        assert_eq!(report.per_epoch.len(), 1);
        assert!(report.per_epoch[0].a_t.is_none());
        assert_eq!(report.best_epoch, 0);
    }

    #[test]
    fn fps_report_is_replayable() {
        let table = default_table::<f64>();
        let initial = AdaptedParams::new(0.00012, PidGains::new(0.005, 1e-6, 2e-4).unwrap());
        let mut cfg = TrainConfig::fps(2, initial, table).unwrap();
        cfg.max_epochs = 60;
        let (model, report) = train(&rank_one_split(), &cfg).unwrap();
        let epochs = &report.per_epoch;
        assert_eq!(epochs[0].adapted, initial);
        assert_eq!(epochs[1].adapted, initial);
        for w in epochs.windows(2) {
            let a_t = w[1].a_t.unwrap();
            assert_eq!(a_t, w[0].validation_rmse - w[1].validation_rmse);
        }
        for w in epochs[1..].windows(2) {
            assert_eq!(w[1].adapted, adapt(w[0].a_t.unwrap(), &table).unwrap());
        }
        for m in &epochs[2..] {
            assert!(m.adapted.phi >= table.phi_points[0] && m.adapted.phi <= table.phi_points[4]);
        }
        let min = epochs.iter().map(|m| m.validation_rmse).fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_validation_rmse, min);
        let split = rank_one_split();
        assert!((compute_rmse(&model, &split.test).unwrap() - report.test_rmse).abs() <= 1e-12);
    }

    #[test]
    fn early_stopping_bound() {
        let mut cfg = TrainConfig::sgd(2, 0.01, 0.5).unwrap();
        cfg.patience = 3;
        cfg.min_delta = 1e-3;
        let (_, report) = train(&rank_one_split(), &cfg).unwrap();
        assert!(report.per_epoch.len() < cfg.max_epochs);
        assert!(report.per_epoch.len() <= report.best_epoch + cfg.patience + 1);
    }

    #[test]
    fn divergence_returns_partial_report() {
        let mut cfg = TrainConfig::sgd(2, 50.0, 0.0).unwrap();
        cfg.max_epochs = 50;
        let err = train(&rank_one_split(), &cfg).unwrap_err();
        assert!(matches!(err.error, Error::Divergence { .. }), "{}", err.error);
    }

    #[test]
    fn degenerate_split_rejected() {
        let split = rank_one_split();
        let empty = SparseMatrix::new(4, 4, vec![]).unwrap();
        let bad = DatasetSplit::from_parts(split.train.clone(), empty, split.test.clone()).unwrap();
        let err = train(&bad, &TrainConfig::sgd(1, 0.01, 0.0).unwrap()).unwrap_err();
        assert!(matches!(err.error, Error::InvalidArgument(_)));
    }

    #[test]
    fn shuffled_runs_are_reproducible() {
        let mut cfg = TrainConfig::pid(2, 0.02, 0.01, PidGains::new(1.0, 0.01, 0.1).unwrap()).unwrap();
        cfg.shuffle_each_epoch = true;
        cfg.max_epochs = 20;
        let split = rank_one_split();
        let (a, ra) = train(&split, &cfg).unwrap();
        let (b, rb) = train(&split, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.best_validation_rmse, rb.best_validation_rmse);
    }
}
