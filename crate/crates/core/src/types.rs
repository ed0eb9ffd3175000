//! Sparse incomplete matrices, dataset splits, latent factor models and the
//! hyperparameter containers shared by the learners.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Upper (exclusive) bound of the uniform initialisation range of factors.
pub const INIT_UPPER: f64 = 0.1;

/// One known entry `r[row, col] = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry<T> {
    pub row: usize,
    pub col: usize,
    pub value: T,
}

impl<T> Entry<T> {
    pub fn new(row: usize, col: usize, value: T) -> Self {
        Entry { row, col, value }
    }
}

/// A high-dimensional incomplete matrix stored as its list of known entries.
///
/// Pairs that do not appear in `entries` are unknown, not zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    num_rows: usize,
    num_cols: usize,
    entries: Vec<Entry<T>>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds a matrix, rejecting out-of-range indices, duplicate pairs and
    /// non-finite values.
    pub fn new(num_rows: usize, num_cols: usize, entries: Vec<Entry<T>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.row >= num_rows || e.col >= num_cols {
                return Err(Error::invalid(format!(
                    "entry ({}, {}) outside {}x{} matrix",
                    e.row, e.col, num_rows, num_cols
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::invalid(format!(
                    "entry ({}, {}) has non-finite value",
                    e.row, e.col
                )));
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::invalid(format!(
                    "duplicate entry ({}, {})",
                    e.row, e.col
                )));
            }
        }
        Ok(SparseMatrix {
            num_rows,
            num_cols,
            entries,
        })
    }

    // Callers guarantee the invariants (subsets of an already validated matrix).
    pub(crate) fn from_trusted(num_rows: usize, num_cols: usize, entries: Vec<Entry<T>>) -> Self {
        SparseMatrix {
            num_rows,
            num_cols,
            entries,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn entries(&self) -> &[Entry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fraction of cells that are known.
    pub fn density(&self) -> f64 {
        self.entries.len() as f64 / (self.num_rows as f64 * self.num_cols as f64)
    }
}

/// Train / validation / test partition of a matrix's known entries.
#[derive(Debug, Clone)]
pub struct DatasetSplit<T> {
    pub train: SparseMatrix<T>,
    pub validation: SparseMatrix<T>,
    pub test: SparseMatrix<T>,
    pub split_seed: u64,
}

impl<T: Scalar> DatasetSplit<T> {
    pub const TRAIN_FRACTION: f64 = 0.7;
    pub const VALIDATION_FRACTION: f64 = 0.1;
    pub const TEST_FRACTION: f64 = 0.2;

    /// Shuffles the known entries once with `split_seed` and cuts them 70/10/20.
    ///
    /// Validation and test sizes are rounded down; the remainder goes to the
    /// training set. Training entries keep their shuffled order.
    pub fn new(source: &SparseMatrix<T>, split_seed: u64) -> Result<Self> {
        let n = source.len();
        let (n_train, n_val, n_test) = split_sizes(n);
        if n_val == 0 || n_test == 0 {
            return Err(Error::invalid(format!(
                "{n} known entries are too few for a non-empty validation and test split"
            )));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));

        let pick = |ids: &[usize]| {
            SparseMatrix::from_trusted(
                source.num_rows,
                source.num_cols,
                ids.iter().map(|&i| source.entries[i]).collect(),
            )
        };
        let split = DatasetSplit {
            train: pick(&order[..n_train]),
            validation: pick(&order[n_train..n_train + n_val]),
            test: pick(&order[n_train + n_val..]),
            split_seed,
        };
        debug_assert_eq!(split.train.len() + split.validation.len() + split.test.len(), n);
        Ok(split)
    }

    /// Builds a split from explicit parts (all three must share dimensions).
    pub fn from_parts(
        train: SparseMatrix<T>,
        validation: SparseMatrix<T>,
        test: SparseMatrix<T>,
    ) -> Result<Self> {
        let dims = (train.num_rows, train.num_cols);
        if (validation.num_rows, validation.num_cols) != dims
            || (test.num_rows, test.num_cols) != dims
        {
            return Err(Error::invalid("split parts have mismatched dimensions"));
        }
        Ok(DatasetSplit {
            train,
            validation,
            test,
            split_seed: 0,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.train.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.train.num_cols
    }
}

/// `(train, validation, test)` sizes for `n` known entries.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    // Integer arithmetic avoids 0.1 * n rounding below the exact tenth.
    let n_val = n / 10;
    let n_test = n / 5;
    (n - n_val - n_test, n_val, n_test)
}

/// Latent factors `X` (`num_rows x f`) and `Y` (`num_cols x f`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel<T> {
    x: Vec<T>,
    y: Vec<T>,
    num_rows: usize,
    num_cols: usize,
    f: usize,
}

impl<T: Scalar> FactorModel<T> {
    /// Wraps row-major factor payloads.
    pub fn from_parts(num_rows: usize, num_cols: usize, f: usize, x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if num_rows == 0 || num_cols == 0 || f == 0 {
            return Err(Error::invalid("factor model dimensions must be positive"));
        }
        if x.len() != num_rows * f || y.len() != num_cols * f {
            return Err(Error::invalid(format!(
                "factor payload sizes {}/{} do not match {}x{} with f = {}",
                x.len(),
                y.len(),
                num_rows,
                num_cols,
                f
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("factor values must be finite"));
        }
        Ok(FactorModel {
            x,
            y,
            num_rows,
            num_cols,
            f,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    /// Latent dimension.
    pub fn dim(&self) -> usize {
        self.f
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn x_row(&self, row: usize) -> &[T] {
        &self.x[row * self.f..(row + 1) * self.f]
    }

    pub fn y_row(&self, col: usize) -> &[T] {
        &self.y[col * self.f..(col + 1) * self.f]
    }

    /// Mutable views of `x_row` and `y_col` at once.
    pub fn factors_mut(&mut self, row: usize, col: usize) -> (&mut [T], &mut [T]) {
        let f = self.f;
        (
            &mut self.x[row * f..(row + 1) * f],
            &mut self.y[col * f..(col + 1) * f],
        )
    }

    /// Inner product `<x_row, y_col>`.
    pub fn predict(&self, row: usize, col: usize) -> Result<T> {
        if row >= self.num_rows || col >= self.num_cols {
            return Err(Error::invalid(format!(
                "index ({row}, {col}) outside {}x{} model",
                self.num_rows, self.num_cols
            )));
        }
        Ok(self.predict_unchecked(row, col))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, row: usize, col: usize) -> T {
        dot(self.x_row(row), self.y_row(col))
    }

    /// Whether this model can score `matrix` (identical node counts).
    pub fn fits(&self, matrix: &SparseMatrix<T>) -> bool {
        self.num_rows == matrix.num_rows() && self.num_cols == matrix.num_cols()
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
}

/// Draws `X` then `Y` row-major, each value independently uniform in `[0, 0.1)`.
pub fn init_factors<T: Scalar>(num_rows: usize, num_cols: usize, f: usize, seed: u64) -> Result<FactorModel<T>> {
    if num_rows == 0 || num_cols == 0 || f == 0 {
        return Err(Error::invalid(format!(
            "init_factors needs positive dimensions, got {num_rows}x{num_cols} with f = {f}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = T::lit(INIT_UPPER);
    let mut draw = |n: usize| -> Vec<T> {
        (0..n)
            .map(|_| loop {
                // Narrowing to f32 may round up onto the bound; redraw then.
                let v = T::from_f64_lossy(rng.random::<f64>() * INIT_UPPER);
                if v < upper {
                    break v;
                }
            })
            .collect()
    };
    let x = draw(num_rows * f);
    let y = draw(num_cols * f);
    FactorModel::from_parts(num_rows, num_cols, f, x, y)
}

/// Learning rate `eta`, regularisation `lambda` and their product `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams<T> {
    pub eta: T,
    pub lambda: T,
    pub phi: T,
}

impl<T: Scalar> Hyperparams<T> {
    pub fn new(eta: T, lambda: T) -> Result<Self> {
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::invalid(format!("learning rate must be positive, got {eta}")));
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::invalid(format!(
                "regularisation must be non-negative, got {lambda}"
            )));
        }
        Ok(Hyperparams {
            eta,
            lambda,
            phi: eta * lambda,
        })
    }

    /// Parameters already expressed in the folded frame, where gains carry
    /// the learning rate: `eta = 1`, `lambda = phi`.
    pub fn folded(phi: T) -> Result<Self> {
        Self::new(T::one(), phi)
    }
}

/// Proportional, integral and derivative gains.
///
/// Raw gains for the PID learner, learning-rate-folded gains for the fuzzy
/// learner; the owning optimizer decides which.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

impl<T: Scalar> PidGains<T> {
    pub fn new(kp: T, ki: T, kd: T) -> Result<Self> {
        if !(kp.is_finite() && ki.is_finite() && kd.is_finite()) {
            return Err(Error::invalid("PID gains must be finite"));
        }
        Ok(PidGains { kp, ki, kd })
    }

    /// `(1, 0, 0)`: the gains under which PID refinement is the identity.
    pub fn proportional_only() -> Self {
        PidGains {
            kp: T::one(),
            ki: T::zero(),
            kd: T::zero(),
        }
    }

    pub fn scaled(self, by: T) -> Self {
        PidGains {
            kp: self.kp * by,
            ki: self.ki * by,
            kd: self.kd * by,
        }
    }
}
