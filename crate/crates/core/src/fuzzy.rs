//! Single-input fuzzy scheduler for the folded learner parameters.
//!
//! The input is the per-epoch validation RMSE improvement `A^t`. Five
//! breakpoints carry triangular membership functions with unit overlap, so
//! any input activates exactly two adjacent breakpoints; the crisp output is
//! the membership-weighted mix of the two matching table columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::PidGains;

pub const POINTS: usize = 5;

/// Breakpoints and the per-breakpoint values of `phi`, `kp`, `ki` and `kd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyTable<T> {
    pub a_points: [T; POINTS],
    pub phi_points: [T; POINTS],
    pub p_points: [T; POINTS],
    pub i_points: [T; POINTS],
    pub d_points: [T; POINTS],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    Increasing,
    Decreasing,
}

impl<T: Scalar> FuzzyTable<T> {
    /// Validated constructor: every value positive and finite, `a`, `phi`,
    /// `p` strictly increasing, `i`, `d` strictly decreasing.
    pub fn new(
        a_points: [T; POINTS],
        phi_points: [T; POINTS],
        p_points: [T; POINTS],
        i_points: [T; POINTS],
        d_points: [T; POINTS],
    ) -> Result<Self> {
        let table = FuzzyTable {
            a_points,
            phi_points,
            p_points,
            i_points,
            d_points,
        };
        table.validate()?;
        Ok(table)
    }

    /// A table whose outputs do not depend on the input: every column holds
    /// `params`. Breakpoints are the default ones. Skips monotonicity checks.
    pub fn constant(params: AdaptedParams<T>) -> Self {
        FuzzyTable {
            a_points: default_table::<T>().a_points,
            phi_points: [params.phi; POINTS],
            p_points: [params.gains.kp; POINTS],
            i_points: [params.gains.ki; POINTS],
            d_points: [params.gains.kd; POINTS],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let chains = [
            ("a_points", &self.a_points, Order::Increasing),
            ("phi_points", &self.phi_points, Order::Increasing),
            ("p_points", &self.p_points, Order::Increasing),
            ("i_points", &self.i_points, Order::Decreasing),
            ("d_points", &self.d_points, Order::Decreasing),
        ];
        for (name, values, order) in chains {
            if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > T::zero())) {
                return Err(Error::invalid(format!(
                    "fuzzy table {name} must hold positive finite values, found {v}"
                )));
            }
            for (k, w) in values.windows(2).enumerate() {
                let ok = match order {
                    Order::Increasing => w[0] < w[1],
                    Order::Decreasing => w[0] > w[1],
                };
                if !ok {
                    let (rel, dir) = match order {
                        Order::Increasing => ("<", "strictly increasing"),
                        Order::Decreasing => (">", "strictly decreasing"),
                    };
                    return Err(Error::invalid(format!(
                        "fuzzy table {name} must be {dir}: {name}[{}] = {} {rel} {name}[{}] = {} does not hold",
                        k + 1,
                        w[0],
                        k + 2,
                        w[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for FuzzyTable<T> {
    fn default() -> Self {
        default_table()
    }
}

/// Empirical table tuned on rating data with `f = 20`.
pub fn default_table<T: Scalar>() -> FuzzyTable<T> {
    let col = |v: [f64; POINTS]| v.map(T::lit);
    FuzzyTable {
        a_points: col([0.0001, 0.0002, 0.0003, 0.0004, 0.0005]),
        phi_points: col([0.00006, 0.00007, 0.00008, 0.00009, 0.0001]),
        p_points: col([0.004, 0.0045, 0.005, 0.0055, 0.006]),
        i_points: col([9e-7, 8e-7, 7e-7, 6e-7, 5e-7]),
        d_points: col([7.2e-6, 6.4e-6, 5.6e-6, 4.8e-6, 4e-6]),
    }
}

/// Degrees of the two active breakpoints `lower_index` and `lower_index + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipResult<T> {
    pub lower_index: usize,
    pub d_lower: T,
    pub d_upper: T,
}

/// `phi` and the learning-rate-folded PID gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptedParams<T> {
    pub phi: T,
    pub gains: PidGains<T>,
}

impl<T: Scalar> AdaptedParams<T> {
    pub fn new(phi: T, gains: PidGains<T>) -> Self {
        AdaptedParams { phi, gains }
    }
}

/// Triangular membership of `a_t` over the table's breakpoints.
///
/// Intervals are half-open `[A_i, A_{i+1})`. Inputs at or below `A_1` belong
/// fully to the first breakpoint and inputs at or above `A_5` fully to the
/// last one.
pub fn fuzzify<T: Scalar>(a_t: T, table: &FuzzyTable<T>) -> Result<MembershipResult<T>> {
    if !a_t.is_finite() {
        return Err(Error::invalid(format!("fuzzy input must be finite, got {a_t}")));
    }
    let a = &table.a_points;
    if a_t <= a[0] {
        return Ok(MembershipResult {
            lower_index: 0,
            d_lower: T::one(),
            d_upper: T::zero(),
        });
    }
    if a_t >= a[POINTS - 1] {
        return Ok(MembershipResult {
            lower_index: POINTS - 2,
            d_lower: T::zero(),
            d_upper: T::one(),
        });
    }
    let i = (0..POINTS - 1)
        .find(|&i| a[i] <= a_t && a_t < a[i + 1])
        .expect("breakpoints are strictly increasing");
    let width = a[i + 1] - a[i];
    Ok(MembershipResult {
        lower_index: i,
        d_lower: (a[i + 1] - a_t) / width,
        d_upper: (a_t - a[i]) / width,
    })
}

/// Membership-weighted mix of the two active table columns.
pub fn defuzzify<T: Scalar>(m: &MembershipResult<T>, table: &FuzzyTable<T>) -> AdaptedParams<T> {
    let i = m.lower_index;
    let mix = |col: &[T; POINTS]| blend(col[i], col[i + 1], m.d_upper);
    AdaptedParams {
        phi: mix(&table.phi_points),
        gains: PidGains {
            kp: mix(&table.p_points),
            ki: mix(&table.i_points),
            kd: mix(&table.d_points),
        },
    }
}

/// `d_lower * lo + d_upper * hi` with `d_lower = 1 - d_upper`, written as a
/// clamped lerp so the result is monotone in `d_upper` and never leaves
/// `[min(lo, hi), max(lo, hi)]` under rounding.
fn blend<T: Scalar>(lo: T, hi: T, d_upper: T) -> T {
    let v = lo + d_upper * (hi - lo);
    v.max(lo.min(hi)).min(lo.max(hi))
}

/// `defuzzify(fuzzify(a_t))`.
pub fn adapt<T: Scalar>(a_t: T, table: &FuzzyTable<T>) -> Result<AdaptedParams<T>> {
    Ok(defuzzify(&fuzzify(a_t, table)?, table))
}
