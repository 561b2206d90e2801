//! Power-transform Fréchet mean on the simplex.
//!
//! For `alpha != 0` every row is raised part-wise to `alpha` and re-closed,
//! the transformed rows are averaged, the average is raised to `1/alpha` and
//! closed again. `alpha = 1` is the arithmetic mean of the closed rows and
//! `alpha -> 0` tends to the closed geometric mean, which is evaluated
//! directly at `alpha = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{closure, Composition};

/// Power parameter of the Fréchet mean, in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const ZERO: Alpha = Alpha(0.0);
    pub const ONE: Alpha = Alpha(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::AlphaOutOfRange(value));
        }
        // Normalise -0.0 so it compares and prints as zero.
        Ok(Alpha(if value == 0.0 { 0.0 } else { value }))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `0, 0.1, ..., 1` when zeros are present, otherwise `-1, -0.9, ..., 1`.
    pub fn default_grid(zeros_present: bool) -> Vec<Alpha> {
        let lo = if zeros_present { 0 } else { -10 };
        (lo..=10).map(|i| Alpha(i as f64 / 10.0)).collect()
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A Fréchet mean with the columns forced to zero by the geometric branch.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetMean {
    pub mean: Composition,
    /// Non-empty only for `alpha = 0` on rows with zero parts.
    pub zeroed_columns: Vec<usize>,
}

/// Fréchet mean of `rows` for the given `alpha`.
pub fn frechet_mean<R: AsRef<[f64]>>(rows: &[R], alpha: Alpha) -> Result<Composition> {
    frechet_mean_detailed(rows, alpha).map(|m| m.mean)
}

/// Like [`frechet_mean`], also reporting columns zeroed by the geometric branch.
///
/// At `alpha = 0` a zero part makes the geometric mean of that column zero;
/// the remaining columns are averaged geometrically and closed. If every
/// column contains a zero the result is [`Error::GeometricUndefined`].
pub fn frechet_mean_detailed<R: AsRef<[f64]>>(rows: &[R], alpha: Alpha) -> Result<FrechetMean> {
    let first = rows.first().ok_or_else(|| Error::EmptyInput("no rows to average".into()))?;
    let d = first.as_ref().len();
    if d == 0 {
        return Err(Error::EmptyInput("rows have no parts".into()));
    }
    let mut has_zero = false;
    for row in rows {
        let row = row.as_ref();
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        for (index, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::DegenerateInput(format!("non-finite part at index {index}")));
            }
            if v < 0.0 {
                return Err(Error::NegativeValue { index, value: v });
            }
            has_zero |= v == 0.0;
        }
    }
    let a = alpha.value();
    if a < 0.0 && has_zero {
        return Err(Error::AlphaZeroConflict { alpha: a });
    }
    if a == 0.0 {
        return geometric_mean(rows, d);
    }

    let n = rows.len() as f64;
    // Shifted running mean: identical rows average to themselves exactly.
    let mut base: Option<Vec<f64>> = None;
    let mut acc = vec![0.0; d];
    let mut transformed = vec![0.0; d];
    for row in rows {
        let row = row.as_ref();
        if a == 1.0 {
            transformed.copy_from_slice(row);
        } else {
            for (t, &x) in transformed.iter_mut().zip(row) {
                *t = x.powf(a);
            }
        }
        let s: f64 = transformed.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DegenerateInput("row cannot be closed".into()));
        }
        if a != 1.0 || (s - 1.0).abs() > 4.0 * f64::EPSILON * d as f64 {
            transformed.iter_mut().for_each(|t| *t /= s);
        }
        match &base {
            None => base = Some(transformed.clone()),
            Some(b) => {
                for ((acc, &t), &b) in acc.iter_mut().zip(&transformed).zip(b) {
                    *acc += t - b;
                }
            }
        }
    }
    let base = base.expect("at least one row");
    let mean: Vec<f64> = base.iter().zip(&acc).map(|(&b, &s)| b + s / n).collect();

    if a == 1.0 {
        return Ok(FrechetMean {
            mean: closure(&mean)?,
            zeroed_columns: Vec::new(),
        });
    }
    // m^(1/alpha) in log space; small alpha would otherwise underflow.
    let logs: Vec<f64> = mean.iter().map(|&m| m.ln() / a).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let powered: Vec<f64> = logs.iter().map(|&l| (l - peak).exp()).collect();
    Ok(FrechetMean {
        mean: closure(&powered)?,
        zeroed_columns: Vec::new(),
    })
}

fn geometric_mean<R: AsRef<[f64]>>(rows: &[R], d: usize) -> Result<FrechetMean> {
    let n = rows.len() as f64;
    let mut zeroed = vec![false; d];
    let mut log_sum = vec![0.0; d];
    for row in rows {
        for (j, &x) in row.as_ref().iter().enumerate() {
            if x == 0.0 {
                zeroed[j] = true;
            } else {
                log_sum[j] += x.ln();
            }
        }
    }
    let zeroed_columns: Vec<usize> = (0..d).filter(|&j| zeroed[j]).collect();
    if zeroed_columns.len() == d {
        return Err(Error::GeometricUndefined);
    }
    let logs: Vec<f64> = log_sum
        .iter()
        .zip(&zeroed)
        .map(|(&s, &z)| if z { f64::NEG_INFINITY } else { s / n })
        .collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let parts: Vec<f64> = logs.iter().map(|&l| (l - peak).exp()).collect();
    Ok(FrechetMean {
        mean: closure(&parts)?,
        zeroed_columns,
    })
}

/// Fréchet means along a grid of `alpha` values, in grid order.
pub fn frechet_trajectory<R: AsRef<[f64]>>(rows: &[R], alpha_grid: &[Alpha]) -> Result<Vec<Composition>> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidConfig("alpha grid is empty".into()));
    }
    alpha_grid
        .iter()
        .enumerate()
        .map(|(i, &a)| frechet_mean(rows, a).map_err(|e| e.context(format!("alpha grid index {i} (alpha = {a})"))))
        .collect()
}
