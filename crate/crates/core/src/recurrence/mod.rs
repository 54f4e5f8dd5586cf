//! Recurrence plots, recurrence quantification and recurrence networks.

mod network;
mod rqa;

pub use network::{recurrence_network, rn_metrics, RnSummary};
pub use rqa::{rqa, RqaOptions, RqaSummary};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecurrenceError {
    #[error("series contains missing or non-finite values (first at row {row})")]
    MissingValues { row: usize },
    #[error("target recurrence rate {target} is unachievable for this series")]
    Unachievable { target: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    #[default]
    Euclidean,
    Maximum,
    Manhattan,
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::Maximum => diffs.fold(0.0, f64::max),
            Norm::Manhattan => diffs.sum(),
        }
    }
}

/// Symmetric binary `T×T` matrix with a unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecurrenceRepr", into = "RecurrenceRepr")]
pub struct RecurrenceMatrix {
    t: usize,
    bits: Vec<bool>,
    pub epsilon: f64,
    pub norm: Norm,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecurrenceRepr {
    epsilon: f64,
    norm: Norm,
    r: Vec<Vec<u8>>,
}

impl TryFrom<RecurrenceRepr> for RecurrenceMatrix {
    type Error = RecurrenceError;

    fn try_from(repr: RecurrenceRepr) -> Result<Self, Self::Error> {
        let rows: Vec<Vec<bool>> = repr.r.iter().map(|r| r.iter().map(|&v| v != 0).collect()).collect();
        RecurrenceMatrix::from_rows(&rows, repr.epsilon, repr.norm)
    }
}

impl From<RecurrenceMatrix> for RecurrenceRepr {
    fn from(m: RecurrenceMatrix) -> Self {
        let r = (0..m.t).map(|i| (0..m.t).map(|j| u8::from(m.get(i, j))).collect()).collect();
        RecurrenceRepr { epsilon: m.epsilon, norm: m.norm, r }
    }
}

impl RecurrenceMatrix {
    /// Builds from explicit rows; they must form a symmetric matrix with a
    /// unit diagonal.
    pub fn from_rows(rows: &[Vec<bool>], epsilon: f64, norm: Norm) -> Result<Self, RecurrenceError> {
        let t = rows.len();
        if rows.iter().any(|r| r.len() != t) {
            return Err(RecurrenceError::Invalid("recurrence matrix must be square".into()));
        }
        for i in 0..t {
            if !rows[i][i] {
                return Err(RecurrenceError::Invalid(format!("diagonal entry {i} is not recurrent")));
            }
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(RecurrenceError::Invalid(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(RecurrenceMatrix { t, bits: rows.concat(), epsilon, norm })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.t + j]
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.bits.chunks(self.t.max(1)).map(<[bool]>::to_vec).take(self.t).collect()
    }

    /// Off-diagonal recurrence density.
    pub fn recurrence_rate(&self) -> f64 {
        rqa::recurrence_rate(self, 1)
    }
}

fn check_series(series: &DMatrix<f64>) -> Result<(), RecurrenceError> {
    if let Some(row) = (0..series.nrows()).find(|&r| series.row(r).iter().any(|v| !v.is_finite())) {
        return Err(RecurrenceError::MissingValues { row });
    }
    if series.nrows() < 2 || series.ncols() == 0 {
        return Err(RecurrenceError::Invalid("need T >= 2 observations of at least one variable".into()));
    }
    Ok(())
}

fn row_vectors(series: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..series.nrows()).map(|r| series.row(r).iter().copied().collect()).collect()
}

/// Full `T×T` distance matrix (row-major), computed by rows in parallel.
pub fn distance_matrix(series: &DMatrix<f64>, norm: Norm) -> Result<Vec<f64>, RecurrenceError> {
    check_series(series)?;
    let x = row_vectors(series);
    let t = x.len();
    let rows: Vec<Vec<f64>> =
        (0..t).into_par_iter().map(|i| (0..t).map(|j| norm.distance(&x[i], &x[j])).collect()).collect();
    Ok(rows.concat())
}

/// `R_{tt'} = 1` iff `‖x_t − x_{t'}‖ ≤ ε`; each row of `series` is one state.
pub fn recurrence_matrix(series: &DMatrix<f64>, epsilon: f64, norm: Norm) -> Result<RecurrenceMatrix, RecurrenceError> {
    if !(epsilon > 0.0) {
        return Err(RecurrenceError::Invalid("epsilon must be positive".into()));
    }
    let d = distance_matrix(series, norm)?;
    let t = series.nrows();
    let bits = d.iter().map(|&v| v <= epsilon).collect();
    Ok(RecurrenceMatrix { t, bits, epsilon, norm })
}

/// Time-delay embedding of a univariate series into `dimension` columns
/// `x_t, x_{t+τ}, …, x_{t+(m−1)τ}`.
pub fn delay_embed(series: &[f64], dimension: usize, delay: usize) -> Result<DMatrix<f64>, RecurrenceError> {
    if dimension == 0 || delay == 0 {
        return Err(RecurrenceError::Invalid("embedding dimension and delay must be positive".into()));
    }
    let span = (dimension - 1) * delay;
    if series.len() <= span + 1 {
        return Err(RecurrenceError::Invalid("series too short for the embedding".into()));
    }
    let rows = series.len() - span;
    Ok(DMatrix::from_fn(rows, dimension, |t, k| series[t + k * delay]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonChoice {
    pub epsilon: f64,
    /// Off-diagonal recurrence rate at `epsilon`.
    pub recurrence_rate: f64,
    pub iterations: usize,
}

/// Bisection for the threshold giving an off-diagonal recurrence rate near
/// `target_rr`; stops once within `1e−3` or after 60 halvings, returning the
/// closer bracket end.
pub fn choose_epsilon(series: &DMatrix<f64>, target_rr: f64, norm: Norm) -> Result<EpsilonChoice, RecurrenceError> {
    if !(target_rr > 0.0 && target_rr < 1.0) {
        return Err(RecurrenceError::Unachievable { target: target_rr });
    }
    let d = distance_matrix(series, norm)?;
    let t = series.nrows();
    let mut off: Vec<f64> = (0..t).flat_map(|i| ((i + 1)..t).map(move |j| (i, j))).map(|(i, j)| d[i * t + j]).collect();
    off.sort_by(f64::total_cmp);
    let max = *off.last().unwrap();
    if max <= 0.0 {
        return Err(RecurrenceError::Unachievable { target: target_rr });
    }
    let rate = |eps: f64| off.partition_point(|&v| v <= eps) as f64 / off.len() as f64;
    let (mut lo, mut hi) = (0.0, max);
    let mut iterations = 0;
    let mut mid = 0.5 * (lo + hi);
    while iterations < 60 {
        iterations += 1;
        mid = 0.5 * (lo + hi);
        let rr = rate(mid);
        if (rr - target_rr).abs() < 1e-3 {
            return Ok(EpsilonChoice { epsilon: mid, recurrence_rate: rr, iterations });
        }
        if rr < target_rr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = [lo, mid, hi]
        .into_iter()
        .filter(|&e| e > 0.0)
        .min_by(|a, b| (rate(*a) - target_rr).abs().total_cmp(&(rate(*b) - target_rr).abs()))
        .unwrap_or(hi);
    Ok(EpsilonChoice { epsilon: best, recurrence_rate: rate(best), iterations })
}
