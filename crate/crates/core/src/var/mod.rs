//! Lag-1 vector autoregression and its graphical (gVAR), multilevel (mlVAR)
//! and group-iterative structural (GIMME) relatives.

mod gimme;
mod mlvar;

pub use gimme::{
    adjusted_rand_index, fit_gimme, fit_gimme_series, simulate_usem, FitRecord, GimmeNote, GimmeOptions, GimmeResult,
    InformationCriterion, Level, Path, PathKind, PersonGimme, Stage, SubgroupInfo,
};
pub use mlvar::{fit_mlvar, fit_mlvar_by_group, MlVarOptions, MlVarResult, PersonFailure, PersonFit};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ggm::{partial_corr_network, GgmError, GgmNetwork};
use crate::linalg::{self, SPD_REL_FLOOR};
use crate::rng;

/// Observations discarded at the start of every simulation.
pub const SIMULATION_BURN_IN: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarError {
    #[error("insufficient observations: need {need}, got {got}")]
    InsufficientObservations { need: usize, got: usize },
    #[error("collinear predictors")]
    CollinearPredictors,
    #[error("model is not stable (spectral radius {0})")]
    UnstableModel(f64),
    #[error("residual covariance: {0}")]
    Network(#[from] GgmError),
    #[error("between-person network ({persons} persons): {source}")]
    BetweenPerson { persons: usize, source: GgmError },
    #[error("need at least {need} persons, got {got}")]
    TooFewPersons { need: usize, got: usize },
    #[error("person `{person}`: {source}")]
    Person { person: String, source: Box<VarError> },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// A multivariate series with its valid lag-1 pairs `(t − 1, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub values: DMatrix<f64>,
    pub pairs: Vec<(usize, usize)>,
}

impl Series {
    /// Every consecutive row pair is a lag pair.
    pub fn contiguous(values: DMatrix<f64>) -> Self {
        let pairs = (1..values.nrows()).map(|t| (t - 1, t)).collect();
        Series { values, pairs }
    }

    pub fn with_pairs(values: DMatrix<f64>, pairs: Vec<(usize, usize)>) -> Self {
        Series { values, pairs }
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    /// `(x_t, x_{t−1})` stacked over valid pairs.
    pub fn lagged(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.pairs.len();
        let p = self.p();
        let cur = DMatrix::from_fn(n, p, |k, j| self.values[(self.pairs[k].1, j)]);
        let prev = DMatrix::from_fn(n, p, |k, j| self.values[(self.pairs[k].0, j)]);
        (cur, prev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    /// `B[i][j]`: effect of `x_{j,t−1}` on `x_{i,t}`.
    #[serde(with = "crate::serde_matrix")]
    pub b: DMatrix<f64>,
    /// Residual covariance.
    #[serde(with = "crate::serde_matrix")]
    pub theta: DMatrix<f64>,
    /// Process means.
    pub intercept: Vec<f64>,
    /// Spectral radius of `b` below one.
    pub stable: bool,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvarModel {
    pub var: VarModel,
    pub contemporaneous: GgmNetwork,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarOptions {
    /// Minimum lag pairs per variable.
    pub min_obs_per_variable: usize,
    /// Fix `B = 0`: the residual covariance becomes the series covariance.
    pub force_zero_b: bool,
}

impl Default for VarOptions {
    fn default() -> Self {
        VarOptions { min_obs_per_variable: 3, force_zero_b: false }
    }
}

fn column_means(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|j| m.column(j).mean()).collect()
}

fn check_collinear(prev: &DMatrix<f64>) -> Result<(), VarError> {
    let n = prev.nrows();
    let cov = linalg::covariance(prev, (n.max(2) - 1) as f64);
    let p = cov.nrows();
    if (0..p).any(|i| !(cov[(i, i)] > 1e-12 * (1.0 + prev.column(i).amax().powi(2)))) {
        return Err(VarError::CollinearPredictors);
    }
    let corr = linalg::to_correlation(&cov);
    if !linalg::is_positive_definite(&corr, SPD_REL_FLOOR) {
        return Err(VarError::CollinearPredictors);
    }
    Ok(())
}

/// Lag-1 VAR by per-equation least squares with an intercept.
///
/// Residual covariance uses the denominator `n_pairs − P`. The stored
/// intercept is the series mean.
pub fn fit_var(series: &Series, opts: &VarOptions) -> Result<VarModel, VarError> {
    let p = series.p();
    if p == 0 {
        return Err(VarError::Invalid("series has no variables".into()));
    }
    if series.values.iter().any(|v| !v.is_finite()) {
        return Err(VarError::Invalid("series contains missing or non-finite values".into()));
    }
    if opts.force_zero_b {
        return fit_zero_b(series, opts);
    }
    let n = series.pairs.len();
    let need = (opts.min_obs_per_variable * p).max(p + 2);
    if n < need {
        return Err(VarError::InsufficientObservations { need, got: n });
    }
    let (cur, prev) = series.lagged();
    check_collinear(&prev)?;

    let mut design = DMatrix::from_element(n, p + 1, 1.0);
    design.view_mut((0, 1), (n, p)).copy_from(&prev);
    let coef = linalg::least_squares(&design, &cur).ok_or(VarError::CollinearPredictors)?;
    // coef rows: intercept, then predictors; columns: equations
    let b = DMatrix::from_fn(p, p, |i, j| coef[(j + 1, i)]);
    let resid = &cur - &design * &coef;
    let theta = linalg::symmetrize(&(resid.transpose() * &resid / (n - p) as f64));
    Ok(VarModel {
        stable: linalg::spectral_radius(&b) < 1.0,
        b,
        theta,
        intercept: column_means(&series.values),
        n_pairs: n,
    })
}

/// OLS standard errors of `model.b` (same layout), from the residual
/// variances and the inverse cross-product of the intercept-augmented
/// lagged design of `series`.
pub fn var_standard_errors(series: &Series, model: &VarModel) -> Result<DMatrix<f64>, VarError> {
    let p = series.p();
    if model.b.shape() != (p, p) {
        return Err(VarError::Invalid("model does not match the series".into()));
    }
    let (_, prev) = series.lagged();
    let n = prev.nrows();
    let mut design = DMatrix::from_element(n, p + 1, 1.0);
    design.view_mut((0, 1), (n, p)).copy_from(&prev);
    let xtx_inv =
        linalg::spd_inverse(&(design.transpose() * &design), SPD_REL_FLOOR).ok_or(VarError::CollinearPredictors)?;
    Ok(DMatrix::from_fn(p, p, |i, j| (model.theta[(i, i)] * xtx_inv[(j + 1, j + 1)]).sqrt()))
}

fn fit_zero_b(series: &Series, opts: &VarOptions) -> Result<VarModel, VarError> {
    let (t, p) = series.values.shape();
    let need = (opts.min_obs_per_variable * p).max(2);
    if t < need {
        return Err(VarError::InsufficientObservations { need, got: t });
    }
    Ok(VarModel {
        b: DMatrix::zeros(p, p),
        theta: linalg::covariance(&series.values, (t - 1) as f64),
        intercept: column_means(&series.values),
        stable: true,
        n_pairs: series.pairs.len(),
    })
}

/// Moment form of the same estimator: `B = S₁₀ S₀₀⁻¹` and
/// `Θ = (S₁₁ − B S₀₁) (n − 1)/(n − P)`, from the joint covariance of
/// `(x_t, x_{t−1})`. Serves as the conditional-Gaussian writing of
/// [`fit_var`].
pub fn fit_var_moments(series: &Series) -> Result<(DMatrix<f64>, DMatrix<f64>), VarError> {
    let p = series.p();
    let n = series.pairs.len();
    if n <= p + 1 {
        return Err(VarError::InsufficientObservations { need: p + 2, got: n });
    }
    let (cur, prev) = series.lagged();
    let mut joint = DMatrix::zeros(n, 2 * p);
    joint.view_mut((0, 0), (n, p)).copy_from(&cur);
    joint.view_mut((0, p), (n, p)).copy_from(&prev);
    let s = linalg::covariance(&joint, (n - 1) as f64);
    let s11 = s.view((0, 0), (p, p)).into_owned();
    let s10 = s.view((0, p), (p, p)).into_owned();
    let s00 = s.view((p, p), (p, p)).into_owned();
    let s00_inv = linalg::spd_inverse(&s00, SPD_REL_FLOOR).ok_or(VarError::CollinearPredictors)?;
    let b = &s10 * s00_inv;
    let theta = (&s11 - &b * s10.transpose()) * ((n - 1) as f64 / (n - p) as f64);
    Ok((b, linalg::symmetrize(&theta)))
}

/// VAR followed by the partial-correlation network of the residual
/// covariance.
pub fn fit_gvar(series: &Series, opts: &VarOptions) -> Result<GvarModel, VarError> {
    let var = fit_var(series, opts)?;
    let contemporaneous = partial_corr_network(&var.theta)?;
    Ok(GvarModel { var, contemporaneous })
}

/// Simulates `x_t = μ + B(x_{t−1} − μ) + ε_t`, `ε_t ~ N(0, Θ)`, starting at
/// `μ` and discarding [`SIMULATION_BURN_IN`] steps.
pub fn simulate_var(model: &VarModel, t: usize, seed: u64) -> Result<DMatrix<f64>, VarError> {
    let p = model.b.nrows();
    if model.b.shape() != (p, p) || model.theta.shape() != (p, p) || model.intercept.len() != p {
        return Err(VarError::Invalid("inconsistent model dimensions".into()));
    }
    let radius = linalg::spectral_radius(&model.b);
    if radius >= 1.0 {
        return Err(VarError::UnstableModel(radius));
    }
    if !linalg::is_positive_definite(&model.theta, SPD_REL_FLOOR) {
        return Err(VarError::Network(GgmError::NotPositiveDefinite));
    }
    let chol = model.theta.clone().cholesky().ok_or(VarError::Network(GgmError::NotPositiveDefinite))?;
    let l = chol.l();
    let mu = nalgebra::DVector::from_column_slice(&model.intercept);
    let mut rng = rng::seeded(seed);
    let mut x = mu.clone();
    let mut out = DMatrix::zeros(t, p);
    for step in 0..(SIMULATION_BURN_IN + t) {
        let z = nalgebra::DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        x = &mu + &model.b * (&x - &mu) + &l * z;
        if step >= SIMULATION_BURN_IN {
            out.set_row(step - SIMULATION_BURN_IN, &x.transpose());
        }
    }
    Ok(out)
}

pub fn simulate_gvar(model: &GvarModel, t: usize, seed: u64) -> Result<DMatrix<f64>, VarError> {
    simulate_var(&model.var, t, seed)
}

/// Builds a gVAR model from its parameters.
pub fn gvar_from_parts(b: DMatrix<f64>, theta: DMatrix<f64>, intercept: Vec<f64>) -> Result<GvarModel, VarError> {
    let contemporaneous = partial_corr_network(&theta)?;
    Ok(GvarModel {
        var: VarModel { stable: linalg::spectral_radius(&b) < 1.0, b, theta, intercept, n_pairs: 0 },
        contemporaneous,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    /// Mean absolute off-diagonal entry.
    pub off_diagonal: f64,
    /// Mean absolute diagonal entry (autoregressive effects of a temporal
    /// matrix; zero for networks).
    pub diagonal: f64,
}

/// Average absolute connection strength of a network matrix.
pub fn network_density(m: &DMatrix<f64>) -> Result<Density, VarError> {
    let p = m.nrows();
    if !m.is_square() || p < 2 {
        return Err(VarError::Invalid("density needs a square matrix with at least 2 nodes".into()));
    }
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                diag += m[(i, j)].abs();
            } else {
                off += m[(i, j)].abs();
            }
        }
    }
    Ok(Density { off_diagonal: off / (p * (p - 1)) as f64, diagonal: diag / p as f64 })
}
