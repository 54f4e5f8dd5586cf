//! Ising models over binary variables.
//!
//! The joint distribution is `p(x) ∝ exp(xᵀμ + ½ xᵀΣx)` with a symmetric,
//! zero-diagonal coupling matrix Σ, in either {-1,+1} or {0,1} coding.

mod mirt;
mod pseudolikelihood;

pub use mirt::{ising_to_mirt, mirt_2pl_marginal_pmf, mirt_marginal_pmf, MirtParams, Shift};
pub use pseudolikelihood::{ising_fit_pl, PlFit, PlWarning};

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::pmf::{config_states, Coding, Pmf};
use crate::rng;

/// Largest variable count accepted by exact enumeration.
pub const MAX_EXACT_VARIABLES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsingError {
    #[error("too many variables for exact enumeration: {0} (max {MAX_EXACT_VARIABLES})")]
    TooManyVariables(usize),
    #[error("too many latent factors for tensor quadrature: {0} (max 4)")]
    TooManyFactors(usize),
    #[error("shifted coupling matrix is not positive semidefinite (min eigenvalue {0})")]
    NotPsdAfterShift(f64),
    #[error("data is not binary in a single coding")]
    NotBinary,
    #[error("need at least {need} observations, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Main effects, couplings and state coding of an Ising model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IsingParamsRepr", into = "IsingParamsRepr")]
pub struct IsingParams {
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub coding: Coding,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsingParamsRepr {
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    coding: Coding,
}

impl From<IsingParams> for IsingParamsRepr {
    fn from(p: IsingParams) -> Self {
        IsingParamsRepr { mu: p.mu, sigma: linalg::to_rows(&p.sigma), coding: p.coding }
    }
}

impl TryFrom<IsingParamsRepr> for IsingParams {
    type Error = IsingError;

    fn try_from(r: IsingParamsRepr) -> Result<Self, Self::Error> {
        let sigma = linalg::from_rows(&r.sigma).ok_or_else(|| IsingError::InvalidParams("ragged sigma".into()))?;
        IsingParams::new(r.mu, sigma, r.coding)
    }
}

impl IsingParams {
    pub fn new(mu: Vec<f64>, sigma: DMatrix<f64>, coding: Coding) -> Result<Self, IsingError> {
        let params = IsingParams { mu, sigma, coding };
        params.validate()?;
        Ok(params)
    }

    /// Independent variables with zero main effects.
    pub fn zeros(p: usize, coding: Coding) -> Self {
        IsingParams { mu: vec![0.0; p], sigma: DMatrix::zeros(p, p), coding }
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<(), IsingError> {
        let p = self.mu.len();
        if p == 0 {
            return Err(IsingError::InvalidParams("need at least one variable".into()));
        }
        if self.sigma.shape() != (p, p) {
            return Err(IsingError::InvalidParams(format!("sigma must be {p}x{p}")));
        }
        if self.mu.iter().chain(self.sigma.iter()).any(|v| !v.is_finite()) {
            return Err(IsingError::InvalidParams("non-finite parameter".into()));
        }
        if !linalg::is_symmetric(&self.sigma, 1e-12) {
            return Err(IsingError::InvalidParams("sigma is not symmetric".into()));
        }
        if (0..p).any(|i| self.sigma[(i, i)] != 0.0) {
            return Err(IsingError::InvalidParams("sigma diagonal must be zero".into()));
        }
        Ok(())
    }

    /// Exponent `xᵀμ + ½ xᵀΣx` of the unnormalized density.
    pub fn log_weight(&self, x: &[f64]) -> f64 {
        let p = self.p();
        let mut s = 0.0;
        for i in 0..p {
            s += x[i] * self.mu[i];
            for j in (i + 1)..p {
                s += self.sigma[(i, j)] * x[i] * x[j];
            }
        }
        s
    }

    /// Local field `μ_i + Σ_j σ_ij x_j` acting on variable `i`.
    fn field(&self, i: usize, x: &[f64]) -> f64 {
        self.mu[i] + (0..self.p()).map(|j| self.sigma[(i, j)] * x[j]).sum::<f64>()
    }

    /// Probability that variable `i` is in its high state given the others.
    pub fn conditional_high(&self, i: usize, x: &[f64]) -> f64 {
        let h = self.field(i, x);
        match self.coding {
            Coding::ZeroOne => logistic(h),
            Coding::PlusMinus => logistic(2.0 * h),
        }
    }
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Exact pmf by enumerating all `2^P` configurations.
pub fn ising_pmf_exact(params: &IsingParams) -> Result<Pmf, IsingError> {
    params.validate()?;
    quadratic_pmf_exact(&params.mu, &params.sigma, params.coding)
}

/// Exact pmf proportional to `exp(xᵀμ + ½ xᵀSx)` for any symmetric `S`,
/// diagonal included. With a zero diagonal this is the Ising pmf.
pub fn quadratic_pmf_exact(mu: &[f64], s: &DMatrix<f64>, coding: Coding) -> Result<Pmf, IsingError> {
    let p = mu.len();
    if s.shape() != (p, p) || !linalg::is_symmetric(s, 1e-12) {
        return Err(IsingError::InvalidParams("quadratic form must be a symmetric P x P matrix".into()));
    }
    if p > MAX_EXACT_VARIABLES {
        return Err(IsingError::TooManyVariables(p));
    }
    let logw: Vec<f64> = (0..1usize << p)
        .map(|k| {
            let x = config_states(k, p, coding);
            let mut v = 0.0;
            for i in 0..p {
                v += x[i] * mu[i] + 0.5 * s[(i, i)] * x[i] * x[i];
                for j in (i + 1)..p {
                    v += s[(i, j)] * x[i] * x[j];
                }
            }
            v
        })
        .collect();
    Ok(Pmf::from_log_weights(p, coding, &logw))
}

/// Single-site Gibbs sampler with a fixed sequential scan.
///
/// Starts from a uniformly random state, discards `burn_in` sweeps and then
/// records the state after each of `n_samples` sweeps. Rows are in the
/// parameters' coding.
pub fn ising_gibbs(
    params: &IsingParams,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<DMatrix<f64>, IsingError> {
    params.validate()?;
    if n_samples == 0 {
        return Err(IsingError::InvalidParams("n_samples must be positive".into()));
    }
    let p = params.p();
    let mut rng = rng::seeded(seed);
    let mut x: Vec<f64> = (0..p).map(|_| params.coding.state(rng.gen::<bool>())).collect();
    let mut out = DMatrix::zeros(n_samples, p);
    for sweep in 0..(burn_in + n_samples) {
        for i in 0..p {
            let prob = params.conditional_high(i, &x);
            x[i] = params.coding.state(rng.gen::<f64>() < prob);
        }
        if sweep >= burn_in {
            let r = sweep - burn_in;
            for i in 0..p {
                out[(r, i)] = x[i];
            }
        }
    }
    Ok(out)
}

/// Empirical pmf of the rows of a sample matrix.
pub fn empirical_pmf(samples: &DMatrix<f64>, coding: Coding) -> Pmf {
    let rows: Vec<Vec<f64>> = (0..samples.nrows()).map(|r| samples.row(r).iter().copied().collect()).collect();
    Pmf::empirical(samples.ncols(), coding, rows.iter().map(Vec::as_slice))
}

/// Re-expresses the model in the other coding under the state map
/// `x = 2y − 1` (PlusMinus `x`, ZeroOne `y`), leaving the distribution over
/// configurations unchanged.
pub fn ising_recode(params: &IsingParams, target: Coding) -> IsingParams {
    if params.coding == target {
        return params.clone();
    }
    let p = params.p();
    let row_sums: Vec<f64> = (0..p).map(|i| params.sigma.row(i).sum()).collect();
    match target {
        Coding::ZeroOne => IsingParams {
            mu: (0..p).map(|i| 2.0 * params.mu[i] - 2.0 * row_sums[i]).collect(),
            sigma: &params.sigma * 4.0,
            coding: Coding::ZeroOne,
        },
        Coding::PlusMinus => IsingParams {
            mu: (0..p).map(|i| 0.5 * params.mu[i] + 0.25 * row_sums[i]).collect(),
            sigma: &params.sigma * 0.25,
            coding: Coding::PlusMinus,
        },
    }
}
