//! Nodewise logistic-regression (pseudo-likelihood) estimation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{logistic, IsingError, IsingParams};
use crate::pmf::Coding;

const MIN_OBS: usize = 10;
const MAX_OUTER: usize = 200;
const MAX_INNER: usize = 5_000;
/// Coefficients beyond this magnitude are taken as a sign of separation.
const DIVERGENCE_BOUND: f64 = 25.0;
/// Ridge strength of the fallback fit used once separation is detected.
const FALLBACK_RIDGE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlWarning {
    /// The nodewise regression of `node` had (quasi-)complete separation and
    /// was refitted with a ridge fallback.
    SeparationDetected { node: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlFit {
    pub params: IsingParams,
    pub warnings: Vec<PlWarning>,
}

impl PlFit {
    pub fn separation_detected(&self) -> bool {
        self.warnings.iter().any(|w| matches!(w, PlWarning::SeparationDetected { .. }))
    }
}

fn infer_coding(data: &DMatrix<f64>) -> Result<Coding, IsingError> {
    let (mut neg, mut zero) = (false, false);
    for &v in data.iter() {
        match v {
            v if v == 1.0 => {}
            v if v == -1.0 => neg = true,
            v if v == 0.0 => zero = true,
            _ => return Err(IsingError::NotBinary),
        }
    }
    match (neg, zero) {
        (true, true) => Err(IsingError::NotBinary),
        (true, false) => Ok(Coding::PlusMinus),
        _ => Ok(Coding::ZeroOne),
    }
}

/// Pseudo-likelihood fit of an Ising model.
///
/// Each variable is regressed on all others by logistic regression with an
/// L1 penalty `penalty` on the slopes (mean negative log-likelihood scale);
/// `penalty = 0` gives the plain maximum pseudo-likelihood estimate. The two
/// estimates of each coupling are averaged. The coding is inferred from the
/// data: any −1 means {-1,+1}, otherwise {0,1}.
pub fn ising_fit_pl(data: &DMatrix<f64>, penalty: f64) -> Result<PlFit, IsingError> {
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(IsingError::InvalidParams("penalty must be a nonnegative real".into()));
    }
    let (n, p) = data.shape();
    if n < MIN_OBS {
        return Err(IsingError::InsufficientData { need: MIN_OBS, got: n });
    }
    if p == 0 {
        return Err(IsingError::InvalidParams("no variables".into()));
    }
    let coding = infer_coding(data)?;
    // the logit is 2·field in {-1,+1} coding
    let scale = match coding {
        Coding::PlusMinus => 0.5,
        Coding::ZeroOne => 1.0,
    };

    let mut warnings = Vec::new();
    let mut mu = vec![0.0; p];
    let mut directed = DMatrix::zeros(p, p);
    for node in 0..p {
        let others: Vec<usize> = (0..p).filter(|&j| j != node).collect();
        let mut x = DMatrix::from_element(n, others.len() + 1, 1.0);
        for (c, &j) in others.iter().enumerate() {
            x.set_column(c + 1, &data.column(j));
        }
        let y = DVector::from_iterator(n, data.column(node).iter().map(|&v| if v == 1.0 { 1.0 } else { 0.0 }));

        let constant = y.iter().all(|&v| v == y[0]);
        let fit = if constant { None } else { fit_logistic(&x, &y, penalty, 0.0) };
        let beta = match fit {
            Some(b) => b,
            None => {
                warnings.push(PlWarning::SeparationDetected { node });
                fit_logistic(&x, &y, penalty, FALLBACK_RIDGE)
                    .ok_or_else(|| IsingError::InvalidParams(format!("fallback fit failed for node {node}")))?
            }
        };
        mu[node] = scale * beta[0];
        for (c, &j) in others.iter().enumerate() {
            directed[(node, j)] = scale * beta[c + 1];
        }
    }
    let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { 0.5 * (directed[(i, j)] + directed[(j, i)]) });
    Ok(PlFit { params: IsingParams::new(mu, sigma, coding)?, warnings })
}

/// Minimizes `−ℓ(β)/N + λ Σ_{j≥1} |β_j| + ½ρ‖β‖²`, column 0 of `x` being the
/// intercept. Returns `None` if the iterates diverge (separation).
fn fit_logistic(x: &DMatrix<f64>, y: &DVector<f64>, l1: f64, ridge: f64) -> Option<DVector<f64>> {
    if l1 == 0.0 {
        newton(x, y, ridge)
    } else {
        irls_coordinate_descent(x, y, l1, ridge)
    }
}

fn newton(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Option<DVector<f64>> {
    let (n, k) = x.shape();
    let nf = n as f64;
    let mut beta = DVector::zeros(k);
    for _ in 0..MAX_OUTER {
        let eta = x * &beta;
        let prob = eta.map(logistic);
        let w = prob.map(|q| q * (1.0 - q));
        let grad = x.transpose() * (&prob - y) / nf + &beta * ridge;
        let mut h = DMatrix::zeros(k, k);
        for t in 0..n {
            let row = x.row(t);
            h += row.transpose() * row * w[t];
        }
        h /= nf;
        for d in 0..k {
            h[(d, d)] += ridge;
        }
        let step = h.cholesky()?.solve(&grad);
        beta -= &step;
        if beta.amax() > DIVERGENCE_BOUND || !beta.iter().all(|b| b.is_finite()) {
            return None;
        }
        if step.amax() < 1e-10 {
            return Some(beta);
        }
    }
    None
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

fn irls_coordinate_descent(x: &DMatrix<f64>, y: &DVector<f64>, l1: f64, ridge: f64) -> Option<DVector<f64>> {
    let (n, k) = x.shape();
    let nf = n as f64;
    let mut beta = DVector::zeros(k);
    for _ in 0..MAX_OUTER {
        let eta = x * &beta;
        let prob = eta.map(logistic);
        let w = prob.map(|q| (q * (1.0 - q)).max(1e-5));
        let z = DVector::from_fn(n, |t, _| eta[t] + (y[t] - prob[t]) / w[t]);
        let old = beta.clone();
        // residual of the working regression
        let mut r = &z - x * &beta;
        for _ in 0..MAX_INNER {
            let mut delta: f64 = 0.0;
            for j in 0..k {
                let col = x.column(j);
                let mut num = 0.0;
                let mut den = 0.0;
                for t in 0..n {
                    num += w[t] * col[t] * (r[t] + col[t] * beta[j]);
                    den += w[t] * col[t] * col[t];
                }
                num /= nf;
                den = den / nf + ridge;
                let penalty = if j == 0 { 0.0 } else { l1 };
                let new = soft_threshold(num, penalty) / den;
                let d = new - beta[j];
                if d != 0.0 {
                    for t in 0..n {
                        r[t] -= d * col[t];
                    }
                    beta[j] = new;
                    delta = delta.max(d.abs());
                }
            }
            if delta < 1e-12 {
                break;
            }
        }
        if beta.amax() > DIVERGENCE_BOUND || !beta.iter().all(|b| b.is_finite()) {
            return None;
        }
        if (&beta - &old).amax() < 1e-10 {
            return Some(beta);
        }
    }
    None
}
