//! Gaussian graphical models (partial-correlation networks) and forward
//! implied covariances of factor and structural equation models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, SPD_REL_FLOOR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GgmError {
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("I - Omega is singular or not positive definite")]
    SingularIminusOmega,
    #[error("I - B is singular")]
    SingularIminusB,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("{0} is not positive semidefinite")]
    NotPsd(&'static str),
}

/// Partial-correlation network: `omega` holds the partial correlations
/// (zero diagonal), `delta` the scaling `κ_ii^{-1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GgmRepr", into = "GgmRepr")]
pub struct GgmNetwork {
    pub omega: DMatrix<f64>,
    pub delta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GgmRepr {
    omega: Vec<Vec<f64>>,
    delta: Vec<f64>,
}

impl From<GgmNetwork> for GgmRepr {
    fn from(n: GgmNetwork) -> Self {
        GgmRepr { omega: linalg::to_rows(&n.omega), delta: n.delta }
    }
}

impl TryFrom<GgmRepr> for GgmNetwork {
    type Error = GgmError;

    fn try_from(r: GgmRepr) -> Result<Self, GgmError> {
        let omega = linalg::from_rows(&r.omega).ok_or_else(|| GgmError::InvalidNetwork("ragged omega".into()))?;
        GgmNetwork::new(omega, r.delta)
    }
}

impl GgmNetwork {
    pub fn new(omega: DMatrix<f64>, delta: Vec<f64>) -> Result<Self, GgmError> {
        let net = GgmNetwork { omega, delta };
        net.validate()?;
        Ok(net)
    }

    pub fn p(&self) -> usize {
        self.delta.len()
    }

    pub fn validate(&self) -> Result<(), GgmError> {
        let p = self.delta.len();
        if self.omega.shape() != (p, p) {
            return Err(GgmError::DimensionMismatch(format!("omega must be {p}x{p}")));
        }
        if !linalg::is_symmetric(&self.omega, 1e-12) {
            return Err(GgmError::InvalidNetwork("omega is not symmetric".into()));
        }
        for i in 0..p {
            if self.omega[(i, i)] != 0.0 {
                return Err(GgmError::InvalidNetwork("omega diagonal must be zero".into()));
            }
            if !(self.delta[i] > 0.0 && self.delta[i].is_finite()) {
                return Err(GgmError::InvalidNetwork("delta must be strictly positive".into()));
            }
        }
        if self.omega.iter().any(|w| !(w.abs() < 1.0)) {
            return Err(GgmError::InvalidNetwork("partial correlations must lie in (-1, 1)".into()));
        }
        Ok(())
    }

    /// Standardizes a precision matrix: `ω_ij = −κ_ij / √(κ_ii κ_jj)`,
    /// `δ_i = κ_ii^{-1/2}`.
    pub fn from_precision(k: &DMatrix<f64>) -> Result<Self, GgmError> {
        let p = k.nrows();
        if !k.is_square() {
            return Err(GgmError::DimensionMismatch("precision must be square".into()));
        }
        if (0..p).any(|i| !(k[(i, i)] > 0.0)) {
            return Err(GgmError::NotPositiveDefinite);
        }
        let omega =
            DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { -k[(i, j)] / (k[(i, i)] * k[(j, j)]).sqrt() });
        let omega = linalg::symmetrize(&omega);
        GgmNetwork::new(omega, (0..p).map(|i| k[(i, i)].powf(-0.5)).collect())
    }

    /// Precision matrix `Δ⁻¹(I − Ω)Δ⁻¹` implied by the network.
    pub fn precision(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(p, p, |i, j| {
            let a = if i == j { 1.0 } else { -self.omega[(i, j)] };
            a / (self.delta[i] * self.delta[j])
        })
    }
}

/// Partial-correlation network of a covariance matrix.
pub fn partial_corr_network(covariance: &DMatrix<f64>) -> Result<GgmNetwork, GgmError> {
    if !covariance.is_square() {
        return Err(GgmError::DimensionMismatch("covariance must be square".into()));
    }
    if !linalg::is_symmetric(covariance, 1e-10 * covariance.amax().max(1.0)) {
        return Err(GgmError::NotPositiveDefinite);
    }
    let k = linalg::spd_inverse(covariance, SPD_REL_FLOOR).ok_or(GgmError::NotPositiveDefinite)?;
    GgmNetwork::from_precision(&k)
}

/// Same as [`partial_corr_network`] after adding `ridge · I` to the covariance.
pub fn partial_corr_network_ridge(covariance: &DMatrix<f64>, ridge: f64) -> Result<GgmNetwork, GgmError> {
    let n = covariance.nrows();
    partial_corr_network(&(covariance + DMatrix::identity(n, n) * ridge))
}

/// Covariance `Δ(I − Ω)⁻¹Δ` implied by a network.
pub fn reconstruct_cov(net: &GgmNetwork) -> Result<DMatrix<f64>, GgmError> {
    net.validate()?;
    let p = net.p();
    let i_minus = DMatrix::identity(p, p) - &net.omega;
    let inv = linalg::spd_inverse(&i_minus, SPD_REL_FLOOR).ok_or(GgmError::SingularIminusOmega)?;
    Ok(DMatrix::from_fn(p, p, |i, j| net.delta[i] * inv[(i, j)] * net.delta[j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Saturation {
    pub saturated: bool,
    /// Off-diagonal pairs `i < j` with `|ω_ij| ≤ tol`.
    pub near_zero: usize,
}

pub fn saturation_check(net: &GgmNetwork, tol: f64) -> Saturation {
    let p = net.p();
    let near_zero =
        (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).filter(|&(i, j)| net.omega[(i, j)].abs() <= tol).count();
    Saturation { saturated: near_zero == 0, near_zero }
}

/// Measurement (and optionally structural) model with loadings `Λ` (P×M),
/// latent covariance `Ψ`, residual covariance `Θ` and latent regressions `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub lambda: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub b: Option<DMatrix<f64>>,
}

impl FactorModel {
    pub fn cfa(lambda: DMatrix<f64>, psi: DMatrix<f64>, theta: DMatrix<f64>) -> Self {
        FactorModel { lambda, psi, theta, b: None }
    }

    pub fn sem(lambda: DMatrix<f64>, psi: DMatrix<f64>, theta: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        FactorModel { lambda, psi, theta, b: Some(b) }
    }

    fn validate(&self) -> Result<(), GgmError> {
        let (p, m) = self.lambda.shape();
        if self.psi.shape() != (m, m) {
            return Err(GgmError::DimensionMismatch(format!("psi must be {m}x{m}")));
        }
        if self.theta.shape() != (p, p) {
            return Err(GgmError::DimensionMismatch(format!("theta must be {p}x{p}")));
        }
        if let Some(b) = &self.b {
            if b.shape() != (m, m) {
                return Err(GgmError::DimensionMismatch(format!("b must be {m}x{m}")));
            }
            if (0..m).any(|i| b[(i, i)] != 0.0) {
                return Err(GgmError::DimensionMismatch("b must have a zero diagonal".into()));
            }
        }
        if !linalg::is_symmetric(&self.psi, 1e-10) || !linalg::is_psd(&self.psi, 1e-10) {
            return Err(GgmError::NotPsd("psi"));
        }
        if !linalg::is_symmetric(&self.theta, 1e-10) || !linalg::is_psd(&self.theta, 1e-10) {
            return Err(GgmError::NotPsd("theta"));
        }
        Ok(())
    }
}

/// `ΛΨΛᵀ + Θ`.
pub fn cfa_implied_cov(model: &FactorModel) -> Result<DMatrix<f64>, GgmError> {
    if model.b.is_some() {
        return Err(GgmError::DimensionMismatch("cfa model must not carry a structural matrix".into()));
    }
    model.validate()?;
    Ok(&model.lambda * &model.psi * model.lambda.transpose() + &model.theta)
}

/// `Λ(I − B)⁻¹Ψ(I − B)⁻ᵀΛᵀ + Θ`.
pub fn sem_implied_cov(model: &FactorModel) -> Result<DMatrix<f64>, GgmError> {
    model.validate()?;
    let b =
        model.b.as_ref().ok_or_else(|| GgmError::DimensionMismatch("sem model needs a structural matrix".into()))?;
    let m = b.nrows();
    let i_minus_b = DMatrix::identity(m, m) - b;
    let lu = i_minus_b.lu();
    let det = lu.determinant();
    if det.abs() < 1e-12 {
        return Err(GgmError::SingularIminusB);
    }
    let inv = lu.try_inverse().ok_or(GgmError::SingularIminusB)?;
    let latent = &inv * &model.psi * inv.transpose();
    Ok(linalg::symmetrize(&(&model.lambda * latent * model.lambda.transpose() + &model.theta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        linalg::max_abs_diff(a, b) < tol
    }

    #[test]
    fn identity_covariance() {
        let net = partial_corr_network(&DMatrix::identity(4, 4)).unwrap();
        assert!(net.omega.iter().all(|&w| w == 0.0));
        assert!(net.delta.iter().all(|&d| (d - 1.0).abs() < 1e-15));
        let sat = saturation_check(&net, 1e-6);
        assert!(!sat.saturated);
        assert_eq!(sat.near_zero, 6);
    }

    #[test]
    fn bivariate_partial_equals_correlation() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let net = partial_corr_network(&cov).unwrap();
        assert!((net.omega[(0, 1)] - 0.5).abs() < 1e-14);
    }

    /// X1 → X2 → X3 with unit coefficients and unit noise.
    fn chain_cov() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 2.0, 3.0])
    }

    #[test]
    fn chain_conditional_independence() {
        let net = partial_corr_network(&chain_cov()).unwrap();
        assert!(net.omega[(0, 2)].abs() < 1e-10);
        assert!(net.omega[(0, 1)].abs() > 0.1);
        let sat = saturation_check(&net, 1e-8);
        assert_eq!(sat.near_zero, 1);
    }

    #[test]
    fn reconstruct_examples() {
        let net = GgmNetwork::new(DMatrix::zeros(3, 3), vec![1.0; 3]).unwrap();
        assert!(approx(&reconstruct_cov(&net).unwrap(), &DMatrix::identity(3, 3), 1e-15));

        let net = GgmNetwork::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]), vec![1.0; 2]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0]);
        assert!(approx(&reconstruct_cov(&net).unwrap(), &want, 1e-14));
    }

    #[test]
    fn reconstruct_rejects_indefinite_i_minus_omega() {
        let w = 0.9;
        let omega = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { w });
        let net = GgmNetwork::new(omega, vec![1.0; 3]).unwrap();
        assert_eq!(reconstruct_cov(&net).unwrap_err(), GgmError::SingularIminusOmega);
    }

    #[test]
    fn not_pd_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(partial_corr_network(&cov).unwrap_err(), GgmError::NotPositiveDefinite);
        let net = partial_corr_network_ridge(&cov, 0.1).unwrap();
        assert!(net.omega[(0, 1)] > 0.0);
    }

    #[test]
    fn cfa_examples() {
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]);
        let m = FactorModel::cfa(DMatrix::zeros(2, 1), DMatrix::identity(1, 1), theta.clone());
        assert_eq!(cfa_implied_cov(&m).unwrap(), theta);

        let m = FactorModel::cfa(DMatrix::from_element(3, 1, 1.0), DMatrix::identity(1, 1), DMatrix::identity(3, 3));
        let s = cfa_implied_cov(&m).unwrap();
        let want = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 1.0 });
        assert_eq!(s, want);

        let psi = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let m = FactorModel::cfa(DMatrix::identity(2, 2), psi.clone(), DMatrix::zeros(2, 2));
        assert_eq!(cfa_implied_cov(&m).unwrap(), psi);

        let bad = FactorModel::cfa(DMatrix::zeros(3, 1), DMatrix::identity(2, 2), DMatrix::identity(3, 3));
        assert!(matches!(cfa_implied_cov(&bad), Err(GgmError::DimensionMismatch(_))));
    }

    #[test]
    fn sem_examples() {
        let lambda = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.7, 0.0, 0.0, 1.0]);
        let psi = DMatrix::identity(2, 2);
        let theta = DMatrix::identity(3, 3) * 0.3;
        let cfa = cfa_implied_cov(&FactorModel::cfa(lambda.clone(), psi.clone(), theta.clone())).unwrap();
        let sem = sem_implied_cov(&FactorModel::sem(lambda, psi, theta, DMatrix::zeros(2, 2))).unwrap();
        assert!(approx(&cfa, &sem, 1e-15));

        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.5, 0.0]);
        let m = FactorModel::sem(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(2, 2), b);
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.25]);
        assert!(approx(&sem_implied_cov(&m).unwrap(), &want, 1e-15));

        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let m = FactorModel::sem(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(2, 2), b);
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        assert!(approx(&sem_implied_cov(&m).unwrap(), &want, 1e-15));

        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let m = FactorModel::sem(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(2, 2), b);
        assert_eq!(sem_implied_cov(&m).unwrap_err(), GgmError::SingularIminusB);
    }

    #[test]
    fn one_factor_network_is_saturated() {
        let lambda = DMatrix::from_element(6, 1, 0.7);
        let m = FactorModel::cfa(lambda, DMatrix::identity(1, 1), DMatrix::identity(6, 6) * 0.51);
        let net = partial_corr_network(&cfa_implied_cov(&m).unwrap()).unwrap();
        assert!(saturation_check(&net, 1e-6).saturated);
    }

    #[test]
    fn precision_roundtrip() {
        let cov = chain_cov();
        let net = partial_corr_network(&cov).unwrap();
        let k = cov.clone().try_inverse().unwrap();
        assert!(approx(&net.precision(), &k, 1e-10));
    }
}
