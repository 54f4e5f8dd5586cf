//! Latent-variable (multidimensional IRT) representation of an Ising model.
//!
//! In {0,1} coding `x_i² = x_i`, so adding `cI` to the couplings and `−c/2`
//! to the main effects leaves the distribution unchanged. With `c` large
//! enough, `Σ + cI = QΛQᵀ` is positive semidefinite and
//!
//! ```text
//! exp(½ xᵀ(Σ + cI)x) = Π_r exp(½ (√λ_r q_rᵀx)²) = E_θ[exp(Σ_i x_i a_iᵀθ)],
//! ```
//!
//! with `θ ~ N(0, I_R)` and loadings `a_ir = √λ_r q_ir`. The Ising pmf is
//! therefore the configuration-normalized mixture of item-wise exponential
//! terms `exp(x_i(μ_i − c/2 + a_iᵀθ))` over standard-normal latents.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ising_recode, logistic, IsingError, IsingParams};
use crate::linalg;
use crate::pmf::{config_states, Coding, Pmf};
use crate::quadrature::{gauss_hermite_normal, tensor_grid};

/// Eigenvalues at or below this fraction of the largest are treated as zero.
pub const EIGEN_REL_TOL: f64 = 1e-10;
const AUTO_SHIFT_MARGIN: f64 = 1e-9;
const MAX_FACTORS: usize = 4;
const MIN_QUAD_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shift {
    /// Smallest shift making `Σ + cI` positive semidefinite, plus 1e-9.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirtParams {
    /// Item intercepts `μ_i − c/2` (ZeroOne coding).
    pub intercepts: Vec<f64>,
    /// `P x R` loadings, column `r` scaled by `√λ_r`.
    #[serde(with = "crate::serde_matrix")]
    pub loadings: DMatrix<f64>,
    pub shift_c: f64,
    pub eigvals: Vec<f64>,
}

impl MirtParams {
    pub fn n_items(&self) -> usize {
        self.intercepts.len()
    }

    pub fn n_factors(&self) -> usize {
        self.eigvals.len()
    }
}

/// Eigen-decomposes the shifted coupling matrix into MIRT loadings.
/// PlusMinus models are recoded to ZeroOne first.
pub fn ising_to_mirt(params: &IsingParams, shift: Shift) -> Result<MirtParams, IsingError> {
    params.validate()?;
    let zo = ising_recode(params, Coding::ZeroOne);
    let p = zo.p();
    let (vals, vecs) = linalg::sym_eigen_desc(&zo.sigma);
    let c = match shift {
        Shift::Auto => (-vals[p - 1]).max(0.0) + AUTO_SHIFT_MARGIN,
        Shift::Value(c) => c,
    };
    let shifted: Vec<f64> = vals.iter().map(|v| v + c).collect();
    let largest = shifted[0];
    let floor = EIGEN_REL_TOL * largest.abs().max(f64::MIN_POSITIVE);
    let smallest = shifted[p - 1];
    if smallest < -floor.max(1e-12) {
        return Err(IsingError::NotPsdAfterShift(smallest));
    }
    let keep: Vec<usize> = (0..p).filter(|&k| largest > 0.0 && shifted[k] > floor).collect();
    let mut loadings = DMatrix::zeros(p, keep.len());
    for (r, &k) in keep.iter().enumerate() {
        let scale = shifted[k].sqrt();
        for i in 0..p {
            loadings[(i, r)] = scale * vecs[(i, k)];
        }
    }
    Ok(MirtParams {
        intercepts: zo.mu.iter().map(|m| m - c / 2.0).collect(),
        loadings,
        shift_c: c,
        eigvals: keep.iter().map(|&k| shifted[k]).collect(),
    })
}

fn check_quadrature(mirt: &MirtParams, quad_points: usize) -> Result<(), IsingError> {
    let r = mirt.n_factors();
    if r > MAX_FACTORS {
        return Err(IsingError::TooManyFactors(r));
    }
    if quad_points < MIN_QUAD_POINTS {
        return Err(IsingError::InvalidParams(format!("need at least {MIN_QUAD_POINTS} quadrature points")));
    }
    if mirt.n_items() > super::MAX_EXACT_VARIABLES {
        return Err(IsingError::TooManyVariables(mirt.n_items()));
    }
    if mirt.loadings.shape() != (mirt.n_items(), r) {
        return Err(IsingError::InvalidParams("loadings shape does not match intercepts/eigvals".into()));
    }
    Ok(())
}

/// Marginal pmf of the latent-variable representation, in ZeroOne coding.
///
/// For each configuration, `∫ Π_i exp(x_i(μ_i + a_iᵀθ)) φ_R(θ) dθ` is
/// evaluated with the tensor Gauss–Hermite rule; the results are normalized
/// over configurations (the Ising partition function plays the role of the
/// item normalizers). This is the distribution the Ising model implies.
///
/// The integrand is `exp(xᵀμ) Π_r exp(b_r θ_r)` with `b = Aᵀx`, so the tensor
/// sum factors into a product of one-dimensional sums.
pub fn mirt_marginal_pmf(mirt: &MirtParams, quad_points: usize) -> Result<Pmf, IsingError> {
    check_quadrature(mirt, quad_points)?;
    let p = mirt.n_items();
    let r = mirt.n_factors();
    let (x, w) = gauss_hermite_normal(quad_points);
    let log_w: Vec<f64> = w.iter().map(|v| v.ln()).collect();
    let mut terms = vec![0.0; quad_points];
    let mut logw = Vec::with_capacity(1 << p);
    for k in 0..1usize << p {
        let xs = config_states(k, p, Coding::ZeroOne);
        let mut total: f64 = xs.iter().zip(&mirt.intercepts).map(|(xi, mu)| xi * mu).sum();
        for f in 0..r {
            let b: f64 = (0..p).map(|i| xs[i] * mirt.loadings[(i, f)]).sum();
            for (t, (xq, lw)) in terms.iter_mut().zip(x.iter().zip(&log_w)) {
                *t = lw + b * xq;
            }
            total += log_sum_exp(&terms);
        }
        logw.push(total);
    }
    Ok(Pmf::from_log_weights(p, Coding::ZeroOne, &logw))
}

/// Marginal pmf of a conventional compensatory 2PL MIRT model:
/// `∫ Π_i σ((2x_i − 1)(μ_i + a_iᵀθ)) φ_R(θ) dθ`, with item-wise logistic
/// normalization and standard-normal latents. Unlike
/// [`mirt_marginal_pmf`], this is *not* the Ising marginal unless the latent
/// density is tilted by `Π_i (1 + exp(μ_i + a_iᵀθ))`.
pub fn mirt_2pl_marginal_pmf(mirt: &MirtParams, quad_points: usize) -> Result<Pmf, IsingError> {
    check_quadrature(mirt, quad_points)?;
    let p = mirt.n_items();
    let r = mirt.n_factors();
    let (x, w) = gauss_hermite_normal(quad_points);
    let (nodes, weights) = tensor_grid(&x, &w, r);
    let mut probs = vec![0.0; 1 << p];
    for (theta, wq) in nodes.iter().zip(&weights) {
        let p1: Vec<f64> = (0..p)
            .map(|i| logistic(mirt.intercepts[i] + (0..r).map(|k| mirt.loadings[(i, k)] * theta[k]).sum::<f64>()))
            .collect();
        for (k, pr) in probs.iter_mut().enumerate() {
            let lik: f64 = (0..p).map(|i| if k >> i & 1 == 1 { p1[i] } else { 1.0 - p1[i] }).product();
            *pr += wq * lik;
        }
    }
    Ok(Pmf::from_weights(p, Coding::ZeroOne, &probs))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::ising_pmf_exact;

    #[test]
    fn zero_coupling_unit_shift() {
        let params = IsingParams::new(vec![0.3, -0.2, 0.1], DMatrix::zeros(3, 3), Coding::ZeroOne).unwrap();
        let m = ising_to_mirt(&params, Shift::Value(1.0)).unwrap();
        assert_eq!(m.n_factors(), 3);
        assert!(m.eigvals.iter().all(|&l| (l - 1.0).abs() < 1e-14));
        // loadings are an orthonormal basis (identity up to rotation within the
        // repeated eigenspace), so A Aᵀ = I
        let aat = &m.loadings * m.loadings.transpose();
        assert!(linalg::max_abs_diff(&aat, &DMatrix::identity(3, 3)) < 1e-12);
        for (got, mu) in m.intercepts.iter().zip([0.3, -0.2, 0.1]) {
            assert!((got - (mu - 0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn curie_weiss_single_dominant_direction() {
        let p = 4;
        let s = 0.4;
        let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { s });
        let params = IsingParams::new(vec![0.0; p], sigma, Coding::ZeroOne).unwrap();
        let m = ising_to_mirt(&params, Shift::Auto).unwrap();
        // Σ has eigenvalues (P−1)s and −s; the auto shift c = s + 1e-9 leaves
        // P·s + 1e-9 and P−1 copies of 1e-9.
        assert!((m.shift_c - (s + 1e-9)).abs() < 1e-12);
        assert!((m.eigvals[0] - p as f64 * s).abs() < 1e-8);
        assert!(m.eigvals[1..].iter().all(|&l| l < 1e-8));
        let col = m.loadings.column(0);
        let want = (s * p as f64).sqrt() / (p as f64).sqrt();
        for i in 0..p {
            assert!((col[i].abs() - want).abs() < 1e-8);
            assert_eq!(col[i].signum(), col[0].signum());
        }
    }

    #[test]
    fn insufficient_shift_rejected() {
        let sigma = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let params = IsingParams::new(vec![0.0; 2], sigma, Coding::ZeroOne).unwrap();
        assert!(matches!(ising_to_mirt(&params, Shift::Value(0.5)), Err(IsingError::NotPsdAfterShift(_))));
    }

    #[test]
    fn no_factors_gives_independent_items() {
        let m =
            MirtParams { intercepts: vec![0.4, -1.0], loadings: DMatrix::zeros(2, 0), shift_c: 0.0, eigvals: vec![] };
        let pmf = mirt_marginal_pmf(&m, 20).unwrap();
        let q = [logistic(0.4), logistic(-1.0)];
        for k in 0..4 {
            let want: f64 = (0..2).map(|i| if k >> i & 1 == 1 { q[i] } else { 1.0 - q[i] }).product();
            assert!((pmf.probs[k] - want).abs() < 1e-15);
        }
    }

    /// Composite Simpson rule on [-12, 12] as an independent oracle for the
    /// one-factor, one-item integrals.
    fn simpson(f: impl Fn(f64) -> f64) -> f64 {
        let n = 20_000;
        let (a, b) = (-12.0, 12.0);
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn phi(t: f64) -> f64 {
        (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn one_item_one_factor_matches_direct_integration() {
        let (mu, a) = (-0.3, 1.2);
        let m = MirtParams {
            intercepts: vec![mu],
            loadings: DMatrix::from_element(1, 1, a),
            shift_c: 0.0,
            eigvals: vec![a * a],
        };
        let kac = mirt_marginal_pmf(&m, 40).unwrap();
        let w1 = simpson(|t| (mu + a * t).exp() * phi(t));
        let w0 = simpson(phi);
        assert!((kac.probs[1] - w1 / (w0 + w1)).abs() < 1e-10);

        let two_pl = mirt_2pl_marginal_pmf(&m, 40).unwrap();
        let p1 = simpson(|t| logistic(mu + a * t) * phi(t));
        assert!((two_pl.probs[1] - p1).abs() < 1e-10);
    }

    #[test]
    fn quadrature_guards() {
        let m = MirtParams {
            intercepts: vec![0.0; 5],
            loadings: DMatrix::zeros(5, 5),
            shift_c: 0.0,
            eigvals: vec![1.0; 5],
        };
        assert_eq!(mirt_marginal_pmf(&m, 20).unwrap_err(), IsingError::TooManyFactors(5));
        let m = MirtParams { intercepts: vec![0.0], loadings: DMatrix::zeros(1, 1), shift_c: 0.0, eigvals: vec![1.0] };
        assert!(mirt_marginal_pmf(&m, 10).is_err());
    }

    #[test]
    fn bridge_matches_exact_pmf() {
        let sigma = DMatrix::from_row_slice(3, 3, &[0.0, 0.8, -0.5, 0.8, 0.0, 0.3, -0.5, 0.3, 0.0]);
        let params = IsingParams::new(vec![0.2, -0.4, 0.1], sigma, Coding::PlusMinus).unwrap();
        let exact = ising_pmf_exact(&params).unwrap();
        let m = ising_to_mirt(&params, Shift::Auto).unwrap();
        let approx = mirt_marginal_pmf(&m, 30).unwrap();
        assert!(exact.tv(&approx) < 1e-6, "tv = {}", exact.tv(&approx));
    }
}
