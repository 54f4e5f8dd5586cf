//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative eigenvalue floor used when deciding whether a symmetric matrix is
/// positive definite.
pub const SPD_REL_FLOOR: f64 = 1e-10;

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order (columns of the returned matrix follow the same order).
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn min_max_eigenvalue(m: &DMatrix<f64>) -> (f64, f64) {
    let vals = SymmetricEigen::new(m.clone()).eigenvalues;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// True when the smallest eigenvalue exceeds `rel_floor` times the largest.
pub fn is_positive_definite(m: &DMatrix<f64>, rel_floor: f64) -> bool {
    if m.nrows() == 0 {
        return false;
    }
    let (min, max) = min_max_eigenvalue(m);
    max > 0.0 && min > rel_floor * max
}

pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    m.nrows() == 0 || min_max_eigenvalue(m).0 >= -tol
}

/// Inverse of a symmetric positive definite matrix, symmetrized on output.
pub fn spd_inverse(m: &DMatrix<f64>, rel_floor: f64) -> Option<DMatrix<f64>> {
    if !is_positive_definite(m, rel_floor) {
        return None;
    }
    let inv = m.clone().cholesky()?.inverse();
    Some(symmetrize(&inv))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue modulus. Uses a bounded real Schur decomposition and
/// falls back to Gelfand's formula by repeated squaring if it fails to
/// converge.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.amax() == 0.0 {
        return 0.0;
    }
    match Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => {
            let norm = m.norm();
            let mut a = m / norm;
            let mut log_scale = norm.ln();
            let squarings = 30;
            for _ in 0..squarings {
                a = &a * &a;
                let n = a.norm();
                if n == 0.0 {
                    return 0.0;
                }
                log_scale = 2.0 * log_scale + n.ln();
                a /= n;
            }
            (log_scale / 2f64.powi(squarings)).exp()
        }
    }
}

/// Sample covariance of the rows of `data` with the given denominator.
pub fn covariance(data: &DMatrix<f64>, denom: f64) -> DMatrix<f64> {
    let n = data.nrows();
    let p = data.ncols();
    let means: Vec<f64> = (0..p).map(|j| data.column(j).sum() / n as f64).collect();
    let mut cov = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let mut s = 0.0;
            for t in 0..n {
                s += (data[(t, i)] - means[i]) * (data[(t, j)] - means[j]);
            }
            cov[(i, j)] = s / denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Rescale a covariance matrix to a correlation matrix.
pub fn to_correlation(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d: Vec<f64> = (0..cov.nrows()).map(|i| cov[(i, i)].sqrt()).collect();
    DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| cov[(i, j)] / (d[i] * d[j]))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Least-squares solution of `x·β = y` by thin QR; `None` when `x` is
/// rank deficient relative to its largest pivot.
pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = x.ncols();
    if x.nrows() < k {
        return None;
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let rmax = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| !(r[(i, i)].abs() > 1e-10 * rmax)) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
}

/// Row-major copy of a matrix, the layout used by every serialized form.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return None;
    }
    Some(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}
