//! Gauss–Hermite quadrature against the standard normal density.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights such that `sum w_k f(x_k)` approximates `E[f(Z)]` for
/// `Z ~ N(0, 1)`. Computed with the Golub–Welsch eigenvalue method on the
/// Jacobi matrix of the probabilists' Hermite polynomials; exact for
/// polynomials of degree up to `2n - 1`.
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetric rule: enforce exact symmetry of nodes and weights
    for k in 0..n / 2 {
        let (a, b) = (pairs[k], pairs[n - 1 - k]);
        let x = 0.5 * (b.0 - a.0);
        let w = 0.5 * (a.1 + b.1);
        pairs[k] = (-x, w);
        pairs[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Tensor-product grid in `dim` dimensions built from a 1-D rule. Returns
/// the flattened node coordinates (row per node) and weights.
pub fn tensor_grid(nodes: &[f64], weights: &[f64], dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = nodes.len();
    let total = n.pow(dim as u32);
    let mut pts = Vec::with_capacity(total);
    let mut ws = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut pt = Vec::with_capacity(dim);
        let mut w = 1.0;
        for _ in 0..dim {
            let idx = k % n;
            k /= n;
            pt.push(nodes[idx]);
            w *= weights[idx];
        }
        pts.push(pt);
        ws.push(w);
    }
    (pts, ws)
}
