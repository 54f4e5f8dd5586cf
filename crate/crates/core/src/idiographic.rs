//! The encompassing idiographic network model.
//!
//! A latent topology assigns every pair of nodes an edge inclusion
//! probability `θᵢⱼ`. A realized graph `w` partitions the nodes into
//! clusters; every cluster takes a single ±1 state. Weighting graphs by the
//! Erdős–Rényi factor times the cluster weights `λ_c = 2·cosh(Σ_{i∈c} μᵢ)`
//! (the random-cluster measure) and coloring each cluster with
//! `P(+1) = e^{s_c}/(e^{s_c}+e^{−s_c})` yields an Ising model with couplings
//! `σᵢⱼ = −½·log(1−θᵢⱼ)`. Plain Erdős–Rényi weighting gives the
//! Divide-and-Color model instead.

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::ising::{IsingError, IsingParams};
use crate::pmf::{config_index, Coding, Pmf};
use crate::rng::{self, Rng};

/// Largest `P` for exact enumeration over all `2^{P(P−1)/2}` graphs.
pub const MAX_EXACT_VARIABLES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdiographicError {
    #[error("exact enumeration supports at most {max} variables, got {p}")]
    TooManyVariables { p: usize, max: usize },
    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("negative coupling {value} between nodes {i} and {j} has no random-cluster representation")]
    NegativeCoupling { i: usize, j: usize, value: f64 },
    #[error(transparent)]
    Ising(#[from] IsingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Graphs weighted by the Erdős–Rényi factor alone (Divide-and-Color).
    Er,
    /// Graphs weighted by the Erdős–Rényi factor times the cluster weights.
    RandomCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentTopology {
    pub p: usize,
    #[serde(with = "crate::serde_matrix")]
    pub edge_prob: DMatrix<f64>,
    #[serde(default)]
    pub realized_edges: Option<Graph>,
}

impl LatentTopology {
    pub fn new(edge_prob: DMatrix<f64>) -> Result<Self, IdiographicError> {
        let t = LatentTopology { p: edge_prob.nrows(), edge_prob, realized_edges: None };
        t.validate()?;
        Ok(t)
    }

    /// Same inclusion probability on every pair.
    pub fn uniform(p: usize, theta: f64) -> Result<Self, IdiographicError> {
        LatentTopology::new(DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { theta }))
    }

    pub fn validate(&self) -> Result<(), IdiographicError> {
        let p = self.p;
        if self.edge_prob.shape() != (p, p) {
            return Err(IdiographicError::InvalidTopology(format!("edge_prob must be {p}x{p}")));
        }
        for i in 0..p {
            if self.edge_prob[(i, i)] != 0.0 {
                return Err(IdiographicError::InvalidTopology("edge_prob diagonal must be zero".into()));
            }
            for j in 0..p {
                let t = self.edge_prob[(i, j)];
                if !(0.0..1.0).contains(&t) {
                    return Err(IdiographicError::InvalidTopology(format!("edge_prob[{i}][{j}] = {t} outside [0, 1)")));
                }
                if t != self.edge_prob[(j, i)] {
                    return Err(IdiographicError::InvalidTopology("edge_prob is not symmetric".into()));
                }
            }
        }
        if let Some(w) = &self.realized_edges {
            if w.n() != p {
                return Err(IdiographicError::InvalidTopology("realized graph has the wrong node count".into()));
            }
        }
        Ok(())
    }

    /// Log Erdős–Rényi probability of `w`.
    pub fn er_log_prob(&self, w: &Graph) -> f64 {
        let mut s = 0.0;
        for i in 0..self.p {
            for j in (i + 1)..self.p {
                let t = self.edge_prob[(i, j)];
                s += if w.has_edge(i, j) { t.ln() } else { (-t).ln_1p() };
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    /// Cluster id per node; ids are numbered by smallest member.
    pub assignment: Vec<usize>,
    pub count: usize,
}

impl ClusterPartition {
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == c).collect()
    }
}

/// `σ = −½·log(1−θ)` for `θ ∈ [0, 1)`.
pub fn theta_to_sigma(theta: f64) -> Result<f64, IdiographicError> {
    if !(0.0..1.0).contains(&theta) {
        return Err(IdiographicError::Domain { what: "theta_to_sigma", value: theta });
    }
    Ok(-0.5 * (-theta).ln_1p())
}

/// `θ = 1 − e^{−2σ}` for `σ ≥ 0`.
pub fn sigma_to_theta(sigma: f64) -> Result<f64, IdiographicError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(IdiographicError::Domain { what: "sigma_to_theta", value: sigma });
    }
    Ok(-(-2.0 * sigma).exp_m1())
}

/// Ising model (±1 coding) implied by a topology and main effects.
pub fn topology_to_ising(topology: &LatentTopology, mu: &[f64]) -> Result<IsingParams, IdiographicError> {
    topology.validate()?;
    check_mu(topology.p, mu)?;
    let p = topology.p;
    let mut sigma = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            if i != j {
                sigma[(i, j)] = theta_to_sigma(topology.edge_prob[(i, j)])?;
            }
        }
    }
    Ok(IsingParams::new(mu.to_vec(), sigma, Coding::PlusMinus)?)
}

/// Topology and main effects of a ferromagnetic Ising model, expressed in
/// ±1 coding first.
pub fn ising_to_topology(params: &IsingParams) -> Result<(LatentTopology, Vec<f64>), IdiographicError> {
    params.validate()?;
    let pm = crate::ising::ising_recode(params, Coding::PlusMinus);
    let p = pm.p();
    let mut theta = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let s = pm.sigma[(i, j)];
            if s < 0.0 {
                return Err(IdiographicError::NegativeCoupling { i, j, value: s });
            }
            theta[(i, j)] = sigma_to_theta(s)?;
        }
    }
    // σ large enough to round θ to 1 has no finite topology
    if theta.iter().any(|&t| t >= 1.0) {
        return Err(IdiographicError::InvalidTopology("coupling too strong: inclusion probability rounds to 1".into()));
    }
    Ok((LatentTopology::new(theta)?, pm.mu))
}

fn check_mu(p: usize, mu: &[f64]) -> Result<(), IdiographicError> {
    if mu.len() != p || mu.iter().any(|m| !m.is_finite()) {
        return Err(IdiographicError::InvalidTopology(format!("mu must hold {p} finite values")));
    }
    Ok(())
}

fn sample_er_with(topology: &LatentTopology, rng: &mut Rng) -> Graph {
    let p = topology.p;
    let mut w = Graph::empty(p);
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.gen::<f64>() < topology.edge_prob[(i, j)] {
                w.add_edge(i, j);
            }
        }
    }
    w
}

/// Draws each edge independently with probability `θᵢⱼ`.
pub fn sample_er(topology: &LatentTopology, seed: u64) -> Graph {
    sample_er_with(topology, &mut rng::seeded(seed))
}

/// Connected components by union-find.
pub fn clusters(w: &Graph) -> ClusterPartition {
    let n = w.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for (i, j) in w.edges() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut assignment = vec![0; n];
    let mut count = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if ids[r] == usize::MAX {
            ids[r] = count;
            count += 1;
        }
        assignment[v] = ids[r];
    }
    ClusterPartition { assignment, count }
}

/// `λ_c = 2·cosh(Σ_{i∈c} μᵢ)`.
pub fn cluster_weight(mu: &[f64], cluster: &[usize]) -> f64 {
    assert!(!cluster.is_empty(), "cluster must be nonempty");
    2.0 * cluster.iter().map(|&i| mu[i]).sum::<f64>().cosh()
}

fn log_cluster_weights(mu: &[f64], part: &ClusterPartition) -> f64 {
    (0..part.count).map(|c| cluster_weight(mu, &part.members(c)).ln()).sum()
}

fn color_with(w: &Graph, mu: &[f64], rng: &mut Rng) -> Vec<f64> {
    let part = clusters(w);
    let states: Vec<f64> = (0..part.count)
        .map(|c| {
            let s: f64 = part.members(c).iter().map(|&i| mu[i]).sum();
            if rng.gen::<f64>() < crate::ising::logistic(2.0 * s) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    part.assignment.iter().map(|&c| states[c]).collect()
}

/// Colors every cluster of `w` with a single ±1 state, `+1` with
/// probability `e^{s_c}/(e^{s_c}+e^{−s_c})`, `s_c = Σ_{i∈c} μᵢ`.
pub fn color(w: &Graph, mu: &[f64], seed: u64) -> Vec<f64> {
    assert_eq!(w.n(), mu.len(), "one main effect per node");
    color_with(w, mu, &mut rng::seeded(seed))
}

fn graph_from_mask(p: usize, pairs: &[(usize, usize)], mask: usize) -> Graph {
    let edges: Vec<(usize, usize)> =
        pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e).collect();
    Graph::from_edges(p, &edges)
}

/// Exact marginal over ±1 configurations, summing `p(x|w)·p(w)` over every
/// graph on `P ≤ 4` nodes.
pub fn marginal_pmf_exact(
    topology: &LatentTopology,
    mu: &[f64],
    weighting: Weighting,
) -> Result<Pmf, IdiographicError> {
    topology.validate()?;
    let p = topology.p;
    if p > MAX_EXACT_VARIABLES {
        return Err(IdiographicError::TooManyVariables { p, max: MAX_EXACT_VARIABLES });
    }
    check_mu(p, mu)?;
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    let n_configs = 1usize << p;
    let mut probs = vec![0.0; n_configs];
    let mut total_weight = 0.0;
    for mask in 0..(1usize << pairs.len()) {
        let w = graph_from_mask(p, &pairs, mask);
        let er = topology.er_log_prob(&w).exp();
        if er == 0.0 {
            continue;
        }
        let part = clusters(&w);
        let graph_weight = match weighting {
            Weighting::Er => er,
            Weighting::RandomCluster => er * log_cluster_weights(mu, &part).exp(),
        };
        total_weight += graph_weight;
        let sums: Vec<f64> = (0..part.count).map(|c| part.members(c).iter().map(|&i| mu[i]).sum()).collect();
        // each cluster coloring is one configuration
        for coloring in 0..(1usize << part.count) {
            let mut pr = 1.0;
            let mut x = vec![0.0; p];
            for (c, &s) in sums.iter().enumerate() {
                let up = coloring >> c & 1 == 1;
                pr *= crate::ising::logistic(if up { 2.0 * s } else { -2.0 * s });
                for v in part.members(c) {
                    x[v] = if up { 1.0 } else { -1.0 };
                }
            }
            probs[config_index(&x, Coding::PlusMinus).unwrap()] += graph_weight * pr;
        }
    }
    Ok(Pmf::from_weights(p, Coding::PlusMinus, &probs.iter().map(|v| v / total_weight).collect::<Vec<_>>()))
}

/// Monte-Carlo marginal from `draws` Erdős–Rényi graphs and colorings.
///
/// Under `RandomCluster` weighting each draw is importance-weighted by its
/// cluster weights, so no random-cluster sampler is needed.
pub fn marginal_pmf_monte_carlo(
    topology: &LatentTopology,
    mu: &[f64],
    weighting: Weighting,
    draws: usize,
    seed: u64,
) -> Result<Pmf, IdiographicError> {
    topology.validate()?;
    check_mu(topology.p, mu)?;
    let p = topology.p;
    if p > 20 {
        return Err(IdiographicError::TooManyVariables { p, max: 20 });
    }
    if draws == 0 {
        return Err(IdiographicError::InvalidTopology("draws must be positive".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut log_w = Vec::with_capacity(draws);
    let mut index = Vec::with_capacity(draws);
    for _ in 0..draws {
        let w = sample_er_with(topology, &mut rng);
        let lw = match weighting {
            Weighting::Er => 0.0,
            Weighting::RandomCluster => log_cluster_weights(mu, &clusters(&w)),
        };
        let x = color_with(&w, mu, &mut rng);
        log_w.push(lw);
        index.push(config_index(&x, Coding::PlusMinus).unwrap());
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights = vec![0.0; 1 << p];
    for (k, lw) in index.iter().zip(&log_w) {
        weights[*k] += (lw - max).exp();
    }
    Ok(Pmf::from_weights(p, Coding::PlusMinus, &weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::ising_pmf_exact;

    #[test]
    fn theta_sigma_examples() {
        assert_eq!(theta_to_sigma(0.0).unwrap(), 0.0);
        assert!((theta_to_sigma(0.5).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((sigma_to_theta(1.0).unwrap() - (1.0 - (-2f64).exp())).abs() < 1e-15);
        assert!((sigma_to_theta(1.0).unwrap() - 0.86466).abs() < 1e-5);
        for &t in &[0.0, 1e-9, 0.1, 0.5, 0.9, 0.999] {
            assert!((sigma_to_theta(theta_to_sigma(t).unwrap()).unwrap() - t).abs() < 1e-14);
        }
        assert!(theta_to_sigma(1.0).is_err());
        assert!(theta_to_sigma(-0.1).is_err());
        assert!(sigma_to_theta(-0.1).is_err());
        assert!(sigma_to_theta(f64::NAN).is_err());
    }

    #[test]
    fn sample_er_limits() {
        let empty = LatentTopology::uniform(5, 0.0).unwrap();
        let full = LatentTopology::uniform(5, 1.0 - 1e-12).unwrap();
        for s in 0..50 {
            assert_eq!(sample_er(&empty, s).n_edges(), 0);
            assert_eq!(sample_er(&full, s), Graph::complete(5));
        }
        assert_eq!(
            sample_er(&LatentTopology::uniform(6, 0.5).unwrap(), 9),
            sample_er(&LatentTopology::uniform(6, 0.5).unwrap(), 9)
        );
    }

    #[test]
    fn sample_er_edge_frequencies() {
        let t = LatentTopology::uniform(3, 0.5).unwrap();
        let mut rng = rng::seeded(11);
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            let w = sample_er_with(&t, &mut rng);
            for (k, &(i, j)) in [(0, 1), (0, 2), (1, 2)].iter().enumerate() {
                counts[k] += w.has_edge(i, j) as usize;
            }
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn cluster_examples() {
        assert_eq!(clusters(&Graph::empty(4)).count, 4);
        assert_eq!(clusters(&Graph::from_edges(3, &[(0, 1), (1, 2)])).count, 1);
        let two = clusters(&Graph::from_edges(4, &[(0, 2), (1, 3)]));
        assert_eq!(two, ClusterPartition { assignment: vec![0, 1, 0, 1], count: 2 });
    }

    #[test]
    fn cluster_weight_examples() {
        assert_eq!(cluster_weight(&[0.0, 0.0], &[0, 1]), 2.0);
        assert!((cluster_weight(&[1.0], &[0]) - 3.0862).abs() < 1e-4);
        assert_eq!(cluster_weight(&[1.0, -1.0], &[0, 1]), 2.0);
    }

    #[test]
    fn coloring_respects_clusters() {
        let w = Graph::complete(3);
        let mut rng = rng::seeded(5);
        let n = 100_000;
        let mut plus = 0;
        for _ in 0..n {
            let x = color_with(&w, &[0.0; 3], &mut rng);
            assert!(x.iter().all(|&v| v == x[0]));
            plus += (x[0] > 0.0) as usize;
        }
        assert!((plus as f64 / n as f64 - 0.5).abs() < 0.01);

        let mut hi = 0;
        for s in 0..10_000 {
            hi += (color(&Graph::empty(1), &[10.0], s)[0] > 0.0) as usize;
        }
        assert!(hi as f64 / 10_000.0 > 0.999);

        let mut counts = [0usize; 4];
        for _ in 0..n {
            let x = color_with(&Graph::empty(2), &[0.0; 2], &mut rng);
            counts[config_index(&x, Coding::PlusMinus).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn exact_marginal_examples() {
        let zero = LatentTopology::uniform(3, 0.0).unwrap();
        for weighting in [Weighting::Er, Weighting::RandomCluster] {
            let pmf = marginal_pmf_exact(&zero, &[0.0; 3], weighting).unwrap();
            assert!(pmf.tv(&Pmf::uniform(3, Coding::PlusMinus)) < 1e-15);
        }

        let t = LatentTopology::uniform(3, 0.4).unwrap();
        let rc = marginal_pmf_exact(&t, &[0.0; 3], Weighting::RandomCluster).unwrap();
        let sigma = -0.5 * 0.6f64.ln();
        let ising = IsingParams::new(
            vec![0.0; 3],
            DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { sigma }),
            Coding::PlusMinus,
        )
        .unwrap();
        assert!(rc.tv(&ising_pmf_exact(&ising).unwrap()) < 1e-10);

        let dc = marginal_pmf_exact(&LatentTopology::uniform(2, 0.5).unwrap(), &[0.0; 2], Weighting::Er).unwrap();
        assert!((dc.prob(&[1.0, 1.0]) - 0.375).abs() < 1e-15);
        assert!((dc.prob(&[-1.0, -1.0]) - 0.375).abs() < 1e-15);
        assert!((dc.prob(&[1.0, -1.0]) - 0.125).abs() < 1e-15);
        assert!((dc.prob(&[-1.0, 1.0]) - 0.125).abs() < 1e-15);

        assert!(matches!(
            marginal_pmf_exact(&LatentTopology::uniform(5, 0.1).unwrap(), &[0.0; 5], Weighting::Er),
            Err(IdiographicError::TooManyVariables { p: 5, max: 4 })
        ));
    }

    #[test]
    fn random_cluster_matches_ising_with_main_effects() {
        let theta = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.3, 0.7, 0.0, 0.3, 0.0, 0.1, 0.5, 0.7, 0.1, 0.0, 0.2, 0.0, 0.5, 0.2, 0.0],
        );
        let t = LatentTopology::new(theta).unwrap();
        let mu = [0.4, -0.9, 0.2, 0.75];
        let rc = marginal_pmf_exact(&t, &mu, Weighting::RandomCluster).unwrap();
        let ising = topology_to_ising(&t, &mu).unwrap();
        assert!(rc.tv(&ising_pmf_exact(&ising).unwrap()) < 1e-10);
        let (back, mu_back) = ising_to_topology(&ising).unwrap();
        assert!(crate::linalg::max_abs_diff(&back.edge_prob, &t.edge_prob) < 1e-14);
        assert_eq!(mu_back, mu.to_vec());
    }

    #[test]
    fn negative_couplings_rejected() {
        let ising =
            IsingParams::new(vec![0.0; 2], DMatrix::from_row_slice(2, 2, &[0.0, -0.2, -0.2, 0.0]), Coding::PlusMinus)
                .unwrap();
        assert!(matches!(ising_to_topology(&ising), Err(IdiographicError::NegativeCoupling { .. })));
    }

    #[test]
    fn monte_carlo_converges_to_exact() {
        let t = LatentTopology::uniform(3, 0.45).unwrap();
        let mu = [0.3, -0.2, 0.5];
        for weighting in [Weighting::Er, Weighting::RandomCluster] {
            let exact = marginal_pmf_exact(&t, &mu, weighting).unwrap();
            let small = marginal_pmf_monte_carlo(&t, &mu, weighting, 1_000, 3).unwrap().tv(&exact);
            let large = marginal_pmf_monte_carlo(&t, &mu, weighting, 100_000, 3).unwrap().tv(&exact);
            assert!(large < small, "{weighting:?}: {large} !< {small}");
            assert!(large < 0.01);
        }
    }

    #[test]
    fn topology_validation() {
        assert!(LatentTopology::uniform(3, 1.0).is_err());
        assert!(LatentTopology::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.3, 0.0])).is_err());
        let json = r#"{"p":2,"edge_prob":[[0.0,0.5],[0.5,0.0]],"realized_edges":[[0,1],[1,0]]}"#;
        let t: LatentTopology = serde_json::from_str(json).unwrap();
        assert!(t.validate().is_ok());
        assert_eq!(t.realized_edges.unwrap().n_edges(), 1);
    }
}
