//! Recurrence networks: `A = R − I` read as an undirected graph, with
//! clustering, path-length and assortativity summaries.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::RecurrenceMatrix;
use crate::graph::Graph;

/// `None` marks a statistic that is undefined for the graph (no connected
/// triples, no component with two nodes, zero degree variance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnSummary {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub density: f64,
    pub degree_mean: f64,
    pub degree_sd: f64,
    pub degree_min: usize,
    pub degree_max: usize,
    pub local_clustering: Vec<f64>,
    /// Mean local clustering over all nodes.
    pub global_clustering: f64,
    pub transitivity: Option<f64>,
    /// Mean shortest-path length over ordered node pairs of the largest
    /// connected component.
    pub average_path_length: Option<f64>,
    pub largest_component: usize,
    pub assortativity: Option<f64>,
}

pub fn recurrence_network(rm: &RecurrenceMatrix) -> Graph {
    let t = rm.t();
    let mut g = Graph::empty(t);
    for i in 0..t {
        for j in (i + 1)..t {
            if rm.get(i, j) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

fn bfs(g: &Graph, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for u in g.neighbors(v) {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Node set of the largest connected component; ties go to the component
/// holding the smallest node index.
fn largest_component(g: &Graph) -> Vec<usize> {
    let mut seen = vec![false; g.n()];
    let mut best: Vec<usize> = Vec::new();
    for v in 0..g.n() {
        if seen[v] {
            continue;
        }
        let comp: Vec<usize> = bfs(g, v).iter().enumerate().filter(|(_, d)| d.is_some()).map(|(u, _)| u).collect();
        for &u in &comp {
            seen[u] = true;
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

pub fn rn_metrics(g: &Graph) -> RnSummary {
    let n = g.n();
    let degrees: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let edges = g.edges();

    let mut triangles_at = vec![0usize; n];
    for v in 0..n {
        let nb: Vec<usize> = g.neighbors(v).collect();
        for a in 0..nb.len() {
            for b in (a + 1)..nb.len() {
                if g.has_edge(nb[a], nb[b]) {
                    triangles_at[v] += 1;
                }
            }
        }
    }
    let local_clustering: Vec<f64> = (0..n)
        .map(|v| {
            let k = degrees[v];
            if k < 2 {
                0.0
            } else {
                triangles_at[v] as f64 / (k * (k - 1) / 2) as f64
            }
        })
        .collect();
    let global_clustering = if n == 0 { 0.0 } else { local_clustering.iter().sum::<f64>() / n as f64 };
    let triples: usize = degrees.iter().map(|&k| k * k.saturating_sub(1) / 2).sum();
    // each triangle is counted once at each of its three corners
    let closed: usize = triangles_at.iter().sum();
    let transitivity = (triples > 0).then(|| closed as f64 / triples as f64);

    let component = largest_component(g);
    let average_path_length = (component.len() >= 2).then(|| {
        let total: usize = component.iter().map(|&s| bfs(g, s).iter().flatten().sum::<usize>()).sum();
        total as f64 / (component.len() * (component.len() - 1)) as f64
    });

    let assortativity = {
        let pairs: Vec<(f64, f64)> = edges
            .iter()
            .flat_map(|&(i, j)| [(degrees[i] as f64, degrees[j] as f64), (degrees[j] as f64, degrees[i] as f64)])
            .collect();
        let m = pairs.len() as f64;
        if pairs.is_empty() {
            None
        } else {
            let mean = pairs.iter().map(|p| p.0).sum::<f64>() / m;
            let var = pairs.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / m;
            let cov = pairs.iter().map(|p| (p.0 - mean) * (p.1 - mean)).sum::<f64>() / m;
            (var > 1e-12 * mean * mean).then(|| cov / var)
        }
    };

    let degree_mean = if n == 0 { 0.0 } else { degrees.iter().sum::<usize>() as f64 / n as f64 };
    let degree_sd = if n == 0 {
        0.0
    } else {
        (degrees.iter().map(|&k| (k as f64 - degree_mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    RnSummary {
        n_nodes: n,
        n_edges: edges.len(),
        density: if n < 2 { 0.0 } else { 2.0 * edges.len() as f64 / (n * (n - 1)) as f64 },
        degree_mean,
        degree_sd,
        degree_min: degrees.iter().copied().min().unwrap_or(0),
        degree_max: degrees.iter().copied().max().unwrap_or(0),
        local_clustering,
        global_clustering,
        transitivity,
        average_path_length,
        largest_component: component.len(),
        assortativity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::Norm;

    #[test]
    fn network_from_matrix() {
        let all = RecurrenceMatrix::from_rows(&vec![vec![true; 4]; 4], 1.0, Norm::Euclidean).unwrap();
        assert_eq!(recurrence_network(&all), Graph::complete(4));
        let id: Vec<Vec<bool>> = (0..4).map(|i| (0..4).map(|j| i == j).collect()).collect();
        let id = RecurrenceMatrix::from_rows(&id, 1.0, Norm::Euclidean).unwrap();
        assert_eq!(recurrence_network(&id).n_edges(), 0);
    }

    #[test]
    fn complete_graph() {
        let s = rn_metrics(&Graph::complete(4));
        assert_eq!(s.local_clustering, vec![1.0; 4]);
        assert_eq!(s.global_clustering, 1.0);
        assert_eq!(s.transitivity, Some(1.0));
        assert_eq!(s.average_path_length, Some(1.0));
        assert_eq!(s.assortativity, None);
        assert_eq!(s.density, 1.0);
    }

    #[test]
    fn path_graph() {
        let s = rn_metrics(&Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]));
        assert_eq!(s.transitivity, Some(0.0));
        assert!((s.average_path_length.unwrap() - 10.0 / 6.0).abs() < 1e-15);
        // endpoint degree pairs (1,2),(2,2),(2,1) in both directions
        assert!((s.assortativity.unwrap() - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn triangle_with_pendant() {
        let s = rn_metrics(&Graph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]));
        assert!((s.transitivity.unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(s.local_clustering[0], 1.0);
        assert_eq!(s.local_clustering[1], 1.0);
        assert!((s.local_clustering[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.local_clustering[3], 0.0);
    }

    #[test]
    fn edgeless_graph_has_undefined_markers() {
        let s = rn_metrics(&Graph::empty(3));
        assert_eq!((s.transitivity, s.average_path_length, s.assortativity), (None, None, None));
        assert_eq!(s.largest_component, 1);
    }
}
