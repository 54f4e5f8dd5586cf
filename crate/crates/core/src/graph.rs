//! Simple undirected graphs stored as symmetric boolean adjacency.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct Graph {
    adj: Vec<Vec<bool>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![vec![false; n]; n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    /// Builds from a square 0/1 matrix; fails unless it is symmetric with a
    /// zero diagonal.
    pub fn from_adjacency(rows: &[Vec<bool>]) -> Result<Self, String> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err("adjacency must be square".into());
        }
        for i in 0..n {
            if rows[i][i] {
                return Err(format!("self-loop at node {i}"));
            }
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(format!("adjacency not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Graph { adj: rows.to_vec() })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Adds `{i, j}`; self-loops are ignored.
    pub fn add_edge(&mut self, i: usize, j: usize) {
        if i != j {
            self.adj[i][j] = true;
            self.adj[j][i] = true;
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().enumerate().filter(|(_, &e)| e).map(|(u, _)| u)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&e| e).count()
    }

    /// Edges `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adj[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adj
    }
}

impl TryFrom<Vec<Vec<u8>>> for Graph {
    type Error = String;

    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self, String> {
        if rows.iter().flatten().any(|&v| v > 1) {
            return Err("adjacency entries must be 0 or 1".into());
        }
        let rows: Vec<Vec<bool>> = rows.into_iter().map(|r| r.into_iter().map(|v| v == 1).collect()).collect();
        Graph::from_adjacency(&rows)
    }
}

impl From<Graph> for Vec<Vec<u8>> {
    fn from(g: Graph) -> Self {
        g.adj.into_iter().map(|r| r.into_iter().map(u8::from).collect()).collect()
    }
}
