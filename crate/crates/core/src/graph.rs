//! Undirected sensing/communication graphs.
//!
//! Nodes are labeled `1..=n` at every interface. Edges are stored as
//! `(min, max)` pairs sorted lexicographically, and that order is the row
//! order of every edge-indexed vector and matrix in the crate.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn i(self) -> usize {
        self.0
    }

    pub fn j(self) -> usize {
        self.1
    }

    /// Label used for per-edge columns, e.g. `e_1_2`.
    pub fn label(self) -> String {
        format!("e_{}_{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    // 0-based adjacency lists, each sorted ascending.
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 1-based pairs, normalizing each to `(min, max)`.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            for node in [a, b] {
                if node == 0 || node > n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            edges.push(Edge(a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.0 - 1].push(e.1 - 1);
            adj[e.1 - 1].push(e.0 - 1);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { n, edges, adj })
    }

    pub fn complete(n: usize) -> Self {
        let pairs = (1..=n).flat_map(|i| ((i + 1)..=n).map(move |j| (i, j)));
        Self::new(n, pairs).expect("complete graph is valid")
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, []).expect("edgeless graph is valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Position of `(i, j)` (either orientation) in the canonical edge order.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&Edge(i.min(j), i.max(j))).ok()
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            Err(Error::NodeOutOfRange { node: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Neighbor set N_i, 1-based and ascending.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        self.check_node(i)?;
        Ok(self.adj[i - 1].iter().map(|&j| j + 1).collect())
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.adj[i - 1].len())
    }

    pub fn adjacency<T: Real>(&self) -> Matrix<T> {
        let mut a = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.0 - 1, e.1 - 1)] = T::one();
            a[(e.1 - 1, e.0 - 1)] = T::one();
        }
        a
    }

    pub fn laplacian<T: Real>(&self) -> Matrix<T> {
        let mut l = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            let (a, b) = (e.0 - 1, e.1 - 1);
            l[(a, b)] = -T::one();
            l[(b, a)] = -T::one();
            l[(a, a)] = l[(a, a)] + T::one();
            l[(b, b)] = l[(b, b)] + T::one();
        }
        l
    }

    /// Breadth-first reachability from node 1. Graphs with zero or one node count as connected.
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }
}
