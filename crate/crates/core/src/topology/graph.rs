use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub length: f64,
}

/// A connected finite metric graph together with its breadth-first spanning
/// tree and the induced integer cocycle basis: the j-th non-tree edge maps to
/// the j-th standard basis vector of `Z^k`, tree edges map to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertices: usize,
    edges: Vec<Edge>,
    tree: Vec<bool>,
    cocycles: Vec<Vec<i64>>,
    /// `(edge, +1)` when the vertex is the tail, `(edge, -1)` for the head.
    incidence: Vec<Vec<(usize, i8)>>,
    rank: usize,
}

impl MetricGraph {
    pub fn new(vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::model("graph has no vertices"));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.tail >= vertices || e.head >= vertices {
                return Err(Error::model(format!("edge {i} references a missing vertex")));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::model(format!(
                    "edge {i} has non-positive length {}",
                    e.length
                )));
            }
        }
        let mut incidence = vec![Vec::new(); vertices];
        for (i, e) in edges.iter().enumerate() {
            incidence[e.tail].push((i, 1));
            incidence[e.head].push((i, -1));
        }

        // Breadth-first from the lowest vertex; neighbours in edge order.
        let mut tree = vec![false; edges.len()];
        let mut seen = vec![false; vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(ei, _) in &incidence[v] {
                let e = edges[ei];
                let w = if e.tail == v { e.head } else { e.tail };
                if !seen[w] {
                    seen[w] = true;
                    tree[ei] = true;
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::model("graph is not connected"));
        }
        let rank = edges.len() + 1 - vertices;
        let mut cocycles = Vec::with_capacity(edges.len());
        let mut next = 0;
        for &is_tree in &tree {
            let mut z = vec![0; rank];
            if !is_tree {
                z[next] = 1;
                next += 1;
            }
            cocycles.push(z);
        }
        Ok(MetricGraph {
            vertices,
            edges,
            tree,
            cocycles,
            incidence,
            rank,
        })
    }

    /// One vertex with a single loop of the given length.
    pub fn single_loop(length: f64) -> Result<Self> {
        Self::new(
            1,
            vec![Edge {
                tail: 0,
                head: 0,
                length,
            }],
        )
    }

    /// One vertex with two loops.
    pub fn figure_eight(a: f64, b: f64) -> Result<Self> {
        Self::new(
            1,
            vec![
                Edge {
                    tail: 0,
                    head: 0,
                    length: a,
                },
                Edge {
                    tail: 0,
                    head: 0,
                    length: b,
                },
            ],
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> Edge {
        self.edges[i]
    }

    /// Dimension of the cycle space, `|E| − |V| + 1`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.tree[e]
    }

    pub fn cocycle(&self, e: usize) -> &[i64] {
        &self.cocycles[e]
    }

    pub fn incidence(&self, v: usize) -> &[(usize, i8)] {
        &self.incidence[v]
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn min_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// All-pairs vertex distances in the base graph (Floyd-Warshall).
    pub fn vertex_distances(&self) -> Vec<Vec<f64>> {
        let n = self.vertices;
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in &self.edges {
            let l = e.length.min(d[e.tail][e.head]);
            d[e.tail][e.head] = l;
            d[e.head][e.tail] = l;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    /// Upper bound on the diameter of the base graph as a metric space
    /// (interior edge points included).
    pub fn diameter_bound(&self) -> f64 {
        let d = self.vertex_distances();
        let vmax = d.iter().flatten().copied().fold(0.0, f64::max);
        vmax + self.max_length()
    }

    /// Shortest fundamental cycle: non-tree edge plus the tree path between
    /// its endpoints.
    pub fn min_fundamental_cycle(&self) -> f64 {
        let d = self.vertex_distances();
        self.edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.tree[*i])
            .map(|(_, e)| e.length + d[e.tail][e.head])
            .fold(f64::INFINITY, f64::min)
    }

    /// Edge list of the fundamental cycle of non-tree edge `j`, as signed
    /// multiplicities per edge (+1 along the edge orientation).
    pub fn fundamental_cycle(&self, j: usize) -> Vec<i64> {
        let ei = self
            .tree
            .iter()
            .enumerate()
            .filter(|(_, t)| !**t)
            .nth(j)
            .map(|(i, _)| i)
            .expect("cycle index within rank");
        let e = self.edges[ei];
        let mut flow = vec![0i64; self.edges.len()];
        flow[ei] = 1;
        // Tree path head → tail closes the cycle.
        for (te, sign) in self.tree_path(e.head, e.tail) {
            flow[te] += sign;
        }
        flow
    }

    /// Tree path from `a` to `b` as (edge, +1 if traversed tail→head).
    pub fn tree_path(&self, a: usize, b: usize) -> Vec<(usize, i64)> {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.vertices];
        let mut seen = vec![false; self.vertices];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(v) = queue.pop_front() {
            for &(ei, _) in &self.incidence[v] {
                if !self.tree[ei] {
                    continue;
                }
                let e = self.edges[ei];
                let w = if e.tail == v { e.head } else { e.tail };
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, ei));
                    queue.push_back(w);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = b;
        while cur != a {
            let (prev, ei) = parent[cur].expect("tree spans the graph");
            let e = self.edges[ei];
            path.push((ei, if e.tail == prev { 1 } else { -1 }));
            cur = prev;
        }
        path.reverse();
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_eight_has_rank_two_and_unit_cocycles() {
        let g = MetricGraph::figure_eight(1.0, 1.0).unwrap();
        assert_eq!(g.rank(), 2);
        assert_eq!(g.cocycle(0), &[1, 0]);
        assert_eq!(g.cocycle(1), &[0, 1]);
    }

    #[test]
    fn theta_graph_tree_is_breadth_first() {
        // Two vertices joined by three edges: the first edge is the tree.
        let e = |l| Edge {
            tail: 0,
            head: 1,
            length: l,
        };
        let g = MetricGraph::new(2, vec![e(1.0), e(2.0), e(3.0)]).unwrap();
        assert_eq!(g.rank(), 2);
        assert!(g.is_tree_edge(0));
        assert_eq!(g.cocycle(0), &[0, 0]);
        assert_eq!(g.cocycle(1), &[1, 0]);
        assert_eq!(g.cocycle(2), &[0, 1]);
        assert_eq!(g.fundamental_cycle(0), vec![-1, 1, 0]);
        assert!((g.min_fundamental_cycle() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_disconnected_and_bad_lengths() {
        let bad = MetricGraph::new(
            2,
            vec![Edge {
                tail: 0,
                head: 0,
                length: 1.0,
            }],
        );
        assert!(bad.is_err());
        assert!(MetricGraph::single_loop(-1.0).is_err());
        assert!(MetricGraph::single_loop(0.0).is_err());
    }
}
