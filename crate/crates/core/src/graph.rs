//! Exclusivity graphs and the combinatorial primitives used by the solvers.
//!
//! Vertices are labeled 1..n to match the usual notation for event
//! probabilities p_1..p_n; index 0 is reserved for the handle vector row of
//! Gram matrices. Graphs of interest here are tiny, so exact exponential
//! algorithms (bitset branch-and-bound) are used throughout, with a hard cap
//! of 64 vertices.

use crate::{CtxError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Hard cap on the vertex count for the exact enumeration routines.
pub const VERTEX_CAP: usize = 64;

/// An undirected graph on vertices 1..n without self-loops or duplicate
/// edges. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > VERTEX_CAP {
            return Err(CtxError::VertexCap(n, VERTEX_CAP));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(CtxError::Graph(format!("self-loop at vertex {a}")));
            }
            if a < 1 || a > n || b < 1 || b > n {
                return Err(CtxError::Graph(format!(
                    "edge ({a},{b}) has an endpoint outside 1..={n}"
                )));
            }
            let key = (a.min(b), a.max(b));
            if !set.insert(key) {
                return Err(CtxError::Graph(format!("duplicate edge ({},{})", key.0, key.1)));
            }
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut adj = vec![0u64; n];
        for &(a, b) in &edges {
            adj[a - 1] |= 1 << (b - 1);
            adj[b - 1] |= 1 << (a - 1);
        }
        Ok(Self { n, edges, adj })
    }

    pub fn edgeless(n: usize) -> Result<Self> {
        Self::new(n, &[])
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut e = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                e.push((i, j));
            }
        }
        Self::new(n, &e)
    }

    /// Cycle graph C_n (n >= 3).
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(CtxError::Graph("cycle needs at least 3 vertices".into()));
        }
        let mut e: Vec<(usize, usize)> = (1..n).map(|i| (i, i + 1)).collect();
        e.push((n, 1));
        Self::new(n, &e)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted edge list with 1-based labels, each pair as (min, max).
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && (self.adj[a - 1] >> (b - 1)) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v - 1].count_ones() as usize
    }

    fn neighbors_mask(&self, v0: usize) -> u64 {
        self.adj[v0]
    }

    /// Exact independence number via branch-and-bound on bitsets.
    pub fn independence_number(&self) -> usize {
        if self.n == 0 {
            return 0;
        }
        let full: u64 = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let mut best = 0usize;
        self.mis_branch(full, 0, &mut best);
        best
    }

    fn mis_branch(&self, candidates: u64, current: usize, best: &mut usize) {
        if candidates == 0 {
            if current > *best {
                *best = current;
            }
            return;
        }
        if current + candidates.count_ones() as usize <= *best {
            return;
        }
        // Branch on a candidate of maximum degree within the candidate set.
        let mut pivot = candidates.trailing_zeros() as usize;
        let mut pivot_deg = 0u32;
        let mut scan = candidates;
        while scan != 0 {
            let v = scan.trailing_zeros() as usize;
            scan &= scan - 1;
            let deg = (self.neighbors_mask(v) & candidates).count_ones();
            if deg > pivot_deg {
                pivot_deg = deg;
                pivot = v;
            }
        }
        // Include pivot.
        let include = candidates & !(self.neighbors_mask(pivot) | (1u64 << pivot));
        self.mis_branch(include, current + 1, best);
        // Exclude pivot.
        self.mis_branch(candidates & !(1u64 << pivot), current, best);
    }

    /// Finds one maximum independent set as a witness.
    pub fn maximum_independent_set(&self) -> VertexSubset {
        let alpha = self.independence_number();
        let mut chosen = Vec::new();
        let full: u64 = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        self.mis_witness(full, &mut chosen, alpha);
        VertexSubset::new(chosen.iter().map(|v| v + 1).collect()).unwrap()
    }

    fn mis_witness(&self, candidates: u64, chosen: &mut Vec<usize>, target: usize) -> bool {
        if chosen.len() == target {
            return true;
        }
        if chosen.len() + (candidates.count_ones() as usize) < target {
            return false;
        }
        let v = candidates.trailing_zeros() as usize;
        chosen.push(v);
        let include = candidates & !(self.neighbors_mask(v) | (1u64 << v));
        if self.mis_witness(include, chosen, target) {
            return true;
        }
        chosen.pop();
        self.mis_witness(candidates & !(1u64 << v), chosen, target)
    }

    /// All k-vertex cliques in lexicographic order.
    pub fn enumerate_cliques(&self, k: usize) -> Vec<VertexSubset> {
        assert!(k >= 1 && k <= self.n, "clique size must be in 1..=n");
        let mut out = Vec::new();
        let mut current = Vec::new();
        self.clique_backtrack(1, k, &mut current, &mut out);
        out
    }

    fn clique_backtrack(
        &self,
        start: usize,
        k: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<VertexSubset>,
    ) {
        if current.len() == k {
            out.push(VertexSubset { members: current.clone() });
            return;
        }
        let needed = k - current.len();
        for v in start..=self.n {
            if self.n - v + 1 < needed {
                break;
            }
            if current.iter().all(|&u| self.has_edge(u, v)) {
                current.push(v);
                self.clique_backtrack(v + 1, k, current, out);
                current.pop();
            }
        }
    }

    /// Induced subgraph on `s`, with vertices relabeled 1..|s| in the order of
    /// `s.members`. The returned map sends new label k (1-based) to the old
    /// label `map[k-1]`.
    pub fn induced_subgraph(&self, s: &VertexSubset) -> Result<(Graph, Vec<usize>)> {
        s.validate(self)?;
        let map = s.members.clone();
        let pos = |old: usize| map.iter().position(|&m| m == old).map(|p| p + 1);
        let mut edges = Vec::new();
        for &(a, b) in &self.edges {
            if let (Some(na), Some(nb)) = (pos(a), pos(b)) {
                edges.push((na, nb));
            }
        }
        Ok((Graph::new(map.len(), &edges)?, map))
    }

    pub fn is_independent_set(&self, s: &VertexSubset) -> bool {
        for (idx, &a) in s.members.iter().enumerate() {
            for &b in &s.members[idx + 1..] {
                if self.has_edge(a, b) {
                    return false;
                }
            }
        }
        true
    }

    // -- serialization ------------------------------------------------------

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphJson { n: self.n, edges: self.edges.clone() })
            .expect("graph serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: GraphJson =
            serde_json::from_str(s).map_err(|e| CtxError::Parse(format!("graph json: {e}")))?;
        Self::new(g.n, &g.edges)
    }

    /// Plain-text edge list: first line `n`, then one `i j` pair per line.
    /// Blank lines and `#` comments are ignored.
    pub fn from_edge_list(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| CtxError::Parse("empty edge list".into()))?
            .parse()
            .map_err(|e| CtxError::Parse(format!("vertex count: {e}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let a: usize = it
                .next()
                .ok_or_else(|| CtxError::Parse(format!("bad edge line: {line}")))?
                .parse()
                .map_err(|e| CtxError::Parse(format!("edge endpoint: {e}")))?;
            let b: usize = it
                .next()
                .ok_or_else(|| CtxError::Parse(format!("bad edge line: {line}")))?
                .parse()
                .map_err(|e| CtxError::Parse(format!("edge endpoint: {e}")))?;
            if it.next().is_some() {
                return Err(CtxError::Parse(format!("trailing tokens in edge line: {line}")));
            }
            edges.push((a, b));
        }
        Self::new(n, &edges)
    }
}

/// A sorted set of distinct vertex labels of some parent graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSubset {
    members: Vec<usize>,
}

impl VertexSubset {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        let before = members.len();
        members.dedup();
        if members.len() != before {
            return Err(CtxError::Graph("duplicate vertices in subset".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if let Some(&v) = self.members.iter().find(|&&v| v < 1 || v > g.n()) {
            return Err(CtxError::Graph(format!(
                "subset vertex {v} outside parent graph 1..={}",
                g.n()
            )));
        }
        Ok(())
    }

    /// All nonempty subsets of 1..=n in an arbitrary but fixed order.
    pub fn enumerate_all(n: usize) -> Vec<VertexSubset> {
        assert!(n <= 20, "subset enumeration is exponential");
        let mut out = Vec::with_capacity((1usize << n) - 1);
        for mask in 1u32..(1u32 << n) {
            let members: Vec<usize> =
                (0..n).filter(|i| (mask >> i) & 1 == 1).map(|i| i + 1).collect();
            out.push(VertexSubset { members });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::new(3, &[(1, 1)]).is_err());
        assert!(Graph::new(3, &[(0, 2)]).is_err());
        assert!(Graph::new(3, &[(1, 4)]).is_err());
        assert!(Graph::new(3, &[(1, 2), (2, 1)]).is_err());
        assert!(Graph::new(65, &[]).is_err());
    }

    #[test]
    fn alpha_edgeless_and_complete() {
        assert_eq!(Graph::edgeless(7).unwrap().independence_number(), 7);
        assert_eq!(Graph::complete(6).unwrap().independence_number(), 1);
    }

    #[test]
    fn alpha_c5_matches_exhaustive() {
        let c5 = Graph::cycle(5).unwrap();
        assert_eq!(c5.independence_number(), 2);
        // Exhaustive cross-check over all 2^5 subsets.
        let mut best = 0;
        for s in VertexSubset::enumerate_all(5) {
            if c5.is_independent_set(&s) {
                best = best.max(s.len());
            }
        }
        assert_eq!(best, 2);
    }

    #[test]
    fn alpha_matches_exhaustive_on_random_graphs() {
        let mut rng = crate::rng::XRng::new(9);
        for _ in 0..40 {
            let n = 4 + rng.next_usize(6);
            let mut edges = Vec::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    if rng.next_f64() < 0.35 {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            let mut best = 0;
            for s in VertexSubset::enumerate_all(n) {
                if g.is_independent_set(&s) {
                    best = best.max(s.len());
                }
            }
            assert_eq!(g.independence_number(), best);
            let witness = g.maximum_independent_set();
            assert_eq!(witness.len(), best);
            assert!(g.is_independent_set(&witness));
        }
    }

    #[test]
    fn cliques_complete_graph() {
        let k4 = Graph::complete(4).unwrap();
        let triangles = k4.enumerate_cliques(3);
        assert_eq!(triangles.len(), 4);
        // Lexicographic order and pairwise adjacency.
        let expect: Vec<Vec<usize>> =
            vec![vec![1, 2, 3], vec![1, 2, 4], vec![1, 3, 4], vec![2, 3, 4]];
        for (t, e) in triangles.iter().zip(expect.iter()) {
            assert_eq!(t.members(), e.as_slice());
            for (i, &a) in t.members().iter().enumerate() {
                for &b in &t.members()[i + 1..] {
                    assert!(k4.has_edge(a, b));
                }
            }
        }
    }

    #[test]
    fn cliques_edgeless() {
        let g = Graph::edgeless(5).unwrap();
        assert!(g.enumerate_cliques(2).is_empty());
        assert_eq!(g.enumerate_cliques(1).len(), 5);
    }

    #[test]
    fn induced_subgraph_identity_and_path() {
        let c5 = Graph::cycle(5).unwrap();
        let all = VertexSubset::new((1..=5).collect()).unwrap();
        let (same, map) = c5.induced_subgraph(&all).unwrap();
        assert_eq!(same, c5);
        assert_eq!(map, vec![1, 2, 3, 4, 5]);

        let single = VertexSubset::new(vec![3]).unwrap();
        let (one, _) = c5.induced_subgraph(&single).unwrap();
        assert_eq!(one.n(), 1);
        assert!(one.edges().is_empty());

        // Four consecutive vertices of C5 induce the path P4.
        let s = VertexSubset::new(vec![1, 2, 3, 4]).unwrap();
        let (p4, _) = c5.induced_subgraph(&s).unwrap();
        assert_eq!(p4.edges(), &[(1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn alpha_monotone_under_induced_subgraphs() {
        let mut rng = crate::rng::XRng::new(12);
        let g = {
            let mut edges = Vec::new();
            for i in 1..=8usize {
                for j in (i + 1)..=8 {
                    if rng.next_f64() < 0.4 {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(8, &edges).unwrap()
        };
        let alpha = g.independence_number();
        for s in VertexSubset::enumerate_all(8).iter().step_by(7) {
            let (sub, _) = g.induced_subgraph(s).unwrap();
            assert!(sub.independence_number() <= alpha);
        }
    }

    #[test]
    fn independent_set_examples() {
        let g = Graph::new(3, &[(1, 2)]).unwrap();
        assert!(g.is_independent_set(&VertexSubset::new(vec![]).unwrap()));
        assert!(g.is_independent_set(&VertexSubset::new(vec![1, 3]).unwrap()));
        assert!(!g.is_independent_set(&VertexSubset::new(vec![1, 2]).unwrap()));
    }

    #[test]
    fn json_and_edge_list_round_trip() {
        let g = Graph::new(4, &[(1, 2), (3, 4), (2, 3)]).unwrap();
        let j = g.to_json();
        assert_eq!(Graph::from_json(&j).unwrap(), g);
        let txt = "4\n1 2\n2 3\n3 4\n";
        assert_eq!(Graph::from_edge_list(txt).unwrap(), g);
    }
}
