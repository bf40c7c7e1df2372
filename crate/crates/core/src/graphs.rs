//! Adjacency graphs of codes, the layered syndrome adjacency graph, clusters,
//! and exact cluster-extension counting.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::GraphError;
use crate::stabcode::StabilizerCode;

/// Simple undirected graph as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn with_nodes(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds from an edge list; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::with_nodes(n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::Argument(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a != b {
                g.adj[a].push(b);
                g.adj[b].push(a);
            }
        }
        g.finish();
        Ok(g)
    }

    fn finish(&mut self) {
        for list in &mut self.adj {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("in range")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("in range")
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// One `u v` line per edge with `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list.iter().filter(|&&v| v > u) {
                let _ = writeln!(out, "{u} {v}");
            }
        }
        out
    }
}

/// Qubits adjacent iff some generator acts non-trivially on both.
pub fn adjacency_graph(code: &StabilizerCode) -> Graph {
    let mut g = Graph::with_nodes(code.n());
    for b in 0..code.num_checks() {
        let s = code.support(b);
        for (i, &u) in s.iter().enumerate() {
            for &v in &s[i + 1..] {
                g.adj[u].push(v);
                g.adj[v].push(u);
            }
        }
    }
    g.finish();
    g
}

/// A node of the syndrome adjacency graph; times are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceTimeNode {
    Qubit { x: usize, t: usize },
    Check { b: usize, t: usize },
}

/// Qubit layers `t = 1..=T+1`, check layers `t = 1..=T`; check `(b, t)` is
/// joined to `(x, t)` and `(x, t+1)` for every `x` in the support of `b`.
#[derive(Clone, Debug)]
pub struct SyndromeAdjacencyGraph {
    n: usize,
    m: usize,
    rounds: usize,
    graph: Graph,
}

impl SyndromeAdjacencyGraph {
    pub fn new(code: &StabilizerCode, rounds: usize) -> Result<Self, GraphError> {
        if rounds < 1 {
            return Err(GraphError::Argument("T must be at least 1".into()));
        }
        let n = code.n();
        let m = code.num_checks();
        let base = adjacency_graph(code);
        let mut sg = Self {
            n,
            m,
            rounds,
            graph: Graph::with_nodes(n * (rounds + 1) + m * rounds),
        };
        for t in 1..=rounds + 1 {
            for u in 0..n {
                let a = sg.qubit(u, t);
                for &v in base.neighbors(u) {
                    let b = sg.qubit(v, t);
                    sg.graph.adj[a].push(b);
                }
            }
        }
        for t in 1..=rounds {
            for b in 0..m {
                let c = sg.check(b, t);
                for &x in code.support(b) {
                    for tt in [t, t + 1] {
                        let q = sg.qubit(x, tt);
                        sg.graph.adj[c].push(q);
                        sg.graph.adj[q].push(c);
                    }
                }
            }
        }
        sg.graph.finish();
        Ok(sg)
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Index of qubit node `(x, t)`, `1 <= t <= T+1`.
    #[inline]
    pub fn qubit(&self, x: usize, t: usize) -> usize {
        debug_assert!(x < self.n && (1..=self.rounds + 1).contains(&t));
        (t - 1) * self.n + x
    }

    /// Index of check node `(b, t)`, `1 <= t <= T`.
    #[inline]
    pub fn check(&self, b: usize, t: usize) -> usize {
        debug_assert!(b < self.m && (1..=self.rounds).contains(&t));
        self.n * (self.rounds + 1) + (t - 1) * self.m + b
    }

    pub fn node(&self, index: usize) -> SpaceTimeNode {
        let q = self.n * (self.rounds + 1);
        if index < q {
            SpaceTimeNode::Qubit {
                x: index % self.n,
                t: index / self.n + 1,
            }
        } else {
            let i = index - q;
            SpaceTimeNode::Check {
                b: i % self.m,
                t: i / self.m + 1,
            }
        }
    }

    /// Time coordinate of a node.
    pub fn time(&self, index: usize) -> usize {
        match self.node(index) {
            SpaceTimeNode::Qubit { t, .. } | SpaceTimeNode::Check { t, .. } => t,
        }
    }
}

/// A connected component of a marked node set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub nodes: Vec<usize>,
    /// Number of member nodes carrying an actual error.
    pub errors: usize,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

/// Connected components of the subgraph induced on `marked`, each sorted,
/// ordered by smallest member. `errors` is left at zero.
pub fn clusters_of(marked: &[usize], graph: &Graph) -> Vec<Cluster> {
    let mut in_set = vec![false; graph.node_count()];
    for &v in marked {
        in_set[v] = true;
    }
    let mut seen = vec![false; graph.node_count()];
    let mut roots: Vec<usize> = marked.to_vec();
    roots.sort_unstable();
    roots.dedup();
    let mut out = Vec::new();
    for root in roots {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut nodes = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if in_set[v] && !seen[v] {
                    seen[v] = true;
                    nodes.push(v);
                    queue.push_back(v);
                }
            }
        }
        nodes.sort_unstable();
        out.push(Cluster { nodes, errors: 0 });
    }
    out
}

/// Like [`clusters_of`], filling `errors` from the `actual` membership mask.
pub fn clusters_with_errors(marked: &[usize], actual: &[bool], graph: &Graph) -> Vec<Cluster> {
    let mut clusters = clusters_of(marked, graph);
    for c in &mut clusters {
        c.errors = c.nodes.iter().filter(|&&v| actual[v]).count();
    }
    clusters
}

pub const EXTENSION_MAX_NODES: usize = 64;
pub const EXTENSION_MAX_SIZE: usize = 10;

/// Number of node sets of size `s` that contain `seed` and are unions of
/// connected clusters each touching `seed` (equivalently: every member is
/// joined to `seed` inside the set).
///
/// Enumeration branches on the smallest boundary node (include or exclude),
/// so every set is produced exactly once.
pub fn count_cluster_extensions(graph: &Graph, seed: &[usize], s: usize) -> Result<u64, GraphError> {
    let nodes = graph.node_count();
    if nodes > EXTENSION_MAX_NODES || s > EXTENSION_MAX_SIZE {
        return Err(GraphError::ResourceGuard(format!(
            "{nodes} nodes, s = {s} (limits {EXTENSION_MAX_NODES}, {EXTENSION_MAX_SIZE})"
        )));
    }
    let mut set: Vec<usize> = seed.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.iter().any(|&v| v >= nodes) {
        return Err(GraphError::Argument("seed node out of range".into()));
    }
    if set.is_empty() {
        return Err(GraphError::Argument("seed set must be non-empty".into()));
    }
    if s < set.len() {
        return Ok(0);
    }
    let mut inside = 0u64;
    for &v in &set {
        inside |= 1 << v;
    }
    let masks: Vec<u64> = (0..nodes)
        .map(|v| graph.neighbors(v).iter().fold(0u64, |m, &u| m | (1 << u)))
        .collect();
    Ok(extend(&masks, inside, 0, set.len(), s))
}

fn extend(masks: &[u64], inside: u64, excluded: u64, size: usize, target: usize) -> u64 {
    if size == target {
        return 1;
    }
    let mut boundary = 0u64;
    let mut rest = inside;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        boundary |= masks[v];
        rest &= rest - 1;
    }
    boundary &= !inside & !excluded;
    if boundary == 0 {
        return 0;
    }
    let v = boundary.trailing_zeros();
    let bit = 1u64 << v;
    extend(masks, inside | bit, excluded, size + 1, target) + extend(masks, inside, excluded | bit, size, target)
}

/// `e^{t-1} (z e)^{s-t}` with `t = |S|`.
pub fn cluster_count_bound(z: usize, t: usize, s: usize) -> f64 {
    let e = std::f64::consts::E;
    e.powi(t as i32 - 1) * (z as f64 * e).powi(s as i32 - t as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{hypergraph_product, repetition_code};
    use crate::pauli::PauliOperator;
    use proptest::prelude::*;

    fn bit_flip() -> StabilizerCode {
        StabilizerCode::new(3, vec!["ZZI".parse().unwrap(), "IZZ".parse().unwrap()]).unwrap()
    }

    #[test]
    fn adjacency_examples() {
        let g = adjacency_graph(&bit_flip());
        assert_eq!(g, Graph::path(3));
        assert_eq!(g.max_degree(), 2);
        let k4 = adjacency_graph(&StabilizerCode::new(4, vec!["XZZX".parse::<PauliOperator>().unwrap()]).unwrap());
        assert_eq!(k4.edge_count(), 6);
        let c13 = hypergraph_product(&repetition_code(3).unwrap()).unwrap();
        let t = c13.validate().tightest;
        assert!(adjacency_graph(&c13).max_degree() <= (t.r - 1) * t.c);
    }

    #[test]
    fn syndrome_graph_counts() {
        let code = bit_flip();
        let sg = SyndromeAdjacencyGraph::new(&code, 1).unwrap();
        assert_eq!(sg.node_count(), 3 * 2 + 2);
        let sg = SyndromeAdjacencyGraph::new(&code, 2).unwrap();
        assert_eq!(sg.node_count(), 13);
        assert!(SyndromeAdjacencyGraph::new(&code, 0).is_err());
        let t = code.validate().tightest;
        for v in 0..sg.node_count() {
            let bound = match sg.node(v) {
                SpaceTimeNode::Qubit { .. } => (t.r - 1) * t.c + 2 * t.c,
                SpaceTimeNode::Check { .. } => 2 * t.r,
            };
            assert!(sg.graph().degree(v) <= bound);
        }
        assert_eq!(sg.node(sg.check(1, 2)), SpaceTimeNode::Check { b: 1, t: 2 });
        assert_eq!(sg.node(sg.qubit(2, 3)), SpaceTimeNode::Qubit { x: 2, t: 3 });
    }

    #[test]
    fn cluster_examples() {
        let g = Graph::path(3);
        assert!(clusters_of(&[], &g).is_empty());
        let c = clusters_of(&[0, 1], &g);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].size(), 2);
        let c = clusters_of(&[0, 2], &g);
        assert_eq!(c.iter().map(Cluster::size).collect::<Vec<_>>(), vec![1, 1]);
    }

    /// Subset enumeration: every member reaches the seed inside the set.
    fn brute_extensions(g: &Graph, seed: &[usize], s: usize) -> u64 {
        let n = g.node_count();
        let seed_mask = seed.iter().fold(0u32, |m, &v| m | (1 << v));
        let mut count = 0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != s || mask & seed_mask != seed_mask {
                continue;
            }
            let mut reach = seed_mask;
            loop {
                let mut next = reach;
                for v in 0..n {
                    if reach & (1 << v) != 0 {
                        for &u in g.neighbors(v) {
                            if mask & (1 << u) != 0 {
                                next |= 1 << u;
                            }
                        }
                    }
                }
                if next == reach {
                    break;
                }
                reach = next;
            }
            if reach == mask {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn extension_examples() {
        let c5 = Graph::cycle(5);
        assert_eq!(count_cluster_extensions(&c5, &[0], 1).unwrap(), 1);
        assert_eq!(count_cluster_extensions(&c5, &[0], 3).unwrap(), 3);
        assert!(3.0 <= cluster_count_bound(2, 1, 3));
        assert_eq!(count_cluster_extensions(&Graph::path(4), &[0], 2).unwrap(), 1);
        assert!(count_cluster_extensions(&Graph::path(100), &[0], 2).is_err());
    }

    proptest! {
        #[test]
        fn extensions_match_subset_enumeration(
            n in 3usize..12,
            edges in proptest::collection::vec((0usize..12, 0usize..12), 0..30),
            seed in proptest::collection::btree_set(0usize..12, 1..3),
            s in 1usize..7,
        ) {
            let edges: Vec<_> = edges.into_iter().filter(|&(a, b)| a < n && b < n).collect();
            let g = Graph::from_edges(n, &edges).unwrap();
            let seed: Vec<usize> = seed.into_iter().filter(|&v| v < n).collect();
            prop_assume!(!seed.is_empty());
            prop_assert_eq!(
                count_cluster_extensions(&g, &seed, s).unwrap(),
                brute_extensions(&g, &seed, s)
            );
        }

        #[test]
        fn clusters_partition_marked(
            marked in proptest::collection::btree_set(0usize..20, 0..20)
        ) {
            let g = Graph::cycle(20);
            let marked: Vec<usize> = marked.into_iter().collect();
            let clusters = clusters_of(&marked, &g);
            let mut all: Vec<usize> = clusters.iter().flat_map(|c| c.nodes.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, marked);
        }
    }
}
