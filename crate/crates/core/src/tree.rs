//! Tree topologies over `d` sensors and their correlation-weighted versions.
//!
//! Nodes are 0-indexed internally. Every text format (tree files, CLI
//! arguments, CSV) is 1-indexed.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use petgraph::unionfind::UnionFind;
use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Undirected edge stored with the smaller endpoint first.
pub type Edge = (usize, usize);

fn normalize(a: usize, b: usize) -> Edge {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Spanning tree over `node_count` nodes. Edges are kept normalized and sorted
/// so two topologies compare equal exactly when their edge sets agree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeTopology {
    node_count: usize,
    edges: Vec<Edge>,
}

impl TreeTopology {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if node_count == 0 {
            return Err(invalid("a tree needs at least one node"));
        }
        let mut edges: Vec<Edge> = edges.into_iter().map(|(a, b)| normalize(a, b)).collect();
        edges.sort_unstable();
        if edges.len() != node_count - 1 {
            return Err(invalid(format!(
                "a tree on {node_count} nodes has {} edges, got {}",
                node_count - 1,
                edges.len()
            )));
        }
        let mut uf = UnionFind::<usize>::new(node_count);
        for (i, &(a, b)) in edges.iter().enumerate() {
            if b >= node_count {
                return Err(invalid(format!("edge ({}, {}) names a node outside 1..={node_count}", a + 1, b + 1)));
            }
            if a == b {
                return Err(invalid(format!("self-loop on node {}", a + 1)));
            }
            if i > 0 && edges[i - 1] == (a, b) {
                return Err(invalid(format!("duplicate edge ({}, {})", a + 1, b + 1)));
            }
            if !uf.union(a, b) {
                return Err(invalid(format!("edge ({}, {}) closes a cycle", a + 1, b + 1)));
            }
        }
        Ok(Self { node_count, edges })
    }

    /// Path 0 - 1 - ... - (d-1).
    pub fn chain(node_count: usize) -> Result<Self> {
        Self::new(node_count, (1..node_count).map(|i| (i - 1, i)))
    }

    /// Star with every other node attached to `center`.
    pub fn star(node_count: usize, center: usize) -> Result<Self> {
        if center >= node_count {
            return Err(invalid("star center out of range"));
        }
        Self::new(node_count, (0..node_count).filter(|&i| i != center).map(|i| (center, i)))
    }

    /// Decodes a Prüfer sequence (entries are 0-indexed node labels) into the
    /// unique labeled tree on `seq.len() + 2` nodes. Linear time.
    pub fn from_prufer(seq: &[usize]) -> Result<Self> {
        let d = seq.len() + 2;
        let mut degree = vec![1usize; d];
        for &v in seq {
            if v >= d {
                return Err(invalid(format!("Prüfer entry {v} out of range for {d} nodes")));
            }
            degree[v] += 1;
        }
        let mut edges = Vec::with_capacity(d - 1);
        let mut ptr = 0;
        while degree[ptr] != 1 {
            ptr += 1;
        }
        let mut leaf = ptr;
        for &v in seq {
            edges.push((leaf, v));
            degree[v] -= 1;
            if degree[v] == 1 && v < ptr {
                leaf = v;
            } else {
                ptr += 1;
                while degree[ptr] != 1 {
                    ptr += 1;
                }
                leaf = ptr;
            }
        }
        edges.push((leaf, d - 1));
        Self::new(d, edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&normalize(a, b)).is_ok()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Breadth-first order from `root` together with each node's parent.
    pub fn bfs_from(&self, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let adj = self.adjacency();
        let mut parent = vec![None; self.node_count];
        let mut seen = vec![false; self.node_count];
        let mut order = Vec::with_capacity(self.node_count);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        (order, parent)
    }

    /// Nodes on the unique path from `from` to `to`, both ends included.
    pub fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let (_, parent) = self.bfs_from(to);
        let mut path = vec![from];
        let mut cur = from;
        while let Some(p) = parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Applies `perm` (old label -> new label) to every edge.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count {
            return Err(invalid("permutation length differs from node count"));
        }
        Self::new(self.node_count, self.edges.iter().map(|&(a, b)| (perm[a], perm[b])))
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == node || b == node).count()
    }
}

/// Uniformly random labeled tree on `d` nodes via a uniform Prüfer sequence.
pub fn generate_random_tree<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<TreeTopology> {
    if d < 2 {
        return Err(invalid(format!("random tree needs d >= 2, got {d}")));
    }
    let seq: Vec<usize> = (0..d - 2).map(|_| rng.random_range(0..d)).collect();
    TreeTopology::from_prufer(&seq)
}

/// A tree whose edges carry correlation coefficients strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    topology: TreeTopology,
    weights: Vec<f64>,
}

impl WeightedTree {
    /// `weights[k]` belongs to `topology.edges()[k]`.
    pub fn new(topology: TreeTopology, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != topology.edges().len() {
            return Err(invalid(format!(
                "{} weights for {} edges",
                weights.len(),
                topology.edges().len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
            return Err(invalid(format!("edge correlation {w} outside (0, 1)")));
        }
        Ok(Self { topology, weights })
    }

    /// Builds from `(a, b, weight)` triples in any order.
    pub fn from_weighted_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let topology = TreeTopology::new(node_count, edges.iter().map(|&(a, b, _)| (a, b)))?;
        let mut weights = vec![0.0; edges.len()];
        for &(a, b, w) in edges {
            let k = topology.edges().binary_search(&normalize(a, b)).expect("edge present");
            weights[k] = w;
        }
        Self::new(topology, weights)
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weighted_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.topology.edges().iter().zip(&self.weights).map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.topology
            .edges()
            .binary_search(&normalize(a, b))
            .ok()
            .map(|k| self.weights[k])
    }

    /// Writes the edge-list format: `d=<n>` then one `i j weight` line per edge.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_edge_list().as_bytes())?;
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("d={}\n", self.node_count());
        for (a, b, w) in self.weighted_edges() {
            let _ = writeln!(s, "{} {} {}", a + 1, b + 1, w);
        }
        s
    }

    /// Parses the edge-list format. Blank lines and `#` comments are skipped.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut node_count = None;
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: lineno, message };
            if node_count.is_none() {
                let value = line
                    .strip_prefix("d=")
                    .ok_or_else(|| parse_err(format!("expected header `d=<n>`, found `{line}`")))?;
                node_count = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad node count: {e}")))?,
                );
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected `i j weight`, found `{line}`")));
            }
            let node = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|e| parse_err(format!("bad node `{s}`: {e}")))?;
                v.checked_sub(1).ok_or_else(|| parse_err("nodes are 1-indexed".into()))
            };
            let w: f64 = fields[2]
                .parse()
                .map_err(|e| parse_err(format!("bad weight `{}`: {e}", fields[2])))?;
            edges.push((node(fields[0])?, node(fields[1])?, w));
        }
        let d = node_count.ok_or_else(|| Error::Parse { line: 0, message: "empty tree file".into() })?;
        Self::from_weighted_edges(d, &edges)
    }
}

/// Draws every edge weight independently and uniformly from `[low, high]`.
pub fn assign_edge_weights<R: Rng + ?Sized>(
    topology: TreeTopology,
    low: f64,
    high: f64,
    rng: &mut R,
) -> Result<WeightedTree> {
    if !(low > 0.0 && low <= high && high < 1.0) {
        return Err(invalid(format!(
            "weight interval [{low}, {high}] must satisfy 0 < low <= high < 1"
        )));
    }
    let weights = topology
        .edges()
        .iter()
        .map(|_| if low == high { low } else { rng.random_range(low..=high) })
        .collect();
    WeightedTree::new(topology, weights)
}
