//! Undirected graphs describing the conditional independence structure of a
//! target density, and the elimination machinery built on top of them.
//!
//! Vertices are labelled `0..n` in the Rust API. The text file format and the
//! JSON emitted by the command-line tool use 1-based labels.

mod decomposition;
mod elimination;
mod imap;

pub use decomposition::{
    decompose, maximal_cliques, schedule_decomposition, DecompositionSchedule, DecompositionStep, GraphDecomposition,
    SchedulePolicy,
};
pub use elimination::{
    direct_sparsity, elimination_neighborhoods, fill_in, inverse_sparsity, marginal_graphs, min_fill_ordering,
};
pub use imap::{pairwise_imap, ImapOptions};

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    /// Edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        Self { adj: vec![BTreeSet::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.adj[i].insert(j);
                g.adj[j].insert(i);
            }
        }
        g
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 1..n {
            g.adj[i - 1].insert(i);
            g.adj[i].insert(i - 1);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::Graph(format!("edge ({i}, {j}) out of range for {n} vertices")));
        }
        if i == j {
            return Err(Error::Graph(format!("self-loop on vertex {i}")));
        }
        let fresh = self.adj[i].insert(j);
        self.adj[j].insert(i);
        Ok(fresh)
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        let had = self.adj[i].remove(&j);
        self.adj[j].remove(&i);
        had
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(&j)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.adj.iter().enumerate() {
            out.extend(nb.range(i + 1..).map(|&j| (i, j)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_clique<'a, I: IntoIterator<Item = &'a usize>>(&self, set: I) -> bool {
        let v: Vec<usize> = set.into_iter().copied().collect();
        v.iter().enumerate().all(|(a, &i)| v[a + 1..].iter().all(|&j| self.has_edge(i, j)))
    }

    /// Connects every pair in `set`; returns the edges that were added.
    pub fn make_clique<'a, I: IntoIterator<Item = &'a usize>>(&mut self, set: I) -> Vec<(usize, usize)> {
        let v: Vec<usize> = set.into_iter().copied().collect();
        let mut added = Vec::new();
        for (a, &i) in v.iter().enumerate() {
            for &j in &v[a + 1..] {
                if i != j && !self.has_edge(i, j) {
                    self.adj[i].insert(j);
                    self.adj[j].insert(i);
                    added.push((i.min(j), i.max(j)));
                }
            }
        }
        added
    }

    /// Drops every edge incident to `v`.
    pub fn isolate(&mut self, v: usize) {
        let nb = std::mem::take(&mut self.adj[v]);
        for u in nb {
            self.adj[u].remove(&v);
        }
    }

    /// Graph on the first `k` vertices (drops labels `k..n`).
    pub fn truncated(&self, k: usize) -> Self {
        Self { adj: self.adj[..k].iter().map(|nb| nb.range(..k).copied().collect()).collect() }
    }

    /// Relabels vertices: new vertex `i` is old vertex `perm[i]`.
    pub fn relabel(&self, order: &Ordering) -> Result<Self> {
        if order.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: order.len() });
        }
        let inv = order.inverse();
        let mut g = Self::new(self.n());
        for (a, b) in self.edges() {
            g.add_edge(inv[a], inv[b])?;
        }
        Ok(g)
    }

    /// Connected components of the subgraph induced by `vertices`, each sorted,
    /// listed by smallest member.
    pub fn components_within(&self, vertices: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in vertices {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &u in &self.adj[v] {
                    if vertices.contains(&u) && seen.insert(u) {
                        comp.insert(u);
                        queue.push_back(u);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Parses the text format: first line `n`, then one `i j` pair per line,
    /// 1-based with `i < j`. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (lno, first) = lines.next().ok_or_else(|| Error::Graph("empty graph file".into()))?;
        let n: usize =
            first.parse().map_err(|_| Error::Graph(format!("line {lno}: expected vertex count, found `{first}`")))?;
        if n == 0 {
            return Err(Error::Graph(format!("line {lno}: vertex count must be positive")));
        }
        let mut g = Self::new(n);
        for (lno, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Graph(format!("line {lno}: expected `i j`, found `{line}`"));
            if parts.len() != 2 {
                return Err(bad());
            }
            let i: usize = parts[0].parse().map_err(|_| bad())?;
            let j: usize = parts[1].parse().map_err(|_| bad())?;
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::Graph(format!("line {lno}: vertex out of range 1..={n}")));
            }
            if i >= j {
                return Err(Error::Graph(format!("line {lno}: edges must satisfy i < j")));
            }
            g.add_edge(i - 1, j - 1)?;
        }
        Ok(g)
    }

    /// Inverse of [`UndirectedGraph::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n());
        for (i, j) in self.edges() {
            s.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        s
    }
}

/// Set of pairs `(j, k)`, `j < k`, meaning component `k` ignores input `j`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityPattern {
    pub n: usize,
    pub pairs: BTreeSet<(usize, usize)>,
}

impl SparsityPattern {
    pub fn empty(n: usize) -> Self {
        Self { n, pairs: BTreeSet::new() }
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.pairs.contains(&(j, k))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_subset(&self, other: &SparsityPattern) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// Inputs component `k` may depend on, including `k` itself.
    pub fn active_set(&self, k: usize) -> Vec<usize> {
        (0..=k).filter(|&j| j == k || !self.contains(j, k)).collect()
    }

    pub fn one_based(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&(j, k)| (j + 1, k + 1)).collect()
    }
}

/// Permutation `perm` of `0..n`; new label `i` refers to old vertex `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    perm: Vec<usize>,
}

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::Graph(format!("{perm:?} is not a permutation of 0..{n}")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// `inv[v]` is the new label of old vertex `v`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.perm.iter().map(|p| p + 1).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let g = UndirectedGraph::parse("5\n1 3\n2 3\n3 4\n3 5\n4 5\n").unwrap();
        assert_eq!(g.edge_count(), 5);
        assert_eq!(UndirectedGraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = UndirectedGraph::parse("3\n1 2\n2 x\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = UndirectedGraph::parse("3\n2 1\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(UndirectedGraph::parse("3\n1 4\n").is_err());
    }

    #[test]
    fn rejects_self_loops_and_bad_permutations() {
        assert!(UndirectedGraph::new(3).add_edge(1, 1).is_err());
        assert!(Ordering::new(vec![0, 0, 1]).is_err());
        assert!(Ordering::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn relabel_follows_permutation() {
        let g = UndirectedGraph::from_edges(3, &[(0, 1)]).unwrap();
        let o = Ordering::new(vec![2, 0, 1]).unwrap();
        let h = g.relabel(&o).unwrap();
        // new 1 = old 0, new 2 = old 1
        assert!(h.has_edge(1, 2));
        assert_eq!(h.edge_count(), 1);
    }

    #[test]
    fn components_of_split_graph() {
        let g = UndirectedGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let all: BTreeSet<usize> = (0..4).collect();
        let comps = g.components_within(&all);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], BTreeSet::from([0, 1]));
    }
}
