use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Ordering, UndirectedGraph};

/// Vertex partition `(A, S, B)` in which `S` separates `A` from `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDecomposition {
    pub a: BTreeSet<usize>,
    pub s: BTreeSet<usize>,
    pub b: BTreeSet<usize>,
}

impl GraphDecomposition {
    /// Checks disjointness, coverage of `0..n`, non-emptiness of `A` and `B`
    /// and that no edge of `g` joins `A` to `B`.
    pub fn is_valid_for(&self, g: &UndirectedGraph) -> bool {
        let n = g.n();
        let total = self.a.len() + self.s.len() + self.b.len();
        let union: BTreeSet<usize> = self.a.iter().chain(&self.s).chain(&self.b).copied().collect();
        if total != n || union.len() != n || union.iter().any(|&v| v >= n) {
            return false;
        }
        if self.a.is_empty() || self.b.is_empty() {
            return false;
        }
        self.a.iter().all(|&v| g.neighbors(v).iter().all(|u| !self.b.contains(u)))
    }
}

/// How [`schedule_decomposition`] chooses the next set of eliminated vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePolicy {
    /// After the first step, the previous separator becomes the new block to
    /// eliminate and its neighbourhood the new separator. Falls back to
    /// [`SchedulePolicy::Greedy`] when that leaves nothing behind.
    #[default]
    Frontier,
    /// Eliminate the single vertex whose closed neighbourhood is smallest,
    /// ties to the lowest label. On trees this peels leaves.
    Greedy,
}

/// One step of a recursive decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionStep {
    /// Cumulative eliminated block `A_i`, separator `S_i`, remainder `B_i`.
    pub decomposition: GraphDecomposition,
    /// Vertex ordering: separator first, then `A_i`, then `B_i`.
    pub sigma: Ordering,
    /// `|(A_i \ A_{i-1}) ∪ S_i|`.
    pub effective_dim: usize,
    /// Edges added to make the separator a clique and to close the cliques
    /// that touch it.
    pub added_edges: Vec<(usize, usize)>,
    /// Graph handed to the next step.
    #[serde(skip)]
    pub graph_after: Option<UndirectedGraph>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionSchedule {
    pub steps: Vec<DecompositionStep>,
    pub final_r_dim: usize,
}

impl DecompositionSchedule {
    /// Effective dimensions of all maps, the remainder map last.
    pub fn effective_dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.steps.iter().map(|s| s.effective_dim).collect();
        d.push(self.final_r_dim);
        d
    }
}

const SUBSET_BUDGET: u128 = 200_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f` on every `k`-subset of `items` in lexicographic order.
fn for_each_subset(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), f);
}

type Candidate = (usize, usize, Vec<usize>, Vec<usize>);

fn split_key(
    g: &UndirectedGraph,
    vertices: &BTreeSet<usize>,
    sep: &[usize],
) -> Option<(Candidate, GraphDecomposition)> {
    let s: BTreeSet<usize> = sep.iter().copied().collect();
    let rest: BTreeSet<usize> = vertices.difference(&s).copied().collect();
    let comps = g.components_within(&rest);
    if comps.len() < 2 {
        return None;
    }
    let a = comps.iter().min_by_key(|c| (c.len(), *c.iter().next().unwrap()))?.clone();
    let b: BTreeSet<usize> = rest.difference(&a).copied().collect();
    let key = (s.len(), a.len(), a.iter().copied().collect(), s.iter().copied().collect());
    Some((key, GraphDecomposition { a, s, b }))
}

/// Decomposition of the subgraph induced on `vertices` that minimises `|S|`,
/// then `|A|`, then the labels of `A` and `S`.
fn decompose_within(g: &UndirectedGraph, vertices: &BTreeSet<usize>) -> Option<GraphDecomposition> {
    let m = vertices.len();
    if m < 2 || g.is_clique(vertices) {
        return None;
    }
    let items: Vec<usize> = vertices.iter().copied().collect();
    for k in 0..=m - 2 {
        if binomial(m, k) > SUBSET_BUDGET {
            return greedy_within(g, vertices);
        }
        let mut best: Option<(Candidate, GraphDecomposition)> = None;
        for_each_subset(&items, k, &mut |sep| {
            if let Some(c) = split_key(g, vertices, sep) {
                if best.as_ref().map_or(true, |b| c.0 < b.0) {
                    best = Some(c);
                }
            }
        });
        if let Some((_, d)) = best {
            return Some(d);
        }
    }
    None
}

fn greedy_within(g: &UndirectedGraph, vertices: &BTreeSet<usize>) -> Option<GraphDecomposition> {
    vertices
        .iter()
        .filter_map(|&v| {
            let s: BTreeSet<usize> = g.neighbors(v).iter().filter(|u| vertices.contains(u)).copied().collect();
            let a = BTreeSet::from([v]);
            let b: BTreeSet<usize> = vertices.iter().filter(|u| **u != v && !s.contains(u)).copied().collect();
            (!b.is_empty()).then_some((s.len(), v, GraphDecomposition { a, s, b }))
        })
        .min_by_key(|(len, v, _)| (*len, *v))
        .map(|(_, _, d)| d)
}

/// Finds a decomposition of `g`, preferring the smallest separator and then
/// the smallest eliminated block. The separator may need extra edges to
/// become a clique. Returns `None` when `g` is complete or has fewer than two
/// vertices.
pub fn decompose(g: &UndirectedGraph) -> Option<GraphDecomposition> {
    let all: BTreeSet<usize> = (0..g.n()).collect();
    decompose_within(g, &all)
}

fn next_frontier(
    g: &UndirectedGraph,
    vertices: &BTreeSet<usize>,
    prev_s: &BTreeSet<usize>,
) -> Option<GraphDecomposition> {
    if prev_s.is_empty() {
        return None;
    }
    let a = prev_s.clone();
    let s: BTreeSet<usize> = a
        .iter()
        .flat_map(|&v| g.neighbors(v).iter().copied())
        .filter(|u| vertices.contains(u) && !a.contains(u))
        .collect();
    let b: BTreeSet<usize> = vertices.iter().filter(|u| !a.contains(u) && !s.contains(u)).copied().collect();
    (!b.is_empty()).then_some(GraphDecomposition { a, s, b })
}

/// Edges added when closing every maximal clique `C` of `h` (restricted to
/// `keep`) that meets the separator, given the separator order `s_order`.
fn closure_edges(h: &UndirectedGraph, keep: &BTreeSet<usize>, s_order: &[usize]) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::new();
    for c in maximal_cliques(h, keep) {
        let last = s_order.iter().rposition(|v| c.contains(v));
        if let Some(j) = last {
            let mut clique = c.clone();
            clique.extend(s_order[..=j].iter().copied());
            out.push(clique);
        }
    }
    out
}

fn count_added(h: &UndirectedGraph, cliques: &[BTreeSet<usize>]) -> usize {
    let mut g = h.clone();
    cliques.iter().map(|c| g.make_clique(c).len()).sum()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Separator order adding the fewest edges, ties to the lexicographically
/// smallest order. Exhaustive up to seven separator vertices, sorted beyond.
fn best_separator_order(h: &UndirectedGraph, keep: &BTreeSet<usize>, s: &BTreeSet<usize>) -> Vec<usize> {
    let sorted: Vec<usize> = s.iter().copied().collect();
    if sorted.len() > 7 {
        return sorted;
    }
    permutations(&sorted)
        .into_iter()
        .min_by_key(|p| (count_added(h, &closure_edges(h, keep, p)), p.clone()))
        .unwrap_or(sorted)
}

/// Bron–Kerbosch with pivoting on the subgraph induced by `vertices`.
pub fn maximal_cliques(g: &UndirectedGraph, vertices: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    fn bk(
        g: &UndirectedGraph,
        r: &mut BTreeSet<usize>,
        p: BTreeSet<usize>,
        mut x: BTreeSet<usize>,
        out: &mut Vec<BTreeSet<usize>>,
    ) {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return;
        }
        let pivot = p.iter().chain(&x).max_by_key(|&&u| g.neighbors(u).iter().filter(|v| p.contains(v)).count());
        let pivot_nb = pivot.map(|&u| g.neighbors(u).clone()).unwrap_or_default();
        let candidates: Vec<usize> = p.iter().filter(|v| !pivot_nb.contains(v)).copied().collect();
        let mut p = p;
        for v in candidates {
            let nb = g.neighbors(v);
            r.insert(v);
            bk(
                g,
                r,
                p.iter().filter(|u| nb.contains(u)).copied().collect(),
                x.iter().filter(|u| nb.contains(u)).copied().collect(),
                out,
            );
            r.remove(&v);
            p.remove(&v);
            x.insert(v);
        }
    }
    let mut out = Vec::new();
    bk(g, &mut BTreeSet::new(), vertices.clone(), BTreeSet::new(), &mut out);
    out.sort();
    out
}

/// Recursive decomposition of `g` into low-dimensional maps.
///
/// Each step removes the edges of the newly eliminated block, makes the
/// separator a clique and closes every maximal clique of the remaining graph
/// that meets the separator together with the separator prefix up to its
/// last member. The recursion stops once the remaining vertex set is a
/// clique; its size is the dimension of the remainder map.
pub fn schedule_decomposition(g: &UndirectedGraph, policy: SchedulePolicy) -> DecompositionSchedule {
    let mut h = g.clone();
    let mut remaining: BTreeSet<usize> = (0..g.n()).collect();
    let mut eliminated: BTreeSet<usize> = BTreeSet::new();
    let mut prev_s: Option<BTreeSet<usize>> = None;
    let mut steps = Vec::new();

    while remaining.len() >= 2 && !h.is_clique(&remaining) {
        let d = match (policy, &prev_s) {
            (SchedulePolicy::Frontier, Some(s)) => {
                next_frontier(&h, &remaining, s).or_else(|| greedy_within(&h, &remaining))
            }
            (SchedulePolicy::Frontier, None) | (SchedulePolicy::Greedy, _) => greedy_within(&h, &remaining),
        };
        let Some(d) = d else { break };

        let mut added = h.make_clique(&d.s);
        for &v in &d.a {
            h.isolate(v);
        }
        let keep: BTreeSet<usize> = d.s.union(&d.b).copied().collect();
        let s_order = best_separator_order(&h, &keep, &d.s);
        for c in closure_edges(&h, &keep, &s_order) {
            added.extend(h.make_clique(&c));
        }

        let effective_dim = d.a.len() + d.s.len();
        eliminated.extend(d.a.iter().copied());
        remaining = keep;
        let mut perm = s_order.clone();
        perm.extend(eliminated.iter().copied());
        perm.extend(d.b.iter().copied());
        steps.push(DecompositionStep {
            decomposition: GraphDecomposition { a: eliminated.clone(), s: d.s.clone(), b: d.b.clone() },
            sigma: Ordering::new(perm).expect("partition of all vertices"),
            effective_dim,
            added_edges: added,
            graph_after: Some(h.clone()),
        });
        prev_s = Some(d.s);
    }
    DecompositionSchedule { steps, final_r_dim: remaining.len() }
}
