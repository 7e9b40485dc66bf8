use std::collections::BTreeSet;

use super::{Ordering, SparsityPattern, UndirectedGraph};
use crate::error::Result;

/// Eliminates vertices `n-1, ..., 0` in turn, connecting each vertex's
/// remaining neighbours before removing it.
///
/// Returns `Nb(k, G^k)` for every `k` and the fill edges in creation order.
pub fn elimination_neighborhoods(g: &UndirectedGraph) -> (Vec<BTreeSet<usize>>, Vec<(usize, usize)>) {
    let n = g.n();
    let mut work = g.clone();
    let mut nbs = vec![BTreeSet::new(); n];
    let mut fill = Vec::new();
    for k in (0..n).rev() {
        let nb: BTreeSet<usize> = work.neighbors(k).iter().copied().filter(|&v| v < k).collect();
        fill.extend(work.make_clique(&nb));
        work.isolate(k);
        nbs[k] = nb;
    }
    (nbs, fill)
}

/// The sequence `G^n, G^{n-1}, ..., G^1`; `G^k` has vertices `0..k`.
pub fn marginal_graphs(g: &UndirectedGraph) -> Vec<UndirectedGraph> {
    let n = g.n();
    let mut out = Vec::with_capacity(n);
    let mut work = g.clone();
    out.push(work.clone());
    for k in (1..n).rev() {
        let nb: Vec<usize> = work.neighbors(k).iter().copied().collect();
        work.make_clique(&nb);
        work = work.truncated(k);
        out.push(work.clone());
    }
    out
}

/// Predicted sparsity of the inverse triangular map: `(j, k)` is included
/// when `j < k` and `j` is not a neighbour of `k` in `G^k`.
pub fn inverse_sparsity(g: &UndirectedGraph) -> SparsityPattern {
    let (nbs, _) = elimination_neighborhoods(g);
    let n = g.n();
    let mut pattern = SparsityPattern::empty(n);
    for (k, nb) in nbs.iter().enumerate() {
        pattern.pairs.extend((0..k).filter(|j| !nb.contains(j)).map(|j| (j, k)));
    }
    pattern
}

/// Predicted sparsity of the direct triangular map.
///
/// `(j, k)` is included when `(j, i)` is included for every neighbour `i` of
/// `k` in `G^k`. For `i < j` the pair is implied by triangularity and for
/// `i == j` it never holds.
pub fn direct_sparsity(g: &UndirectedGraph) -> SparsityPattern {
    let (nbs, _) = elimination_neighborhoods(g);
    let n = g.n();
    let mut inside = vec![vec![false; n]; n];
    for k in 1..n {
        for j in 0..k {
            inside[j][k] = nbs[k].iter().all(|&i| match j.cmp(&i) {
                std::cmp::Ordering::Less => inside[j][i],
                std::cmp::Ordering::Equal => false,
                std::cmp::Ordering::Greater => true,
            });
        }
    }
    let mut pattern = SparsityPattern::empty(n);
    for k in 1..n {
        pattern.pairs.extend((0..k).filter(|&j| inside[j][k]).map(|j| (j, k)));
    }
    pattern
}

/// Fill edges produced by eliminating the relabelled graph, in new labels.
pub fn fill_in(g: &UndirectedGraph, order: &Ordering) -> Result<BTreeSet<(usize, usize)>> {
    let relabelled = g.relabel(order)?;
    Ok(elimination_neighborhoods(&relabelled).1.into_iter().collect())
}

fn missing_edges(g: &UndirectedGraph, v: usize) -> usize {
    let nb: Vec<usize> = g.neighbors(v).iter().copied().collect();
    let mut count = 0;
    for (a, &i) in nb.iter().enumerate() {
        count += nb[a + 1..].iter().filter(|&&j| !g.has_edge(i, j)).count();
    }
    count
}

/// Greedy min-fill elimination. The first vertex eliminated receives the
/// last label; ties go to the lowest original label.
pub fn min_fill_ordering(g: &UndirectedGraph) -> Ordering {
    let n = g.n();
    let mut work = g.clone();
    let mut remaining: BTreeSet<usize> = (0..n).collect();
    let mut perm = vec![0; n];
    for slot in (0..n).rev() {
        let v = *remaining.iter().min_by_key(|&&v| (missing_edges(&work, v), v)).expect("remaining vertices");
        let nb: Vec<usize> = work.neighbors(v).iter().copied().collect();
        work.make_clique(&nb);
        work.isolate(v);
        remaining.remove(&v);
        perm[slot] = v;
    }
    Ordering::new(perm).expect("elimination visits each vertex once")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> UndirectedGraph {
        UndirectedGraph::from_edges(5, &[(0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]).unwrap()
    }

    #[test]
    fn star_marginals_gain_edge() {
        let gs = marginal_graphs(&star());
        assert_eq!(gs.len(), 5);
        assert_eq!(gs[0], star());
        let g2 = &gs[3];
        assert_eq!(g2.n(), 2);
        assert!(g2.has_edge(0, 1));
    }

    #[test]
    fn star_patterns() {
        let s = inverse_sparsity(&star());
        let expected: BTreeSet<_> = [(0, 3), (1, 3), (0, 4), (1, 4)].into_iter().collect();
        assert_eq!(s.pairs, expected);
        assert!(direct_sparsity(&star()).is_empty());
    }

    #[test]
    fn chain_has_no_fill() {
        let g = UndirectedGraph::chain(4);
        let gs = marginal_graphs(&g);
        for (i, gk) in gs.iter().enumerate() {
            assert_eq!(*gk, UndirectedGraph::chain(4 - i));
        }
        assert!(fill_in(&g, &Ordering::identity(4)).unwrap().is_empty());
    }

    #[test]
    fn disconnected_pairs_are_independent() {
        let g = UndirectedGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let t = direct_sparsity(&g);
        for p in [(0, 2), (1, 2), (0, 3), (1, 3)] {
            assert!(t.pairs.contains(&p), "{p:?}");
        }
        assert!(!t.pairs.contains(&(2, 3)));
    }

    #[test]
    fn complete_and_trivial_graphs() {
        assert!(inverse_sparsity(&UndirectedGraph::complete(5)).is_empty());
        assert!(direct_sparsity(&UndirectedGraph::new(1)).is_empty());
        let empty = UndirectedGraph::new(4);
        assert_eq!(inverse_sparsity(&empty).len(), 6);
        assert!(marginal_graphs(&empty).iter().all(|g| g.edge_count() == 0));
    }

    #[test]
    fn min_fill_on_star_is_perfect() {
        let o = min_fill_ordering(&star());
        assert!(fill_in(&star(), &o).unwrap().is_empty());
    }
}
