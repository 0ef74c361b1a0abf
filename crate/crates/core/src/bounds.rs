//! Quick bounds: the conflict-free MST relaxation from below and a greedy
//! conflict-aware Kruskal scan from above.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conflicts::{propagate, Instance};
use crate::graph::{kruskal_unchecked, EdgeId, EdgeSet, SpanningTree};
use crate::union_find::DisjointSets;

/// Default number of perturbed restarts for [`greedy_upper_bound`].
pub const DEFAULT_RESTARTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundResult {
    pub value: i64,
    pub witness: Option<SpanningTree>,
    pub kind: BoundKind,
}

/// Cost of the MST containing `forced_in`, avoiding `forced_out` and the
/// conflicts of `forced_in`, with all other conflicts dropped.
///
/// `None` means no spanning tree satisfies the forcing at all, which proves
/// the corresponding subproblem infeasible. The forced sets must be disjoint
/// and hold valid ids.
pub fn mst_lower_bound(instance: &Instance, forced_in: &EdgeSet, forced_out: &EdgeSet) -> Option<BoundResult> {
    let (closed, contradiction) = propagate(instance, forced_in, forced_out);
    if contradiction {
        return None;
    }
    let tree = kruskal_unchecked(&instance.graph, forced_in, &closed)?;
    Some(BoundResult {
        value: tree.total_cost,
        witness: Some(tree),
        kind: BoundKind::Lower,
    })
}

/// Greedy upper bound with [`DEFAULT_RESTARTS`] restarts and base seed 0.
pub fn greedy_upper_bound(instance: &Instance) -> Option<BoundResult> {
    greedy_upper_bound_with(instance, DEFAULT_RESTARTS, 0)
}

/// Kruskal scan in `(cost, id)` order that skips every edge in conflict with
/// an already selected one.
///
/// When the scan gets stuck, restart `r` (for `r` in `0..restarts`) draws from
/// a ChaCha8 stream seeded with `seed + r` and swaps one uniformly chosen pair
/// of adjacent equal-cost edges in the scan order (any adjacent pair if no
/// costs tie); swaps accumulate across restarts. `None` only means the
/// heuristic failed, not that the instance is infeasible.
pub fn greedy_upper_bound_with(instance: &Instance, restarts: usize, seed: u64) -> Option<BoundResult> {
    let mut order: Vec<EdgeId> = instance.graph.sorted_edges().to_vec();
    if let Some(tree) = greedy_scan(instance, &order) {
        return Some(upper(tree));
    }
    if order.len() < 2 {
        return None;
    }
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let ties: Vec<usize> = (0..order.len() - 1)
            .filter(|&i| instance.graph.cost(order[i]) == instance.graph.cost(order[i + 1]))
            .collect();
        let pos = if ties.is_empty() {
            rng.gen_range(0..order.len() - 1)
        } else {
            ties[rng.gen_range(0..ties.len())]
        };
        order.swap(pos, pos + 1);
        if let Some(tree) = greedy_scan(instance, &order) {
            return Some(upper(tree));
        }
    }
    None
}

fn upper(tree: SpanningTree) -> BoundResult {
    BoundResult {
        value: tree.total_cost,
        witness: Some(tree),
        kind: BoundKind::Upper,
    }
}

fn greedy_scan(instance: &Instance, order: &[EdgeId]) -> Option<SpanningTree> {
    let g = &instance.graph;
    let n = g.node_count();
    let mut ds = DisjointSets::new(n);
    let mut blocked = EdgeSet::new(g.edge_count());
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for &id in order {
        if chosen.len() + 1 >= n {
            break;
        }
        if blocked.contains(id) {
            continue;
        }
        let e = g.edge(id);
        if ds.union(e.u, e.v) {
            chosen.push(id);
            for &f in instance.conflicts.conflicting(id) {
                blocked.insert(f);
            }
        }
    }
    if chosen.len() + 1 != n {
        return None;
    }
    g.spanning_tree(chosen).ok().flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflicts::is_feasible;
    use crate::fixtures;
    use crate::graph::kruskal_mst;
    use crate::io::{generate, GeneratorSpec};

    fn empty(inst: &Instance) -> EdgeSet {
        EdgeSet::new(inst.edge_count())
    }

    #[test]
    fn seven_node_lower_bound() {
        let inst = fixtures::seven_node();
        let lb = mst_lower_bound(&inst, &empty(&inst), &empty(&inst)).unwrap();
        assert_eq!(lb.kind, BoundKind::Lower);
        // the relaxation optimum coincides with the conflict-feasible optimum here
        assert_eq!(lb.value, 13);
    }

    #[test]
    fn forcing_in_removes_partners_from_the_relaxation() {
        let inst = fixtures::seven_node();
        // force c-d in: a-d leaves, tree is otherwise unchanged
        let fin = EdgeSet::with_edges(12, [EdgeId(7)]);
        let lb = mst_lower_bound(&inst, &fin, &empty(&inst)).unwrap();
        assert_eq!(lb.value, 13);
        assert!(!lb.witness.unwrap().contains(EdgeId(3)));
        // forcing both blue edges cannot be satisfied
        let both = EdgeSet::with_edges(12, [EdgeId(5), EdgeId(6)]);
        assert!(mst_lower_bound(&inst, &both, &empty(&inst)).is_none());
    }

    #[test]
    fn disconnecting_forced_out_has_no_bound() {
        let inst = fixtures::seven_node();
        // f's only edges
        let out = EdgeSet::with_edges(12, [EdgeId(0), EdgeId(1)]);
        assert!(mst_lower_bound(&inst, &empty(&inst), &out).is_none());
    }

    #[test]
    fn conflict_free_bounds_coincide() {
        for seed in 0..20 {
            let inst = generate(&GeneratorSpec::sparse_family(15, 40, 0, seed)).unwrap();
            let mst = kruskal_mst(&inst.graph, &empty(&inst), &empty(&inst)).unwrap().unwrap();
            let lb = mst_lower_bound(&inst, &empty(&inst), &empty(&inst)).unwrap();
            let ub = greedy_upper_bound(&inst).unwrap();
            assert_eq!(lb.value, mst.total_cost);
            assert_eq!(ub.value, mst.total_cost);
        }
    }

    #[test]
    fn seven_node_upper_bound_is_feasible() {
        let inst = fixtures::seven_node();
        let ub = greedy_upper_bound(&inst).unwrap();
        assert_eq!(ub.kind, BoundKind::Upper);
        let tree = ub.witness.unwrap();
        assert!(ub.value >= 13);
        assert_eq!(tree.total_cost, ub.value);
        assert!(is_feasible(&inst, &tree).unwrap().feasible);
    }

    #[test]
    fn fully_conflicting_triangle_has_no_upper_bound() {
        assert!(greedy_upper_bound(&fixtures::triangle()).is_none());
    }

    #[test]
    fn upper_witnesses_are_feasible_and_above_lower() {
        for seed in 0..200 {
            let inst = generate(&GeneratorSpec::sparse_family(12, 30, 60, seed)).unwrap();
            let lb = mst_lower_bound(&inst, &empty(&inst), &empty(&inst)).unwrap();
            if let Some(ub) = greedy_upper_bound_with(&inst, 8, seed) {
                let tree = ub.witness.as_ref().unwrap();
                assert!(is_feasible(&inst, tree).unwrap().feasible);
                assert_eq!(tree.total_cost, ub.value);
                assert!(lb.value <= ub.value);
            }
        }
    }

    #[test]
    fn restarts_can_recover_from_a_bad_first_pass() {
        // 0-1 (1), 1-2 (1), 0-2 (1), 2-3 (1); edge 0 conflicts with edge 3, which is
        // the only way to reach node 3, so the first scan gets stuck
        let inst = Instance::from_parts("stuck", 4, [(0, 1, 1), (1, 2, 1), (0, 2, 1), (2, 3, 1)], [(0, 3)]).unwrap();
        assert!(greedy_scan(&inst, inst.graph.sorted_edges()).is_none());
        let ub = greedy_upper_bound(&inst).unwrap();
        assert_eq!(ub.value, 3);
        assert!(!ub.witness.unwrap().contains(EdgeId(0)));
    }
}
