//! Exhaustive reference solver for small instances.

use itertools::Itertools;

use crate::conflicts::Instance;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, SpanningTree};

/// Largest edge count [`brute_force_oracle`] accepts.
pub const ORACLE_EDGE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    Optimal(SpanningTree),
    Infeasible,
}

impl OracleResult {
    pub fn cost(&self) -> Option<i64> {
        match self {
            OracleResult::Optimal(t) => Some(t.total_cost),
            OracleResult::Infeasible => None,
        }
    }
}

/// Enumerates every `(n-1)`-edge subset and keeps the cheapest conflict-free
/// spanning tree (first in lexicographic subset order on ties).
pub fn brute_force_oracle(instance: &Instance) -> Result<OracleResult> {
    let m = instance.edge_count();
    if m > ORACLE_EDGE_LIMIT {
        return Err(Error::TooManyEdges {
            m,
            limit: ORACLE_EDGE_LIMIT,
        });
    }
    let n = instance.node_count();
    let edges = instance.graph.edges();
    let pairs = instance.conflicts.pairs();
    let mut best: Option<(i64, Vec<usize>)> = None;

    for subset in (0..m).combinations(n - 1) {
        let mut mask = 0u32;
        for &e in &subset {
            mask |= 1 << e;
        }
        if pairs
            .iter()
            .any(|&(a, b)| mask & (1 << a.0) != 0 && mask & (1 << b.0) != 0)
        {
            continue;
        }
        // n-1 edges span iff they reach every node from node 0
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &e in &subset {
                let edge = &edges[e];
                let y = if edge.u == x {
                    edge.v
                } else if edge.v == x {
                    edge.u
                } else {
                    continue;
                };
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            continue;
        }
        let cost: i64 = subset.iter().map(|&e| edges[e].cost).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, subset));
        }
    }

    Ok(match best {
        Some((cost, subset)) => OracleResult::Optimal(SpanningTree {
            edge_ids: subset.into_iter().map(EdgeId).collect(),
            total_cost: cost,
        }),
        None => OracleResult::Infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::io::{generate, GeneratorSpec};

    #[test]
    fn seven_node_optimum_is_13() {
        let res = brute_force_oracle(&fixtures::seven_node()).unwrap();
        assert_eq!(res.cost(), Some(13));
    }

    #[test]
    fn unit_triangle_without_conflicts() {
        let inst = Instance::from_parts("k3", 3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)], []).unwrap();
        assert_eq!(brute_force_oracle(&inst).unwrap().cost(), Some(2));
    }

    #[test]
    fn conflicting_triangle_is_infeasible() {
        assert_eq!(
            brute_force_oracle(&fixtures::triangle()).unwrap(),
            OracleResult::Infeasible
        );
    }

    #[test]
    fn large_instances_are_refused() {
        let inst = generate(&GeneratorSpec::sparse_family(10, 21, 0, 0)).unwrap();
        assert_eq!(brute_force_oracle(&inst), Err(Error::TooManyEdges { m: 21, limit: 20 }));
    }

    #[test]
    fn single_node() {
        let inst = Instance::from_parts("one", 1, [], []).unwrap();
        assert_eq!(brute_force_oracle(&inst).unwrap().cost(), Some(0));
    }
}
