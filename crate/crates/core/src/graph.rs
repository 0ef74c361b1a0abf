//! Undirected weighted graphs, edge sets and the Kruskal relaxation engine.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::union_find::DisjointSets;

/// Stable index of an edge: its position in the instance's edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An undirected edge with canonical endpoint order `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: EdgeId,
    pub u: usize,
    pub v: usize,
    pub cost: i64,
}

impl Edge {
    /// The endpoint that is not `node`.
    pub fn other(&self, node: usize) -> usize {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    /// Edge ids sorted by `(cost, id)`.
    order: Vec<EdgeId>,
}

impl Graph {
    /// Builds a graph from `(u, v, cost)` triples. Endpoints are put in
    /// canonical order; edge ids follow the input order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, i64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen = std::collections::HashSet::new();
        let mut list = Vec::new();
        for (id, (a, b, cost)) in edges.into_iter().enumerate() {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if cost < 0 {
                return Err(Error::NegativeCost { u, v, cost });
            }
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge { u, v });
            }
            list.push(Edge {
                id: EdgeId(id),
                u,
                v,
                cost,
            });
        }
        let mut order: Vec<EdgeId> = list.iter().map(|e| e.id).collect();
        order.sort_by_key(|&id| (list[id.0].cost, id));
        Ok(Graph { n, edges: list, order })
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

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn cost(&self, id: EdgeId) -> i64 {
        self.edges[id.0].cost
    }

    /// Edge ids in ascending `(cost, id)` order.
    pub fn sorted_edges(&self) -> &[EdgeId] {
        &self.order
    }

    pub fn check_edge(&self, id: EdgeId) -> Result<()> {
        if id.0 < self.edges.len() {
            Ok(())
        } else {
            Err(Error::InvalidEdge(id))
        }
    }

    pub fn is_connected(&self) -> bool {
        let mut ds = DisjointSets::new(self.n);
        for e in &self.edges {
            ds.union(e.u, e.v);
        }
        ds.components() == 1
    }

    /// Checks that `ids` form a spanning tree and packs them into one.
    pub fn spanning_tree(&self, ids: impl IntoIterator<Item = EdgeId>) -> Result<Option<SpanningTree>> {
        let mut ids: Vec<EdgeId> = ids.into_iter().collect();
        for &id in &ids {
            self.check_edge(id)?;
        }
        ids.sort_unstable();
        ids.dedup();
        if ids.len() + 1 != self.n {
            return Ok(None);
        }
        let mut ds = DisjointSets::new(self.n);
        for &id in &ids {
            let e = self.edge(id);
            if !ds.union(e.u, e.v) {
                return Ok(None);
            }
        }
        Ok(Some(SpanningTree::from_sorted(self, ids)))
    }
}

/// A set of edge ids backed by a bitset sized to the graph's edge count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    bits: FixedBitSet,
}

impl EdgeSet {
    pub fn new(capacity: usize) -> Self {
        EdgeSet {
            bits: FixedBitSet::with_capacity(capacity),
        }
    }

    pub fn with_edges(capacity: usize, ids: impl IntoIterator<Item = EdgeId>) -> Self {
        let mut set = EdgeSet::new(capacity);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    /// Grows the set if `id` is past the current capacity.
    pub fn insert(&mut self, id: EdgeId) -> bool {
        if id.0 >= self.bits.len() {
            self.bits.grow(id.0 + 1);
        }
        !self.bits.put(id.0)
    }

    pub fn remove(&mut self, id: EdgeId) {
        if id.0 < self.bits.len() {
            self.bits.set(id.0, false);
        }
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.bits.contains(id.0)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    /// Ascending iteration.
    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.bits.ones().map(EdgeId)
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn first_common(&self, other: &EdgeSet) -> Option<EdgeId> {
        self.bits.intersection(&other.bits).next().map(EdgeId)
    }
}

impl FromIterator<EdgeId> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = EdgeId>>(iter: I) -> Self {
        EdgeSet::with_edges(0, iter)
    }
}

/// A spanning tree given by its edge ids (ascending) and total cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpanningTree {
    pub edge_ids: Vec<EdgeId>,
    pub total_cost: i64,
}

impl SpanningTree {
    fn from_sorted(graph: &Graph, edge_ids: Vec<EdgeId>) -> Self {
        let total_cost = edge_ids.iter().map(|&id| graph.cost(id)).sum();
        SpanningTree { edge_ids, total_cost }
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.edge_ids.binary_search(&id).is_ok()
    }
}

/// Minimum spanning tree that contains every `forced_in` edge and no
/// `forced_out` edge. Conflicts are ignored.
///
/// Forced-in edges are merged first; the remaining edges are scanned in
/// ascending `(cost, id)` order. Returns `Ok(None)` when the forced-in edges
/// contain a cycle or the allowed edges do not connect the graph.
pub fn kruskal_mst(graph: &Graph, forced_in: &EdgeSet, forced_out: &EdgeSet) -> Result<Option<SpanningTree>> {
    let m = graph.edge_count();
    for id in forced_in.iter().chain(forced_out.iter()) {
        if id.0 >= m {
            return Err(Error::InvalidEdge(id));
        }
    }
    if let Some(id) = forced_in.first_common(forced_out) {
        return Err(Error::OverlappingForcedSets(id));
    }
    Ok(kruskal_unchecked(graph, forced_in, forced_out))
}

/// [`kruskal_mst`] without input validation, for callers that maintain the
/// preconditions themselves.
pub(crate) fn kruskal_unchecked(graph: &Graph, forced_in: &EdgeSet, forced_out: &EdgeSet) -> Option<SpanningTree> {
    let n = graph.node_count();
    let mut ds = DisjointSets::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for id in forced_in.iter() {
        let e = graph.edge(id);
        if !ds.union(e.u, e.v) {
            return None;
        }
        chosen.push(id);
    }
    if chosen.len() + 1 < n {
        for &id in graph.sorted_edges() {
            if forced_in.contains(id) || forced_out.contains(id) {
                continue;
            }
            let e = graph.edge(id);
            if ds.union(e.u, e.v) {
                chosen.push(id);
                if chosen.len() + 1 == n {
                    break;
                }
            }
        }
    }
    if chosen.len() + 1 != n {
        return None;
    }
    chosen.sort_unstable();
    Some(SpanningTree::from_sorted(graph, chosen))
}
