//! Conflicting edge pairs and the instances that carry them.
//!
//! Forcing an edge out never forces anything in, so the closure computed by
//! [`propagate`] needs a single pass: `forced_out ∪ δ(forced_in)`.

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeSet, Graph, SpanningTree};

/// Unordered conflict pairs, stored `(smaller, larger)` and sorted, plus the
/// per-edge conflict lists δ(e).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConflictSet {
    pairs: Vec<(EdgeId, EdgeId)>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl ConflictSet {
    /// Builds the set for a graph with `edge_count` edges. Repeated pairs (in
    /// either orientation) are collapsed; the number of dropped duplicates is
    /// returned alongside the set.
    pub fn new(edge_count: usize, pairs: impl IntoIterator<Item = (EdgeId, EdgeId)>) -> Result<(Self, usize)> {
        let mut list = Vec::new();
        for (a, b) in pairs {
            for id in [a, b] {
                if id.0 >= edge_count {
                    return Err(Error::InvalidEdge(id));
                }
            }
            if a == b {
                return Err(Error::SelfConflict(a));
            }
            list.push(if a < b { (a, b) } else { (b, a) });
        }
        let raw = list.len();
        list.sort_unstable();
        list.dedup();
        let duplicates = raw - list.len();

        let mut adjacency = vec![Vec::new(); edge_count];
        for &(a, b) in &list {
            adjacency[a.0].push(b);
            adjacency[b.0].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok((ConflictSet { pairs: list, adjacency }, duplicates))
    }

    pub fn empty(edge_count: usize) -> Self {
        ConflictSet {
            pairs: Vec::new(),
            adjacency: vec![Vec::new(); edge_count],
        }
    }

    pub fn pairs(&self) -> &[(EdgeId, EdgeId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// δ(e), ascending.
    pub fn conflicting(&self, e: EdgeId) -> &[EdgeId] {
        &self.adjacency[e.0]
    }

    pub fn in_conflict(&self, a: EdgeId, b: EdgeId) -> bool {
        self.adjacency[a.0].binary_search(&b).is_ok()
    }
}

/// A graph together with its conflict pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub graph: Graph,
    pub conflicts: ConflictSet,
}

impl Instance {
    pub fn new(name: impl Into<String>, graph: Graph, conflicts: ConflictSet) -> Result<Self> {
        let m = graph.edge_count();
        // pairs are stored (smaller, larger)
        if let Some(&(_, b)) = conflicts.pairs.iter().find(|&&(_, b)| b.0 >= m) {
            return Err(Error::InvalidEdge(b));
        }
        let mut conflicts = conflicts;
        conflicts.adjacency.resize(m, Vec::new());
        Ok(Instance {
            name: name.into(),
            graph,
            conflicts,
        })
    }

    /// Convenience constructor from raw triples and edge-index pairs.
    pub fn from_parts(
        name: impl Into<String>,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, i64)>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let graph = Graph::new(n, edges)?;
        let (conflicts, _) = ConflictSet::new(
            graph.edge_count(),
            pairs.into_iter().map(|(a, b)| (EdgeId(a), EdgeId(b))),
        )?;
        Instance::new(name, graph, conflicts)
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn conflict_count(&self) -> usize {
        self.conflicts.len()
    }

    /// Same graph, no conflicts.
    pub fn relaxed(&self) -> Instance {
        Instance {
            name: self.name.clone(),
            graph: self.graph.clone(),
            conflicts: ConflictSet::empty(self.graph.edge_count()),
        }
    }
}

/// Outcome of [`is_feasible`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Violated pairs sorted by `(min id, max id)`.
    pub violations: Vec<(EdgeId, EdgeId)>,
}

/// Checks a tree against every conflict pair.
pub fn is_feasible(instance: &Instance, tree: &SpanningTree) -> Result<Feasibility> {
    for &id in &tree.edge_ids {
        instance.graph.check_edge(id)?;
    }
    Ok(check_edges(instance, &tree.edge_ids))
}

/// Conflict check for an ascending list of valid edge ids.
pub(crate) fn check_edges(instance: &Instance, sorted_ids: &[EdgeId]) -> Feasibility {
    let members = EdgeSet::with_edges(instance.edge_count(), sorted_ids.iter().copied());
    let mut violations = Vec::new();
    for &e in sorted_ids {
        for &f in instance.conflicts.conflicting(e) {
            if f > e && members.contains(f) {
                violations.push((e, f));
            }
        }
    }
    Feasibility {
        feasible: violations.is_empty(),
        violations,
    }
}

/// Closes `forced_out` under the conflicts of `forced_in`.
///
/// Returns the closed set and whether it intersects `forced_in` (two forced-in
/// edges in conflict).
pub fn propagate(instance: &Instance, forced_in: &EdgeSet, forced_out: &EdgeSet) -> (EdgeSet, bool) {
    let mut closed = forced_out.clone();
    for e in forced_in.iter() {
        for &f in instance.conflicts.conflicting(e) {
            closed.insert(f);
        }
    }
    let contradiction = closed.first_common(forced_in).is_some();
    (closed, contradiction)
}
