//! Minimum spanning trees with conflicting edge pairs.
//!
//! A spanning tree is feasible when it holds at most one edge of every
//! conflicting pair. This crate provides:
//!
//! * [`graph`] and [`union_find`]: graphs and the Kruskal relaxation,
//! * [`conflicts`]: conflict pairs, instances, feasibility checks,
//! * [`bounds`]: MST lower bound and greedy upper bound,
//! * [`bnb`]: an exact best-first branch-and-bound solver,
//! * [`oracle`]: exhaustive enumeration for small instances,
//! * [`model`]: the flow MILP and an LP-format writer,
//! * [`io`]: the instance file format and a seeded generator,
//! * [`bench`]: suite runs and result tables.

pub mod bench;
pub mod bnb;
pub mod bounds;
pub mod conflicts;
pub mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod union_find;

#[cfg(test)]
mod fixtures;

pub use bnb::{solve, solve_with, SolveConfig, SolveReport, SolveStatus};
pub use conflicts::{is_feasible, propagate, ConflictSet, Feasibility, Instance};
pub use error::{Error, ParseError, Result};
pub use graph::{kruskal_mst, Edge, EdgeId, EdgeSet, Graph, SpanningTree};
