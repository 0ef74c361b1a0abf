//! Exact best-first branch-and-bound.
//!
//! Every node is a pair of forcing decisions. Its bound is the MST that
//! contains the forced-in edges and avoids the forced-out edges together with
//! everything in conflict with a forced-in edge. A node whose bound tree is
//! conflict-free is solved. Otherwise the solver picks the violated pair with
//! the largest combined cost (ties by ascending `(min id, max id)`), takes a
//! member `e` that is not already forced in, and branches on `e` out versus
//! `e` in. Each child's bound is computed when the child is created, so the
//! open list is ordered by `(bound, depth, creation order)`.
//!
//! When the time or node limit is hit, the global lower bound is the smallest
//! bound still open (capped by the incumbent cost).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::conflicts::{check_edges, propagate, Instance};
use crate::error::{Error, Result};
use crate::graph::{kruskal_unchecked, EdgeId, EdgeSet, SpanningTree};

pub const DEFAULT_TIME_LIMIT_SECONDS: f64 = 5010.0;
pub const DEFAULT_NODE_LIMIT: u64 = 50_000_000;
pub const DEFAULT_DFS_THRESHOLD: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub time_limit_seconds: f64,
    /// Cost of some known feasible tree. Subtrees whose bound exceeds it are
    /// pruned, so a value below the true optimum makes the search report
    /// `Infeasible`.
    pub initial_ub: Option<i64>,
    pub workers: usize,
    /// Stop after evaluating this many nodes (reported as `TimeLimit`).
    pub node_limit: u64,
    /// Open-list size past which new children are explored depth-first.
    pub dfs_threshold: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit_seconds: DEFAULT_TIME_LIMIT_SECONDS,
            initial_ub: None,
            workers: 1,
            node_limit: DEFAULT_NODE_LIMIT,
            dfs_threshold: DEFAULT_DFS_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub lower_bound: Option<i64>,
    pub upper_bound: Option<i64>,
    pub incumbent: Option<SpanningTree>,
    pub elapsed_seconds: f64,
    pub nodes_explored: u64,
    pub time_limit_seconds: f64,
    pub node_limit_reached: bool,
    /// The open list outgrew the depth-first threshold at some point.
    pub depth_first_fallback: bool,
}

/// Snapshot handed to the progress callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub elapsed_seconds: f64,
    pub nodes_explored: u64,
    pub open_nodes: usize,
    pub lower_bound: Option<i64>,
    pub upper_bound: Option<i64>,
}

/// One open node of the search tree.
#[derive(Debug, Clone)]
pub struct SolveState {
    /// Branching decisions only; conflicts of forced-in edges are added by
    /// [`propagate`] when the node is expanded.
    pub forced_in: Vec<EdgeId>,
    pub forced_out: Vec<EdgeId>,
    pub local_lb: i64,
    pub depth: u32,
    seq: u64,
    branch_edge: EdgeId,
}

impl PartialEq for SolveState {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SolveState {}

impl PartialOrd for SolveState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SolveState {
    // reversed: BinaryHeap pops the smallest (lb, depth, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.local_lb, other.depth, other.seq).cmp(&(self.local_lb, self.depth, self.seq))
    }
}

enum Evaluation {
    Pruned,
    Feasible(SpanningTree),
    Branch { bound: i64, edge: EdgeId },
}

fn evaluate(instance: &Instance, forced_in: &[EdgeId], forced_out: &[EdgeId]) -> Evaluation {
    let m = instance.edge_count();
    let fin = EdgeSet::with_edges(m, forced_in.iter().copied());
    let fout = EdgeSet::with_edges(m, forced_out.iter().copied());
    let (closed, contradiction) = propagate(instance, &fin, &fout);
    if contradiction {
        return Evaluation::Pruned;
    }
    let Some(tree) = kruskal_unchecked(&instance.graph, &fin, &closed) else {
        return Evaluation::Pruned;
    };
    let check = check_edges(instance, &tree.edge_ids);
    if check.feasible {
        return Evaluation::Feasible(tree);
    }
    let g = &instance.graph;
    let mut pair = check.violations[0];
    for &(a, b) in &check.violations[1..] {
        // violations are sorted, so strict > keeps the smallest ids on ties
        if g.cost(a) + g.cost(b) > g.cost(pair.0) + g.cost(pair.1) {
            pair = (a, b);
        }
    }
    let (a, b) = pair;
    // at most one member can be forced in, otherwise propagation contradicts
    let edge = if fin.contains(a) {
        b
    } else if fin.contains(b) {
        a
    } else if g.cost(b) > g.cost(a) {
        b
    } else {
        a
    };
    Evaluation::Branch {
        bound: tree.total_cost,
        edge,
    }
}

#[derive(Default)]
struct Frontier {
    heap: BinaryHeap<SolveState>,
    dive: Vec<SolveState>,
    busy: usize,
    dfs_used: bool,
}

impl Frontier {
    fn len(&self) -> usize {
        self.heap.len() + self.dive.len()
    }

    fn pop(&mut self) -> Option<SolveState> {
        self.dive.pop().or_else(|| self.heap.pop())
    }

    fn push(&mut self, node: SolveState, dfs_threshold: usize) {
        if self.heap.len() >= dfs_threshold {
            self.dfs_used = true;
            self.dive.push(node);
        } else {
            self.heap.push(node);
        }
    }

    fn min_bound(&self) -> Option<i64> {
        self.heap.iter().chain(self.dive.iter()).map(|s| s.local_lb).min()
    }
}

const NO_COST: i64 = i64::MAX;

struct Search<'a> {
    instance: &'a Instance,
    config: &'a SolveConfig,
    start: Instant,
    deadline: Duration,
    frontier: Mutex<Frontier>,
    wake: Condvar,
    incumbent: Mutex<Option<SpanningTree>>,
    best_cost: AtomicI64,
    nodes: AtomicU64,
    seq: AtomicU64,
    stop: AtomicBool,
    node_limit_hit: AtomicBool,
}

impl<'a> Search<'a> {
    /// Subtrees with bound >= this are useless once a tree is known. With only
    /// a seeded upper bound, bound == seed must still be explored to find a
    /// witness.
    fn prunes(&self, bound: i64) -> bool {
        let best = self.best_cost.load(AtomicOrdering::Acquire);
        if best != NO_COST {
            return bound >= best;
        }
        matches!(self.config.initial_ub, Some(ub) if bound > ub)
    }

    fn offer(&self, tree: SpanningTree) {
        let mut inc = self.incumbent.lock().unwrap();
        if inc.as_ref().is_none_or(|t| tree.total_cost < t.total_cost) {
            self.best_cost.store(tree.total_cost, AtomicOrdering::Release);
            *inc = Some(tree);
        }
    }

    /// Evaluates a node and returns it as an open node if it needs branching.
    fn create(&self, forced_in: Vec<EdgeId>, forced_out: Vec<EdgeId>, depth: u32) -> Option<SolveState> {
        self.nodes.fetch_add(1, AtomicOrdering::Relaxed);
        match evaluate(self.instance, &forced_in, &forced_out) {
            Evaluation::Pruned => None,
            Evaluation::Feasible(tree) => {
                self.offer(tree);
                None
            }
            Evaluation::Branch { bound, edge } => {
                if self.prunes(bound) {
                    return None;
                }
                Some(SolveState {
                    forced_in,
                    forced_out,
                    local_lb: bound,
                    depth,
                    seq: self.seq.fetch_add(1, AtomicOrdering::Relaxed),
                    branch_edge: edge,
                })
            }
        }
    }

    fn out_of_budget(&self) -> bool {
        if self.nodes.load(AtomicOrdering::Relaxed) >= self.config.node_limit {
            self.node_limit_hit.store(true, AtomicOrdering::Relaxed);
            return true;
        }
        self.start.elapsed() >= self.deadline
    }

    fn worker(&self, progress: Option<&(dyn Fn(&Progress) + Sync)>, interval: Duration) {
        let mut next_report = interval;
        loop {
            let node = {
                let mut frontier = self.frontier.lock().unwrap();
                loop {
                    if self.stop.load(AtomicOrdering::Acquire) {
                        return;
                    }
                    if let Some(node) = frontier.pop() {
                        if self.out_of_budget() {
                            frontier.push(node, usize::MAX);
                            self.stop.store(true, AtomicOrdering::Release);
                            self.wake.notify_all();
                            return;
                        }
                        frontier.busy += 1;
                        break node;
                    }
                    if frontier.busy == 0 {
                        self.wake.notify_all();
                        return;
                    }
                    frontier = self.wake.wait(frontier).unwrap();
                }
            };

            let mut children = Vec::with_capacity(2);
            if !self.prunes(node.local_lb) {
                let e = node.branch_edge;
                let mut out = node.forced_out.clone();
                out.push(e);
                children.extend(self.create(node.forced_in.clone(), out, node.depth + 1));
                let mut fin = node.forced_in;
                fin.push(e);
                children.extend(self.create(fin, node.forced_out, node.depth + 1));
            }

            let mut frontier = self.frontier.lock().unwrap();
            for child in children {
                frontier.push(child, self.config.dfs_threshold);
            }
            frontier.busy -= 1;
            if let Some(report) = progress {
                let elapsed = self.start.elapsed();
                if elapsed >= next_report {
                    next_report = elapsed + interval;
                    report(&Progress {
                        elapsed_seconds: elapsed.as_secs_f64(),
                        nodes_explored: self.nodes.load(AtomicOrdering::Relaxed),
                        open_nodes: frontier.len(),
                        lower_bound: frontier.min_bound(),
                        upper_bound: self.current_ub(),
                    });
                }
            }
            drop(frontier);
            self.wake.notify_all();
        }
    }

    fn current_ub(&self) -> Option<i64> {
        match self.best_cost.load(AtomicOrdering::Acquire) {
            NO_COST => self.config.initial_ub,
            c => Some(c),
        }
    }
}

/// Solves with the default configuration apart from the time limit and seed.
pub fn solve(instance: &Instance, time_limit_seconds: f64, initial_ub: Option<i64>) -> Result<SolveReport> {
    solve_with(
        instance,
        &SolveConfig {
            time_limit_seconds,
            initial_ub,
            ..SolveConfig::default()
        },
    )
}

pub fn solve_with(instance: &Instance, config: &SolveConfig) -> Result<SolveReport> {
    solve_with_progress(instance, config, None, Duration::from_secs(10))
}

/// Full entry point. `progress`, when given, is called from a worker roughly
/// every `interval`.
pub fn solve_with_progress(
    instance: &Instance,
    config: &SolveConfig,
    progress: Option<&(dyn Fn(&Progress) + Sync)>,
    interval: Duration,
) -> Result<SolveReport> {
    if config.time_limit_seconds.is_nan() || config.time_limit_seconds <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "time limit must be positive, got {}",
            config.time_limit_seconds
        )));
    }
    if config.workers == 0 {
        return Err(Error::InvalidConfig("at least one worker is required".into()));
    }
    let deadline = Duration::try_from_secs_f64(config.time_limit_seconds).unwrap_or(Duration::MAX);
    let search = Search {
        instance,
        config,
        start: Instant::now(),
        deadline,
        frontier: Mutex::new(Frontier::default()),
        wake: Condvar::new(),
        incumbent: Mutex::new(None),
        best_cost: AtomicI64::new(NO_COST),
        nodes: AtomicU64::new(0),
        seq: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        node_limit_hit: AtomicBool::new(false),
    };

    if let Some(root) = search.create(Vec::new(), Vec::new(), 0) {
        search.frontier.lock().unwrap().push(root, config.dfs_threshold);
    }
    if config.workers == 1 {
        search.worker(progress, interval);
    } else {
        std::thread::scope(|scope| {
            for _ in 0..config.workers {
                scope.spawn(|| search.worker(progress, interval));
            }
        });
    }

    let elapsed_seconds = search.start.elapsed().as_secs_f64();
    let frontier = search.frontier.into_inner().unwrap();
    let incumbent = search.incumbent.into_inner().unwrap();
    let nodes_explored = search.nodes.load(AtomicOrdering::Relaxed);
    let exhausted = frontier.len() == 0;
    let inc_cost = incumbent.as_ref().map(|t| t.total_cost);

    let (status, lower_bound, upper_bound) = if exhausted {
        match inc_cost {
            Some(c) => (SolveStatus::Optimal, Some(c), Some(c)),
            None => (SolveStatus::Infeasible, None, None),
        }
    } else {
        let ub = inc_cost.or(config.initial_ub);
        let open = frontier.min_bound();
        let lb = match (open, ub) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        (SolveStatus::TimeLimit, lb, ub)
    };
    let incumbent = if status == SolveStatus::Infeasible {
        None
    } else {
        incumbent
    };

    Ok(SolveReport {
        status,
        lower_bound,
        upper_bound,
        incumbent,
        elapsed_seconds,
        nodes_explored,
        time_limit_seconds: config.time_limit_seconds,
        node_limit_reached: !exhausted && search.node_limit_hit.load(AtomicOrdering::Relaxed),
        depth_first_fallback: frontier.dfs_used,
    })
}
