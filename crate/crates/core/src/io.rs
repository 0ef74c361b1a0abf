//! Instance files and the seeded instance generator.
//!
//! # File format
//!
//! ASCII, whitespace-separated integers, one record per line. Blank lines and
//! lines starting with `#` are ignored.
//!
//! ```text
//! n m p
//! u v cost      (m lines, edge ids 0..m in this order)
//! e1 e2         (p lines, 0-based edge indices)
//! ```
//!
//! Some older benchmark files list conflicts by endpoints instead
//! (`i j k l`, meaning edge `{i,j}` conflicts with edge `{k,l}`); see
//! [`ConflictFormat::Endpoints`].
//!
//! # Generator
//!
//! Instances are a pure function of [`GeneratorSpec`]. The PRNG is ChaCha8
//! (`rand_chacha`) seeded with `seed_from_u64(seed)`, using three independent
//! streams so that changing one count never perturbs the other draws:
//!
//! * stream 0 (topology): a Prüfer sequence of length `n - 2` drawn uniformly,
//!   decoded into a uniformly random labelled spanning tree; then
//!   `m - (n - 1)` further node pairs sampled without replacement from the
//!   pairs not in the tree. The edge list is sorted by `(u, v)`.
//! * stream 1 (costs): one uniform draw in `[lo, hi]` per edge, in edge order.
//! * stream 2 (conflicts): `p` distinct ranks sampled without replacement from
//!   the `m (m - 1) / 2` unordered edge pairs (ranked lexicographically),
//!   then sorted.
//!
//! Density counts use round-half-up: `m = round(d n (n-1) / 2)`,
//! `p = round(q m (m-1) / 2)`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conflicts::{ConflictSet, Instance};
use crate::error::{Error, ParseError, Result};
use crate::graph::{EdgeId, Graph};

/// How conflict lines are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConflictFormat {
    /// `e1 e2`: two edge indices.
    #[default]
    EdgeIndex,
    /// `i j k l`: endpoints of both edges.
    Endpoints,
}

#[derive(Debug, Clone)]
pub struct ParsedInstance {
    pub instance: Instance,
    /// Conflict lines dropped because the same unordered pair already appeared.
    pub duplicate_conflicts: usize,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next significant line as (1-based number, tokens).
    fn next_record(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some((i + 1, trimmed.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> std::result::Result<(usize, Vec<&'a str>), ParseError> {
        self.next_record()
            .ok_or_else(|| ParseError::new(self.last + 1, format!("unexpected end of input, expected {what}")))
    }
}

fn ints<T: std::str::FromStr>(
    line: usize,
    tokens: &[&str],
    arity: usize,
    what: &str,
) -> std::result::Result<Vec<T>, ParseError> {
    if tokens.len() != arity {
        return Err(ParseError::new(
            line,
            format!("expected {arity} integers for {what}, found {} fields", tokens.len()),
        ));
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| ParseError::new(line, format!("invalid integer '{t}' in {what}")))
        })
        .collect()
}

/// Parses an instance. Edge ids follow file order; the instance name is left
/// empty (see [`read_instance_file`]).
pub fn parse_instance(text: &str, format: ConflictFormat) -> std::result::Result<ParsedInstance, ParseError> {
    let mut lines = Lines::new(text);
    let (hline, header) = lines.expect("header 'n m p'")?;
    let h: Vec<usize> = ints(hline, &header, 3, "header 'n m p'")?;
    let (n, m, p) = (h[0], h[1], h[2]);
    if n == 0 {
        return Err(ParseError::new(hline, "node count must be positive"));
    }

    let mut edges = Vec::with_capacity(m);
    let mut endpoint_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(m);
    for id in 0..m {
        let (line, tokens) = lines.expect("edge line 'u v cost'")?;
        let rec: Vec<i64> = ints(line, &tokens, 3, "edge 'u v cost'")?;
        let (a, b, cost) = (rec[0], rec[1], rec[2]);
        for node in [a, b] {
            if node < 0 || node as usize >= n {
                return Err(ParseError::new(line, format!("node {node} out of range [0, {n})")));
            }
        }
        if a == b {
            return Err(ParseError::new(line, format!("self-loop on node {a}")));
        }
        if cost < 0 {
            return Err(ParseError::new(line, format!("negative cost {cost}")));
        }
        let key = (a.min(b) as usize, a.max(b) as usize);
        if endpoint_index.insert(key, id).is_some() {
            return Err(ParseError::new(
                line,
                format!("duplicate edge {{{}, {}}}", key.0, key.1),
            ));
        }
        edges.push((a as usize, b as usize, cost));
    }

    let mut pairs = Vec::with_capacity(p);
    for _ in 0..p {
        let (line, tokens) = lines.expect("conflict line")?;
        let (e, f) = match format {
            ConflictFormat::EdgeIndex => {
                let rec: Vec<usize> = ints(line, &tokens, 2, "conflict 'e1 e2'")?;
                for &id in &rec {
                    if id >= m {
                        return Err(ParseError::new(line, format!("edge index {id} out of range [0, {m})")));
                    }
                }
                (rec[0], rec[1])
            }
            ConflictFormat::Endpoints => {
                let rec: Vec<usize> = ints(line, &tokens, 4, "conflict 'i j k l'")?;
                let lookup = |a: usize, b: usize| {
                    endpoint_index
                        .get(&(a.min(b), a.max(b)))
                        .copied()
                        .ok_or_else(|| ParseError::new(line, format!("no edge {{{a}, {b}}} in the graph")))
                };
                (lookup(rec[0], rec[1])?, lookup(rec[2], rec[3])?)
            }
        };
        if e == f {
            return Err(ParseError::new(line, format!("edge {e} conflicts with itself")));
        }
        pairs.push((EdgeId(e), EdgeId(f)));
    }

    if let Some((line, _)) = lines.next_record() {
        return Err(ParseError::new(line, "unexpected trailing content"));
    }

    // everything was validated above, so these cannot fail
    let graph = Graph::new(n, edges).map_err(|e| ParseError::new(hline, e.to_string()))?;
    let (conflicts, duplicate_conflicts) =
        ConflictSet::new(m, pairs).map_err(|e| ParseError::new(hline, e.to_string()))?;
    let instance = Instance::new(String::new(), graph, conflicts).map_err(|e| ParseError::new(hline, e.to_string()))?;
    Ok(ParsedInstance {
        instance,
        duplicate_conflicts,
    })
}

/// Canonical text: header, edges in id order with `u < v`, conflicts sorted.
pub fn write_instance(instance: &Instance) -> String {
    let g = &instance.graph;
    let mut out = String::with_capacity(16 * (g.edge_count() + instance.conflict_count() + 1));
    let _ = writeln!(
        out,
        "{} {} {}",
        g.node_count(),
        g.edge_count(),
        instance.conflict_count()
    );
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.cost);
    }
    for &(a, b) in instance.conflicts.pairs() {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

/// Errors from reading an instance file.
#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{}: {}", .source.line, .source.message)]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

/// Reads and parses a file; the instance is named after the file stem.
pub fn read_instance_file(path: &Path, format: ConflictFormat) -> std::result::Result<ParsedInstance, ReadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ReadError::Io {
        path: shown.clone(),
        source,
    })?;
    let mut parsed = parse_instance(&text, format).map_err(|source| ReadError::Parse { path: shown, source })?;
    parsed.instance.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(parsed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCount {
    Explicit(usize),
    /// Fraction of the `n (n-1) / 2` possible edges.
    Density(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConflictCount {
    Explicit(usize),
    /// Fraction of the `m (m-1) / 2` possible edge pairs.
    Density(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub edges: EdgeCount,
    /// Inclusive cost range.
    pub cost_range: (i64, i64),
    pub conflicts: ConflictCount,
    pub seed: u64,
}

impl GeneratorSpec {
    /// The first benchmark family: explicit edge and conflict counts, costs 0..=500.
    pub fn sparse_family(n: usize, m: usize, p: usize, seed: u64) -> Self {
        GeneratorSpec {
            n,
            edges: EdgeCount::Explicit(m),
            cost_range: (0, 500),
            conflicts: ConflictCount::Explicit(p),
            seed,
        }
    }

    /// The second benchmark family: densities for edges (0.2, 0.3, 0.4) and
    /// conflicts (0.01, 0.04, 0.07), costs 1..=30.
    pub fn dense_family(n: usize, edge_density: f64, conflict_density: f64, seed: u64) -> Self {
        GeneratorSpec {
            n,
            edges: EdgeCount::Density(edge_density),
            cost_range: (1, 30),
            conflicts: ConflictCount::Density(conflict_density),
            seed,
        }
    }

    /// Resolves densities to `(m, p)` and checks the arithmetic.
    pub fn counts(&self) -> Result<(usize, usize)> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        let max_m = pair_count(n);
        let m = match self.edges {
            EdgeCount::Explicit(m) => m,
            EdgeCount::Density(d) => density_count(d, max_m, "edge")?,
        };
        if m + 1 < n {
            return Err(Error::InvalidSpec(format!("{m} edges cannot connect {n} nodes")));
        }
        if m > max_m {
            return Err(Error::InvalidSpec(format!("{m} edges exceed the {max_m} node pairs")));
        }
        let max_p = pair_count(m);
        let p = match self.conflicts {
            ConflictCount::Explicit(p) => p,
            ConflictCount::Density(q) => density_count(q, max_p, "conflict")?,
        };
        if p > max_p {
            return Err(Error::InvalidSpec(format!(
                "{p} conflicts exceed the {max_p} edge pairs"
            )));
        }
        let (lo, hi) = self.cost_range;
        if lo < 0 || lo > hi {
            return Err(Error::InvalidSpec(format!("invalid cost range [{lo}, {hi}]")));
        }
        Ok((m, p))
    }
}

fn pair_count(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

fn density_count(density: f64, total: usize, what: &str) -> Result<usize> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidSpec(format!("{what} density {density} outside [0, 1]")));
    }
    Ok((density * total as f64 + 0.5).floor() as usize)
}

/// Inverse of the lexicographic rank of `(i, j)`, `i < j < k`, among the
/// pairs of `0..k`.
fn unrank_pair(rank: usize, k: usize) -> (usize, usize) {
    // rows before i hold (k-1) + (k-2) + ... + (k-i) pairs
    let row_start = |i: usize| i * (2 * k - i - 1) / 2;
    let (mut lo, mut hi) = (0usize, k - 1);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if row_start(mid) <= rank {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = lo;
    (i, i + 1 + rank - row_start(i))
}

fn rank_pair(i: usize, j: usize, k: usize) -> usize {
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

/// Uniform labelled tree on `n` nodes via a random Prüfer sequence.
fn random_tree(n: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut tree = Vec::with_capacity(n - 1);
    for &s in &seq {
        let Reverse(leaf) = leaves.pop().expect("a Prüfer decode always has a leaf");
        tree.push((leaf.min(s), leaf.max(s)));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    tree.push((a.min(b), a.max(b)));
    tree
}

/// Builds a connected random instance, named `n-m-p-seed`.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    let (m, p) = spec.counts()?;
    let n = spec.n;

    let mut topo = ChaCha8Rng::seed_from_u64(spec.seed);
    topo.set_stream(0);
    let mut pairs = random_tree(n, &mut topo);

    let extra = m + 1 - n;
    if extra > 0 {
        let mut tree_ranks: Vec<usize> = pairs.iter().map(|&(u, v)| rank_pair(u, v, n)).collect();
        tree_ranks.sort_unstable();
        let free = pair_count(n) - tree_ranks.len();
        for r in index::sample(&mut topo, free, extra) {
            // r-th pair that is not a tree pair
            let mut rank = r;
            for &t in &tree_ranks {
                if t <= rank {
                    rank += 1;
                } else {
                    break;
                }
            }
            pairs.push(unrank_pair(rank, n));
        }
    }
    pairs.sort_unstable();

    let mut costs = ChaCha8Rng::seed_from_u64(spec.seed);
    costs.set_stream(1);
    let (lo, hi) = spec.cost_range;
    let edges: Vec<(usize, usize, i64)> = pairs.iter().map(|&(u, v)| (u, v, costs.gen_range(lo..=hi))).collect();

    let mut confl = ChaCha8Rng::seed_from_u64(spec.seed);
    confl.set_stream(2);
    let mut conflict_pairs: Vec<(usize, usize)> = if p > 0 {
        index::sample(&mut confl, pair_count(m), p)
            .into_iter()
            .map(|r| unrank_pair(r, m))
            .collect()
    } else {
        Vec::new()
    };
    conflict_pairs.sort_unstable();

    let name = format!("{n}-{m}-{p}-{}", spec.seed);
    Instance::from_parts(name, n, edges, conflict_pairs)
}
