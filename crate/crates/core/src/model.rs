//! Single-source flow MILP for the conflict-constrained spanning tree, and an
//! LP-format writer.
//!
//! For each edge `{i,j}` (`i < j`) the model has arc flows `x_i_j`, `x_j_i`
//! (continuous, `>= 0`) and a binary selector `y_i_j`:
//!
//! ```text
//! min  sum u_ij y_ij
//! s.t. inflow(i) - outflow(i) = -(|V|-1)    i = root
//!      inflow(i) - outflow(i) = 1           i != root
//!      x_ij <= (|V|-1) y_ij,  x_ji <= (|V|-1) y_ij
//!      y_e + y_f <= 1                        {e,f} conflicting
//! ```
//!
//! The balance rows route one unit from the root to every other node through a
//! single aggregated flow (often called a multi-commodity model, though only
//! one commodity is present). Each unordered conflict pair yields exactly one
//! row; listing δ per edge would repeat every row twice.
//!
//! Variable order: `x_u_v, x_v_u` for each edge in id order, then `y` for
//! each edge. Constraint order: balance rows by node, linking rows by edge
//! (forward arc first), conflict rows by sorted pair.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use crate::conflicts::Instance;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, SpanningTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Sparse linear expression over variable indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub terms: Vec<(usize, f64)>,
}

impl LinearExpr {
    pub fn value(&self, assignment: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * assignment[v]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinearExpr,
    pub relation: Relation,
    pub rhs: f64,
}

/// A minimisation MILP with named variables and constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpModel {
    pub variables: Vec<Variable>,
    pub objective: LinearExpr,
    pub constraints: Vec<Constraint>,
}

impl LpModel {
    /// Unique variable names and in-range variable references.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut names = HashSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                return Err(format!("duplicate variable {}", v.name));
            }
        }
        let nvars = self.variables.len();
        let exprs = std::iter::once(("objective", &self.objective))
            .chain(self.constraints.iter().map(|c| (c.name.as_str(), &c.expr)));
        for (name, expr) in exprs {
            if let Some(&(v, _)) = expr.terms.iter().find(|&&(v, _)| v >= nvars) {
                return Err(format!("{name} references undeclared variable {v}"));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, assignment: &[f64]) -> f64 {
        self.objective.value(assignment)
    }

    /// Names of every violated bound, integrality requirement and constraint.
    pub fn violations(&self, assignment: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, &x) in self.variables.iter().zip(assignment) {
            if x < v.lower - tol || x > v.upper + tol {
                out.push(format!("bound {}", v.name));
            }
            if v.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                out.push(format!("integrality {}", v.name));
            }
        }
        for c in &self.constraints {
            let lhs = c.expr.value(assignment);
            let ok = match c.relation {
                Relation::Le => lhs <= c.rhs + tol,
                Relation::Ge => lhs >= c.rhs - tol,
                Relation::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                out.push(c.name.clone());
            }
        }
        out
    }
}

/// Index of the flow variable on edge `e`, in the `u -> v` direction when
/// `forward`.
pub fn arc_var(e: EdgeId, forward: bool) -> usize {
    2 * e.0 + usize::from(!forward)
}

/// Index of the selector variable of edge `e` in a model over `m` edges.
pub fn edge_var(m: usize, e: EdgeId) -> usize {
    2 * m + e.0
}

/// Builds the flow model rooted at `root` (node 0 by convention).
pub fn build_flow_model(instance: &Instance, root: usize) -> Result<LpModel> {
    let g = &instance.graph;
    let n = g.node_count();
    let m = g.edge_count();
    if root >= n {
        return Err(Error::RootOutOfRange { root, n });
    }
    let big_m = (n - 1) as f64;

    let mut variables = Vec::with_capacity(3 * m);
    for e in g.edges() {
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            variables.push(Variable {
                name: format!("x_{a}_{b}"),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
    }
    for e in g.edges() {
        variables.push(Variable {
            name: format!("y_{}_{}", e.u, e.v),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        });
    }

    let objective = LinearExpr {
        terms: g.edges().iter().map(|e| (edge_var(m, e.id), e.cost as f64)).collect(),
    };

    let mut incident: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
    for e in g.edges() {
        incident[e.u].push(e.id);
        incident[e.v].push(e.id);
    }

    let mut constraints = Vec::with_capacity(n + 2 * m + instance.conflict_count());
    let mut push = |expr: LinearExpr, relation: Relation, rhs: f64| {
        let name = format!("c{}", constraints.len());
        constraints.push(Constraint {
            name,
            expr,
            relation,
            rhs,
        });
    };

    for (node, edges) in incident.iter().enumerate() {
        let mut terms = Vec::with_capacity(2 * edges.len());
        // inflow: arcs pointing at `node`
        for &id in edges {
            terms.push((arc_var(id, g.edge(id).v == node), 1.0));
        }
        for &id in edges {
            terms.push((arc_var(id, g.edge(id).u == node), -1.0));
        }
        let rhs = if node == root { -big_m } else { 1.0 };
        push(LinearExpr { terms }, Relation::Eq, rhs);
    }
    for e in g.edges() {
        for forward in [true, false] {
            push(
                LinearExpr {
                    terms: vec![(arc_var(e.id, forward), 1.0), (edge_var(m, e.id), -big_m)],
                },
                Relation::Le,
                0.0,
            );
        }
    }
    for &(a, b) in instance.conflicts.pairs() {
        push(
            LinearExpr {
                terms: vec![(edge_var(m, a), 1.0), (edge_var(m, b), 1.0)],
            },
            Relation::Le,
            1.0,
        );
    }

    Ok(LpModel {
        variables,
        objective,
        constraints,
    })
}

/// Assignment for [`build_flow_model`] that selects `tree` and sends, on each
/// tree arc pointing away from the root, as many units as there are nodes
/// below it.
pub fn flow_certificate(instance: &Instance, tree: &SpanningTree, root: usize) -> Result<Vec<f64>> {
    let g = &instance.graph;
    let n = g.node_count();
    let m = g.edge_count();
    if root >= n {
        return Err(Error::RootOutOfRange { root, n });
    }
    let mut adj: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
    for &id in &tree.edge_ids {
        g.check_edge(id)?;
        let e = g.edge(id);
        adj[e.u].push(id);
        adj[e.v].push(id);
    }

    // BFS order, then accumulate subtree sizes bottom-up
    let mut parent_edge: Vec<Option<EdgeId>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &id in &adj[x] {
            let y = g.edge(id).other(x);
            if !seen[y] {
                seen[y] = true;
                parent_edge[y] = Some(id);
                queue.push_back(y);
            }
        }
    }

    let mut assignment = vec![0.0; 3 * m];
    for &id in &tree.edge_ids {
        assignment[edge_var(m, id)] = 1.0;
    }
    let mut below = vec![1.0f64; n];
    for &x in order.iter().rev() {
        if let Some(id) = parent_edge[x] {
            let e = g.edge(id);
            let parent = e.other(x);
            assignment[arc_var(id, e.u == parent)] = below[x];
            below[parent] += below[x];
        }
    }
    Ok(assignment)
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn write_expr(out: &mut String, model: &LpModel, expr: &LinearExpr) {
    if expr.terms.is_empty() {
        // LP rows need at least one variable
        match model.variables.first() {
            Some(v) => {
                let _ = write!(out, "0 {}", v.name);
            }
            None => out.push('0'),
        }
        return;
    }
    for (k, &(var, coef)) in expr.terms.iter().enumerate() {
        let sign = if coef < 0.0 { "-" } else { "+" };
        if k == 0 {
            if coef < 0.0 {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let mag = coef.abs();
        if mag != 1.0 {
            let _ = write!(out, "{} ", fmt_num(mag));
        }
        out.push_str(&model.variables[var].name);
    }
}

/// LP-format text: `Minimize`, `Subject To`, `Bounds`, `Binaries`, `End`.
/// One row per line, LF endings, integral coefficients without decimals.
pub fn emit_lp(model: &LpModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj: ");
    write_expr(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}: ", c.name);
        write_expr(&mut out, model, &c.expr);
        let _ = writeln!(out, " {} {}", c.relation.symbol(), fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Continuous) {
        let name = &v.name;
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, false) => writeln!(out, " {name} >= {}", fmt_num(v.lower)),
            (true, true) => writeln!(out, " {} <= {name} <= {}", fmt_num(v.lower), fmt_num(v.upper)),
            (false, true) => writeln!(out, " -inf <= {name} <= {}", fmt_num(v.upper)),
            (false, false) => writeln!(out, " {name} free"),
        }
        .expect("writing to a String cannot fail");
    }
    out.push_str("Binaries\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::io::{generate, parse_instance, write_instance, ConflictFormat, GeneratorSpec};
    use crate::oracle::{brute_force_oracle, OracleResult};
    use proptest::prelude::*;

    fn two_node() -> Instance {
        Instance::from_parts("two", 2, [(0, 1, 5)], []).unwrap()
    }

    #[test]
    fn two_node_model() {
        let model = build_flow_model(&two_node(), 0).unwrap();
        assert_eq!(model.variables.len(), 3);
        assert_eq!(model.constraints.len(), 4);
        assert_eq!(model.objective.terms, vec![(2, 5.0)]);
        // root: x_1_0 - x_0_1 = -1; other node: x_0_1 - x_1_0 = 1
        assert_eq!(model.constraints[0].expr.terms, vec![(1, 1.0), (0, -1.0)]);
        assert_eq!(model.constraints[0].rhs, -1.0);
        assert_eq!(model.constraints[1].expr.terms, vec![(0, 1.0), (1, -1.0)]);
        assert_eq!(model.constraints[1].rhs, 1.0);
        // linking with big-M 1
        assert_eq!(model.constraints[2].expr.terms, vec![(0, 1.0), (2, -1.0)]);
        assert_eq!(model.constraints[3].expr.terms, vec![(1, 1.0), (2, -1.0)]);
    }

    #[test]
    fn two_node_golden_lp() {
        let text = emit_lp(&build_flow_model(&two_node(), 0).unwrap());
        assert_eq!(text, include_str!("../tests/data/two-node.lp"));
    }

    #[test]
    fn seven_node_golden_lp() {
        let inst = fixtures::seven_node();
        let model = build_flow_model(&inst, 0).unwrap();
        assert_eq!(model.variables.len(), 36);
        assert_eq!(model.constraints.len(), 7 + 24 + 3);
        let text = emit_lp(&model);
        assert_eq!(text, include_str!("../tests/data/seven-node.lp"));
        let conflict_rows = text.lines().filter(|l| l.ends_with("<= 1")).count();
        assert_eq!(conflict_rows, 3);
        assert!(text.contains(" c32: y_0_3 + y_2_3 <= 1\n"));
    }

    #[test]
    fn root_must_be_a_node() {
        assert_eq!(
            build_flow_model(&two_node(), 2),
            Err(Error::RootOutOfRange { root: 2, n: 2 })
        );
    }

    #[test]
    fn other_roots_move_the_source_row() {
        let inst = fixtures::seven_node();
        let model = build_flow_model(&inst, 4).unwrap();
        let rhs: Vec<f64> = model.constraints[..7].iter().map(|c| c.rhs).collect();
        assert_eq!(rhs, vec![1.0, 1.0, 1.0, 1.0, -6.0, 1.0, 1.0]);
    }

    #[test]
    fn known_tree_certificate_satisfies_the_model() {
        let inst = fixtures::seven_node();
        let tree = inst
            .graph
            .spanning_tree(fixtures::SEVEN_NODE_SOLUTION.iter().map(|&i| EdgeId(i)))
            .unwrap()
            .unwrap();
        for root in 0..7 {
            let model = build_flow_model(&inst, root).unwrap();
            let x = flow_certificate(&inst, &tree, root).unwrap();
            assert!(model.violations(&x, 1e-9).is_empty());
            assert_eq!(model.objective_value(&x), 13.0);
        }
    }

    #[test]
    fn conflicting_tree_breaks_only_conflict_rows() {
        let inst = fixtures::seven_node();
        let tree = inst
            .graph
            .spanning_tree([0, 3, 5, 6, 7, 9].map(EdgeId))
            .unwrap()
            .unwrap();
        let model = build_flow_model(&inst, 0).unwrap();
        let x = flow_certificate(&inst, &tree, 0).unwrap();
        // green pair is c31, red (3,7) is c32, blue (5,6) is c33
        assert_eq!(model.violations(&x, 1e-9), vec!["c32".to_string(), "c33".to_string()]);
    }

    #[test]
    fn lp_text_survives_instance_round_trip() {
        for seed in 0..10 {
            let inst = generate(&GeneratorSpec::dense_family(25, 0.3, 0.04, seed)).unwrap();
            let back = parse_instance(&write_instance(&inst), ConflictFormat::EdgeIndex)
                .unwrap()
                .instance;
            assert_eq!(
                emit_lp(&build_flow_model(&inst, 0).unwrap()),
                emit_lp(&build_flow_model(&back, 0).unwrap())
            );
        }
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(6.0), "6");
        assert_eq!(fmt_num(-6.0), "-6");
        assert_eq!(fmt_num(0.5), "0.5");
        let model = LpModel {
            variables: vec![Variable {
                name: "z".into(),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: 2.5,
            }],
            objective: LinearExpr { terms: vec![(0, -1.5)] },
            constraints: vec![Constraint {
                name: "c0".into(),
                expr: LinearExpr::default(),
                relation: Relation::Ge,
                rhs: 0.0,
            }],
        };
        assert_eq!(
            emit_lp(&model),
            "Minimize\n obj: - 1.5 z\nSubject To\n c0: 0 z >= 0\nBounds\n 0 <= z <= 2.5\nBinaries\nEnd\n"
        );
    }

    /// Solves the model with an independent MILP solver.
    fn solve_externally(model: &LpModel) -> Option<f64> {
        use microlp::{ComparisonOp, OptimizationDirection, Problem};
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let mut objective = vec![0.0; model.variables.len()];
        for &(v, c) in &model.objective.terms {
            objective[v] += c;
        }
        let vars: Vec<_> = model
            .variables
            .iter()
            .zip(&objective)
            .map(|(v, &c)| match v.kind {
                VarKind::Binary => problem.add_binary_var(c),
                VarKind::Continuous => problem.add_var(c, (v.lower, v.upper)),
            })
            .collect();
        for c in &model.constraints {
            let terms: Vec<_> = c.expr.terms.iter().map(|&(v, k)| (vars[v], k)).collect();
            let op = match c.relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Eq => ComparisonOp::Eq,
                Relation::Ge => ComparisonOp::Ge,
            };
            problem.add_constraint(&terms, op, c.rhs);
        }
        match problem.solve() {
            Ok(microlp::SolveOutcome::Solution(s)) => Some(s.objective()),
            Ok(microlp::SolveOutcome::Interrupted(_)) => panic!("unlimited solve was interrupted"),
            Err(_) => None,
        }
    }

    #[test]
    fn external_milp_optimum_matches_oracle() {
        let mut checked = 0;
        for seed in 0..40 {
            let n = 4 + (seed % 4) as usize;
            let m = (n - 1 + (seed as usize % 6)).min(n * (n - 1) / 2);
            let p = (seed as usize * 3) % 9;
            let inst = generate(&GeneratorSpec::sparse_family(n, m, p.min(m * (m - 1) / 2), seed)).unwrap();
            let model = build_flow_model(&inst, 0).unwrap();
            let milp = solve_externally(&model);
            match brute_force_oracle(&inst).unwrap() {
                OracleResult::Optimal(t) => {
                    let v = milp.expect("feasible instance must have a feasible model");
                    assert!(
                        (v - t.total_cost as f64).abs() < 1e-6,
                        "{}: {v} vs {}",
                        inst.name,
                        t.total_cost
                    );
                    checked += 1;
                }
                OracleResult::Infeasible => assert!(milp.is_none(), "{}", inst.name),
            }
        }
        assert!(checked > 20);
    }

    /// Sum of the balance rows over `component`: arcs inside cancel, so the
    /// total must be carried by arcs leaving or entering it.
    fn aggregated_balance(model: &LpModel, component: &[usize]) -> (LinearExpr, f64) {
        let mut coef = vec![0.0; model.variables.len()];
        let mut rhs = 0.0;
        for &node in component {
            let row = &model.constraints[node];
            for &(v, c) in &row.expr.terms {
                coef[v] += c;
            }
            rhs += row.rhs;
        }
        let terms = coef.into_iter().enumerate().filter(|&(_, c)| c != 0.0).collect();
        (LinearExpr { terms }, rhs)
    }

    proptest! {
        #[test]
        fn structural_counts(n in 2usize..20, extra in 0usize..30, p in 0usize..40, seed in any::<u64>(), root in any::<proptest::sample::Index>()) {
            let m = (n - 1 + extra).min(n * (n - 1) / 2);
            let inst = generate(&GeneratorSpec::sparse_family(n, m, p.min(m * (m - 1) / 2), seed)).unwrap();
            let model = build_flow_model(&inst, root.index(n)).unwrap();
            prop_assert!(model.validate().is_ok());
            prop_assert_eq!(model.variables.len(), 3 * m);
            prop_assert_eq!(model.variables.iter().filter(|v| v.kind == VarKind::Binary).count(), m);
            prop_assert_eq!(model.constraints.len(), n + 2 * m + inst.conflict_count());
        }

        #[test]
        fn any_spanning_tree_has_a_flow_certificate(n in 2usize..12, extra in 0usize..20, seed in any::<u64>(), root in any::<proptest::sample::Index>()) {
            let m = (n - 1 + extra).min(n * (n - 1) / 2);
            let inst = generate(&GeneratorSpec::sparse_family(n, m, 0, seed)).unwrap();
            let tree = crate::graph::kruskal_mst(&inst.graph, &Default::default(), &Default::default()).unwrap().unwrap();
            let root = root.index(n);
            let model = build_flow_model(&inst, root).unwrap();
            let x = flow_certificate(&inst, &tree, root).unwrap();
            prop_assert!(model.violations(&x, 1e-9).is_empty());
            prop_assert_eq!(model.objective_value(&x), tree.total_cost as f64);
        }

        #[test]
        fn disconnected_selections_cannot_carry_flow(n in 3usize..9, extra in 0usize..10, seed in any::<u64>(), mask in any::<u32>()) {
            let m = (n - 1 + extra).min(n * (n - 1) / 2);
            let inst = generate(&GeneratorSpec::sparse_family(n, m, 0, seed)).unwrap();
            let model = build_flow_model(&inst, 0).unwrap();
            let chosen: Vec<EdgeId> = (0..m).filter(|e| mask & (1 << e) != 0).map(EdgeId).collect();
            let mut ds = crate::union_find::DisjointSets::new(n);
            for &e in &chosen {
                let edge = inst.graph.edge(e);
                ds.union(edge.u, edge.v);
            }
            if ds.components() > 1 {
                // a component without the root must absorb |C| units, but every
                // arc crossing its boundary is unselected and forced to zero
                let r = ds.find(0);
                let c = (0..n).find(|&v| ds.find(v) != r).unwrap();
                let comp: Vec<usize> = (0..n).filter(|&v| ds.same(v, c)).collect();
                let (expr, rhs) = aggregated_balance(&model, &comp);
                prop_assert_eq!(rhs, comp.len() as f64);
                for &(v, _) in &expr.terms {
                    let e = EdgeId(v / 2);
                    prop_assert!(v < 2 * m && !chosen.contains(&e));
                }
            }
        }
    }
}
