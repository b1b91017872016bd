//! Analytic runtime labels for desk-scale experiments.
//!
//! The cost of a graph is `sum(w * c(kind(dst)))` over its `Child` edges,
//! scaled by a per-strategy factor read off the graph's directive and
//! divided by a team speedup, then multiplied by lognormal noise:
//!
//! | directive             | factor |
//! |-----------------------|--------|
//! | none                  | 1.00   |
//! | `parallel for`        | 1.00   |
//! | ... `collapse(2)`     | 0.95   |
//! | `target ...`          | 0.50   |
//! | ... `collapse(2)`     | 0.45   |
//! | `target ...` + `map`  | 0.70   |
//! | ... `collapse(2)`     | 0.65   |
//!
//! The team speedup is `1 + 0.1 * log2(teams)` for target directives and 1
//! otherwise. Thread parallelism is already in the weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::frontend::{Directive, NodeKind};
use crate::paragraph::{EdgeType, ParaGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLabeler {
    /// Cost per execution of a node of each kind, indexed by `NodeKind::index`.
    pub kind_costs: Vec<f64>,
    /// Microseconds per cost unit.
    pub us_per_unit: f64,
    /// Standard deviation of the log-normal noise.
    pub sigma: f64,
}

impl Default for SyntheticLabeler {
    fn default() -> Self {
        let kind_costs = NodeKind::ALL.iter().map(|&k| default_cost(k)).collect();
        SyntheticLabeler { kind_costs, us_per_unit: 1e-3, sigma: 0.0 }
    }
}

fn default_cost(kind: NodeKind) -> f64 {
    use NodeKind::*;
    match kind {
        TranslationUnit | FunctionDecl | ParmVarDecl => 0.0,
        CompoundStmt | DeclStmt | ReturnStmt => 0.2,
        VarDecl => 0.5,
        ForStmt | WhileStmt | IfStmt => 1.0,
        BinaryOperator => 1.0,
        UnaryOperator => 0.8,
        ImplicitCastExpr => 0.1,
        DeclRefExpr => 0.3,
        IntegerLiteral | FloatingLiteral => 0.1,
        ArraySubscriptExpr => 2.0,
        CallExpr => 8.0,
        OmpDirective => 5.0,
    }
}

impl SyntheticLabeler {
    /// Every kind costs one unit, one unit is one microsecond, no noise.
    pub fn unit() -> Self {
        SyntheticLabeler { kind_costs: vec![1.0; NodeKind::ALL.len()], us_per_unit: 1.0, sigma: 0.0 }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }
}

/// (strategy factor, team divisor) implied by the graph's directive.
pub fn directive_factors(graph: &ParaGraph) -> (f64, f64) {
    let Some(node) = graph.nodes.iter().find(|n| n.kind == NodeKind::OmpDirective) else {
        return (1.0, 1.0);
    };
    let Ok(d) = Directive::parse(&node.text) else {
        return (1.0, 1.0);
    };
    let collapsed = d.collapse() >= 2;
    let kappa = match (d.is_target(), d.has_map(), collapsed) {
        (false, _, false) => 1.0,
        (false, _, true) => 0.95,
        (true, false, false) => 0.5,
        (true, false, true) => 0.45,
        (true, true, false) => 0.7,
        (true, true, true) => 0.65,
    };
    let teams = if d.is_target() { 1.0 + 0.1 * (graph.features.teams.max(1) as f64).log2() } else { 1.0 };
    (kappa, teams)
}

/// Deterministic cost in microseconds for `graph`, with noise drawn from
/// `noise_seed`.
pub fn synthetic_label(labeler: &SyntheticLabeler, graph: &ParaGraph, noise_seed: u64) -> f64 {
    let work: f64 = graph
        .edges_of(EdgeType::Child)
        .map(|e| e.weight * labeler.kind_costs[graph.nodes[e.dst].kind.index()])
        .sum();
    let (kappa, teams) = directive_factors(graph);
    let base = labeler.us_per_unit * work * kappa / teams;
    if labeler.sigma == 0.0 {
        return base;
    }
    let z: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(noise_seed));
    base * (labeler.sigma * z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::paragraph::{build_paragraph, Mode, ParamBindings};

    fn graph(src: &str, teams: u32, threads: u32) -> ParaGraph {
        build_paragraph(&parse_source(src).unwrap(), Mode::Para, &ParamBindings::default(), teams, threads).unwrap()
    }

    #[test]
    fn hand_evaluated_loop() {
        let g = graph("void f() { int x; for (int i = 0; i < 50; i++) { x = 1; } }", 1, 1);
        // TU->F, F->CS, CS->DeclStmt, DeclStmt->VarDecl, CS->For, For->init,
        // init->VarDecl i, VarDecl i->0 are outside the loop (8 edges, weight 1).
        // Inside: For->cond, cond->ICE, ICE->i, cond->50, For->body,
        // body->"=", "="->ICE, ICE->x, "="->1, For->inc, inc->ICE, ICE->i:
        // 12 edges of weight 50.
        assert_eq!(synthetic_label(&SyntheticLabeler::unit(), &g, 0), 8.0 + 12.0 * 50.0);
    }

    #[test]
    fn linear_in_weights() {
        let mut g = graph("void f(double a[8]) {\n#pragma omp parallel for\nfor (int i = 0; i < 8; i++) { a[i] = 1.0; } }", 1, 2);
        let l = SyntheticLabeler::default();
        let one = synthetic_label(&l, &g, 3);
        for e in g.edges.iter_mut() {
            e.weight *= 2.0;
        }
        assert_eq!(synthetic_label(&l, &g, 3), 2.0 * one);
    }

    #[test]
    fn deterministic_noise() {
        let g = graph("void f() { int x; x = 2; }", 1, 1);
        let l = SyntheticLabeler::default().with_sigma(0.1);
        assert_eq!(synthetic_label(&l, &g, 7), synthetic_label(&l, &g, 7));
        assert_ne!(synthetic_label(&l, &g, 7), synthetic_label(&l, &g, 8));
    }

    #[test]
    fn directive_factor_table() {
        let src = |d: &str| format!("void f(double a[8]) {{\n{d}\nfor (int i = 0; i < 8; i++) {{ a[i] = 1.0; }} }}");
        let f = |d: &str, teams| directive_factors(&graph(&src(d), teams, 1));
        assert_eq!(f("#pragma omp parallel for", 1), (1.0, 1.0));
        assert_eq!(f("#pragma omp target teams distribute parallel for", 4).0, 0.5);
        assert_eq!(f("#pragma omp target teams distribute parallel for", 4).1, 1.2);
        assert_eq!(f("#pragma omp target teams distribute parallel for map(to: a[0:8])", 1), (0.7, 1.0));
    }
}
