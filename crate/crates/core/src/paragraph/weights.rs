//! Execution-count weights for `Child` edges.
//!
//! Weights are computed top-down with a multiplicative context that starts at
//! 1 at the root:
//!
//! - a `ForStmt` multiplies the context of its condition, increment and body
//!   by the loop trip count (divided by the thread count when the loop is the
//!   statically scheduled worksharing loop of an OpenMP directive); its
//!   initializer keeps the enclosing context;
//! - an `IfStmt` halves the context of both branches;
//! - every other node passes its context through unchanged.
//!
//! The condition edge of an `n`-trip loop is weighted `n`, not `n + 1`.

use std::collections::{BTreeMap, HashSet};

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{Ast, NodeId, NodeKind};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("thread count must be at least 1 (got {0})")]
    ZeroThreads(u32),
    #[error("node {0} is not a loop")]
    NotALoop(NodeId),
}

/// Values for symbolic loop bounds, keyed by variable name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBindings {
    #[serde(default)]
    pub values: BTreeMap<String, i64>,
    #[serde(default = "default_trip")]
    pub default_trip: u64,
}

fn default_trip() -> u64 {
    10
}

impl Default for ParamBindings {
    fn default() -> Self {
        ParamBindings { values: BTreeMap::new(), default_trip: default_trip() }
    }
}

impl ParamBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, name: &str, value: i64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn with_default_trip(mut self, trip: u64) -> Self {
        self.default_trip = trip.max(1);
        self
    }

    /// Parses `N=1000,M=20`.
    pub fn parse_list(spec: &str) -> Result<Self, String> {
        let mut b = ParamBindings::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or(format!("binding `{part}` is not NAME=VALUE"))?;
            let v: i64 = v.trim().parse().map_err(|_| format!("binding `{part}` has a non-integer value"))?;
            b.values.insert(k.trim().to_string(), v);
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripOrigin {
    Exact,
    Defaulted(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripCount {
    pub iterations: Rational,
    pub origin: TripOrigin,
}

impl TripCount {
    pub fn value(&self) -> Rational {
        self.iterations
    }

    pub fn is_exact(&self) -> bool {
        self.origin == TripOrigin::Exact
    }
}

enum EvalError {
    Unbound(String),
    NonCanonical(String),
}

struct LoopShape {
    var: NodeId,
    start: i128,
    bound: i128,
    op: String,
    step: i128,
}

/// Declarations used as induction variables of some `for` loop.
fn induction_decls(ast: &Ast) -> HashSet<NodeId> {
    ast.ids_of_kind(NodeKind::ForStmt).filter_map(|f| loop_var(ast, ast.children(f)[0])).collect()
}

fn loop_var(ast: &Ast, init: NodeId) -> Option<NodeId> {
    let node = ast.node(init);
    match node.kind {
        NodeKind::DeclStmt if node.children.len() == 1 => {
            let var = node.children[0];
            (ast.children(var).len() == 1).then_some(var)
        }
        NodeKind::BinaryOperator if node.label.as_deref() == Some("=") => {
            let lhs = ast.skip_casts(node.children[0]);
            ast.node(lhs).decl_ref
        }
        _ => None,
    }
}

fn refers_to(ast: &Ast, id: NodeId, decl: NodeId) -> bool {
    let inner = ast.skip_casts(id);
    ast.node(inner).kind == NodeKind::DeclRefExpr && ast.node(inner).decl_ref == Some(decl)
}

fn eval_const(ast: &Ast, id: NodeId, bindings: &ParamBindings, inductions: &HashSet<NodeId>) -> Result<i128, EvalError> {
    let node = ast.node(id);
    match node.kind {
        NodeKind::ImplicitCastExpr => eval_const(ast, node.children[0], bindings, inductions),
        NodeKind::IntegerLiteral => parse_int(&node.token_text)
            .ok_or_else(|| EvalError::NonCanonical(format!("literal `{}`", node.token_text))),
        NodeKind::DeclRefExpr => {
            let decl = node.decl_ref.expect("resolved reference");
            if inductions.contains(&decl) {
                return Err(EvalError::NonCanonical(format!("bound depends on induction variable `{}`", node.token_text)));
            }
            bindings
                .values
                .get(&node.token_text)
                .map(|&v| v as i128)
                .ok_or_else(|| EvalError::Unbound(node.token_text.clone()))
        }
        NodeKind::UnaryOperator if node.label.as_deref() == Some("-") => {
            Ok(-eval_const(ast, node.children[0], bindings, inductions)?)
        }
        NodeKind::BinaryOperator => {
            let op = node.label.as_deref().unwrap_or("");
            let a = eval_const(ast, node.children[0], bindings, inductions)?;
            let b = eval_const(ast, node.children[1], bindings, inductions)?;
            match op {
                "+" => Ok(a + b),
                "-" => Ok(a - b),
                "*" => Ok(a * b),
                "/" if b != 0 => Ok(a / b),
                _ => Err(EvalError::NonCanonical(format!("operator `{op}` in loop bound"))),
            }
        }
        k => Err(EvalError::NonCanonical(format!("{k} in loop bound"))),
    }
}

pub(crate) fn parse_int(text: &str) -> Option<i128> {
    let t = text.trim_end_matches(['u', 'U', 'l', 'L']);
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        i128::from_str_radix(hex, 16).ok()
    } else {
        t.parse().ok()
    }
}

fn canonical_shape(ast: &Ast, for_id: NodeId, bindings: &ParamBindings) -> Result<LoopShape, EvalError> {
    let inductions = induction_decls(ast);
    let kids = ast.children(for_id);
    let (init, cond, inc) = (kids[0], kids[1], kids[3]);
    let var = loop_var(ast, init).ok_or_else(|| EvalError::NonCanonical("initializer is not `i = a`".into()))?;
    let start_expr = match ast.kind(init) {
        NodeKind::DeclStmt => ast.children(var)[0],
        _ => ast.children(init)[1],
    };
    let start = eval_const(ast, start_expr, bindings, &inductions)?;

    let c = ast.node(ast.skip_casts(cond));
    let mut op = c.label.clone().unwrap_or_default();
    if c.kind != NodeKind::BinaryOperator || !matches!(op.as_str(), "<" | "<=" | ">" | ">=" | "!=") {
        return Err(EvalError::NonCanonical("condition is not a comparison".into()));
    }
    let bound_expr = if refers_to(ast, c.children[0], var) {
        c.children[1]
    } else if refers_to(ast, c.children[1], var) {
        op = match op.as_str() {
            "<" => ">",
            "<=" => ">=",
            ">" => "<",
            ">=" => "<=",
            o => o,
        }
        .to_string();
        c.children[0]
    } else {
        return Err(EvalError::NonCanonical("condition does not test the induction variable".into()));
    };
    let bound = eval_const(ast, bound_expr, bindings, &inductions)?;

    let i = ast.node(inc);
    let label = i.label.as_deref().unwrap_or("");
    let step = match (i.kind, label) {
        (NodeKind::UnaryOperator, "++" | "pre++") if refers_to(ast, i.children[0], var) => 1,
        (NodeKind::UnaryOperator, "--" | "pre--") if refers_to(ast, i.children[0], var) => -1,
        (NodeKind::BinaryOperator, "+=" | "-=") if refers_to(ast, i.children[0], var) => {
            let s = eval_const(ast, i.children[1], bindings, &inductions)?;
            if label == "+=" {
                s
            } else {
                -s
            }
        }
        (NodeKind::BinaryOperator, "=") if refers_to(ast, i.children[0], var) => {
            let rhs = ast.node(i.children[1]);
            match (rhs.kind, rhs.label.as_deref()) {
                (NodeKind::BinaryOperator, Some("+")) if refers_to(ast, rhs.children[0], var) => {
                    eval_const(ast, rhs.children[1], bindings, &inductions)?
                }
                (NodeKind::BinaryOperator, Some("+")) if refers_to(ast, rhs.children[1], var) => {
                    eval_const(ast, rhs.children[0], bindings, &inductions)?
                }
                (NodeKind::BinaryOperator, Some("-")) if refers_to(ast, rhs.children[0], var) => {
                    -eval_const(ast, rhs.children[1], bindings, &inductions)?
                }
                _ => return Err(EvalError::NonCanonical("increment is not `i = i + s`".into())),
            }
        }
        _ => return Err(EvalError::NonCanonical("increment does not step the induction variable".into())),
    };
    if step == 0 {
        return Err(EvalError::NonCanonical("zero step".into()));
    }
    Ok(LoopShape { var, start, bound, op, step })
}

fn ceil_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    if a <= 0 {
        0
    } else {
        (a + b - 1) / b
    }
}

fn iterations(shape: &LoopShape) -> Result<i128, EvalError> {
    let LoopShape { start: a, bound: b, step: s, .. } = *shape;
    let wrong_way = || EvalError::NonCanonical("step moves away from the bound".into());
    match shape.op.as_str() {
        "<" if s > 0 => Ok(ceil_div(b - a, s)),
        "<=" if s > 0 => Ok(ceil_div(b - a + 1, s)),
        ">" if s < 0 => Ok(ceil_div(a - b, -s)),
        ">=" if s < 0 => Ok(ceil_div(a - b + 1, -s)),
        "!=" if (b - a) % s == 0 && (b - a) / s >= 0 => Ok((b - a) / s),
        "!=" => Err(EvalError::NonCanonical("`!=` bound is not reachable by the step".into())),
        _ => Err(wrong_way()),
    }
}

/// Estimated iteration count of a `ForStmt` (or `WhileStmt`).
///
/// Canonical `for (i = a; i < b; i += s)` loops with constant or bound
/// symbolic `a`, `b`, `s` get `ceil((b - a) / s)`; anything else, and every
/// `while` loop, falls back to `bindings.default_trip` with a warning.
pub fn trip_count(ast: &Ast, loop_id: NodeId, bindings: &ParamBindings) -> Result<TripCount, WeightError> {
    let fallback = |reason: String| {
        log::warn!("loop node {loop_id}: {reason}; assuming {} iterations", bindings.default_trip);
        TripCount {
            iterations: Rational::from_integer(bindings.default_trip.max(1) as i128),
            origin: TripOrigin::Defaulted(reason),
        }
    };
    match ast.kind(loop_id) {
        NodeKind::WhileStmt => Ok(fallback("while loop".into())),
        NodeKind::ForStmt => {
            let shape = canonical_shape(ast, loop_id, bindings).and_then(|s| iterations(&s).map(|n| (s, n)));
            Ok(match shape {
                Ok((_, n)) if n >= 1 => TripCount { iterations: Rational::from_integer(n), origin: TripOrigin::Exact },
                Ok((s, _)) => {
                    // An empty iteration space still gets weight 1 so Child
                    // weights stay strictly positive.
                    log::warn!("loop node {loop_id} (variable node {}) never iterates; using 1", s.var);
                    TripCount {
                        iterations: Rational::one(),
                        origin: TripOrigin::Defaulted("empty iteration space".into()),
                    }
                }
                Err(EvalError::Unbound(name)) => fallback(format!("unbound loop bound `{name}`")),
                Err(EvalError::NonCanonical(why)) => fallback(why),
            })
        }
        _ => Err(WeightError::NotALoop(loop_id)),
    }
}

struct Walker<'a> {
    ast: &'a Ast,
    bindings: &'a ParamBindings,
    threads: Rational,
    out: BTreeMap<(NodeId, NodeId), Rational>,
}

impl Walker<'_> {
    fn walk(&mut self, id: NodeId, ctx: Rational, parallel_loop: bool) -> Result<(), WeightError> {
        let node = self.ast.node(id);
        match node.kind {
            NodeKind::OmpDirective => {
                let d = node.directive.as_ref().expect("directive nodes carry their directive");
                let child = node.children[0];
                let split = d.is_loop_worksharing()
                    && d.is_static_schedule()
                    && self.ast.kind(child) == NodeKind::ForStmt;
                self.out.insert((id, child), ctx);
                self.walk(child, ctx, split)?;
            }
            NodeKind::ForStmt => {
                let trip = trip_count(self.ast, id, self.bindings)?.iterations;
                let per_thread = if parallel_loop { trip / self.threads } else { trip };
                let inner = ctx * per_thread;
                let kids = node.children.clone();
                for (slot, &c) in kids.iter().enumerate() {
                    let w = if slot == 0 { ctx } else { inner };
                    self.out.insert((id, c), w);
                    self.walk(c, w, false)?;
                }
            }
            NodeKind::WhileStmt => {
                let inner = ctx * trip_count(self.ast, id, self.bindings)?.iterations;
                for &c in &node.children {
                    self.out.insert((id, c), inner);
                    self.walk(c, inner, false)?;
                }
            }
            NodeKind::IfStmt => {
                let half = ctx / Rational::from_integer(2);
                for (slot, &c) in node.children.iter().enumerate() {
                    let w = if slot == 0 { ctx } else { half };
                    self.out.insert((id, c), w);
                    self.walk(c, w, false)?;
                }
            }
            _ => {
                for &c in &node.children {
                    self.out.insert((id, c), ctx);
                    self.walk(c, ctx, false)?;
                }
            }
        }
        Ok(())
    }
}

/// Weight of every `Child` edge, keyed by (parent, child).
pub fn assign_weights(
    ast: &Ast,
    bindings: &ParamBindings,
    num_threads: u32,
) -> Result<BTreeMap<(NodeId, NodeId), Rational>, WeightError> {
    if num_threads < 1 {
        return Err(WeightError::ZeroThreads(num_threads));
    }
    let mut w = Walker {
        ast,
        bindings,
        threads: Rational::from_integer(num_threads as i128),
        out: BTreeMap::new(),
    };
    w.walk(ast.root(), Rational::one(), false)?;
    debug_assert!(w.out.values().all(|v| *v > Rational::zero()));
    Ok(w.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn first_loop(src: &str) -> (Ast, NodeId) {
        let ast = parse_source(src).unwrap();
        let id = ast.ids_of_kind(NodeKind::ForStmt).next().unwrap();
        (ast, id)
    }

    fn trips(src: &str, b: &ParamBindings) -> TripCount {
        let (ast, id) = first_loop(src);
        trip_count(&ast, id, b).unwrap()
    }

    /// Counts body executions by running the loop header.
    fn brute_force(start: i64, bound: i64, op: &str, step: i64) -> i64 {
        let mut n = 0;
        let mut i = start;
        let test = |i: i64| match op {
            "<" => i < bound,
            "<=" => i <= bound,
            ">" => i > bound,
            ">=" => i >= bound,
            _ => unreachable!(),
        };
        while test(i) {
            n += 1;
            i += step;
        }
        n
    }

    #[test]
    fn constant_loop() {
        let t = trips("void f() { for (int i = 0; i < 50; i++) {} }", &ParamBindings::default());
        assert_eq!(t.value(), Rational::from_integer(50));
        assert!(t.is_exact());
    }

    #[test]
    fn bound_symbol() {
        let b = ParamBindings::default().bind("N", 100);
        let t = trips("void f(int N) { for (int i = 0; i < N; i++) {} }", &b);
        assert_eq!(t.value(), Rational::from_integer(100));
    }

    #[test]
    fn strided_loop_matches_brute_force() {
        assert_eq!(brute_force(0, 7, "<", 2), 4);
        let t = trips("void f() { for (int i = 0; i < 7; i += 2) {} }", &ParamBindings::default());
        assert_eq!(t.value(), Rational::from_integer(4));
    }

    #[test]
    fn loop_forms_match_brute_force() {
        let cases = [
            ("int i = 3; i <= 17; i += 3", 3, 17, "<=", 3),
            ("int i = 20; i > 0; i--", 20, 0, ">", -1),
            ("int i = 20; i >= 1; i -= 4", 20, 1, ">=", -4),
            ("int i = 1; i < 100; i = i + 7", 1, 100, "<", 7),
            ("int i = 0; 10 > i; ++i", 0, 10, "<", 1),
        ];
        for (header, a, b, op, s) in cases {
            let src = format!("void f() {{ for ({header}) {{}} }}");
            let t = trips(&src, &ParamBindings::default());
            assert_eq!(t.value(), Rational::from_integer(brute_force(a, b, op, s) as i128), "{header}");
        }
    }

    #[test]
    fn fallbacks() {
        let b = ParamBindings::default().with_default_trip(7);
        let t = trips("void f(int N) { for (int i = 0; i < N; i++) {} }", &b);
        assert_eq!(t.value(), Rational::from_integer(7));
        assert!(!t.is_exact());
        // Triangular inner loop.
        let ast = parse_source("void f() { for (int i = 0; i < 5; i++) { for (int j = i; j < 5; j++) {} } }").unwrap();
        let inner = ast.ids_of_kind(NodeKind::ForStmt).nth(1).unwrap();
        assert!(!trip_count(&ast, inner, &b).unwrap().is_exact());
        let ast = parse_source("void f() { int k; k = 3; while (k > 0) { k--; } }").unwrap();
        let w = ast.ids_of_kind(NodeKind::WhileStmt).next().unwrap();
        assert_eq!(trip_count(&ast, w, &b).unwrap().value(), Rational::from_integer(7));
        let eq0 = ast.ids_of_kind(NodeKind::CompoundStmt).next().unwrap();
        assert_eq!(trip_count(&ast, eq0, &b), Err(WeightError::NotALoop(eq0)));
    }

    #[test]
    fn empty_loop_keeps_positive_weight() {
        let t = trips("void f() { for (int i = 5; i < 5; i++) {} }", &ParamBindings::default());
        assert_eq!(t.value(), Rational::one());
    }

    #[test]
    fn zero_threads_rejected() {
        let ast = parse_source("void f() { }").unwrap();
        assert_eq!(assign_weights(&ast, &ParamBindings::default(), 0), Err(WeightError::ZeroThreads(0)));
    }

    #[test]
    fn parallel_loop_divides_by_threads() {
        let ast = parse_source(
            "void f(double a[100]) {\n#pragma omp parallel for num_threads(4)\nfor (int i = 0; i < 100; i++) { a[i] = 1.0; } }",
        )
        .unwrap();
        let w = assign_weights(&ast, &ParamBindings::default(), 4).unwrap();
        let f = ast.ids_of_kind(NodeKind::ForStmt).next().unwrap();
        let body = ast.children(f)[2];
        assert_eq!(w[&(f, body)], Rational::from_integer(25));
        let stmt = ast.children(body)[0];
        assert_eq!(w[&(body, stmt)], Rational::from_integer(25));
        assert_eq!(w[&(f, ast.children(f)[0])], Rational::one());
    }

    #[test]
    fn dynamic_schedule_is_not_divided() {
        let ast = parse_source(
            "void f() {\n#pragma omp parallel for schedule(dynamic)\nfor (int i = 0; i < 100; i++) { } }",
        )
        .unwrap();
        let w = assign_weights(&ast, &ParamBindings::default(), 4).unwrap();
        let f = ast.ids_of_kind(NodeKind::ForStmt).next().unwrap();
        assert_eq!(w[&(f, ast.children(f)[2])], Rational::from_integer(100));
    }

    #[test]
    fn nested_ifs_quarter() {
        let ast = parse_source("void f() { int x; if (x > 1) { if (x > 2) { x = 1; } } }").unwrap();
        let w = assign_weights(&ast, &ParamBindings::default(), 1).unwrap();
        let inner_if = ast.ids_of_kind(NodeKind::IfStmt).nth(1).unwrap();
        let then = ast.children(inner_if)[1];
        assert_eq!(w[&(inner_if, then)], Rational::new(1, 4));
    }

    #[test]
    fn collapse_divides_once() {
        let src = "void f(int n) {\n#pragma omp parallel for collapse(2)\nfor (int i = 0; i < 8; i++) { for (int j = 0; j < 6; j++) { n = 1; } } }";
        let ast = parse_source(src).unwrap();
        let w = assign_weights(&ast, &ParamBindings::default(), 4).unwrap();
        let inner = ast.ids_of_kind(NodeKind::ForStmt).nth(1).unwrap();
        let body = ast.children(inner)[2];
        // 8 * 6 collapsed iterations over 4 threads.
        assert_eq!(w[&(inner, body)], Rational::from_integer(12));
    }
}
