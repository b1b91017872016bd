#![allow(dead_code)]

use std::collections::HashMap;

use paragraph_core::frontend::{Ast, NodeId, NodeKind};
use paragraph_core::gnn::{loss_and_gradients, GraphInput, ModelConfig, RgatModel, VOCAB_SIZE};
use paragraph_core::par::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const KINK_MARGIN: f64 = 1e-4;

pub fn small_config() -> ModelConfig {
    ModelConfig { vocab: VOCAB_SIZE, hidden: 4, layers: 3, head1: 6, head2: 4, feat: 3, leaky_slope: 0.2 }
}

/// Random graph with at most `max_nodes` nodes and edges of every relation.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> GraphInput {
    let n = rng.random_range(2..=max_nodes);
    let vocab = (0..n).map(|_| rng.random_range(0..VOCAB_SIZE)).collect();
    let mut edges = Vec::new();
    for d in 1..n {
        edges.push((rng.random_range(0..d), d, 0, rng.random_range(0.05..1.0)));
    }
    for _ in 0..rng.random_range(n..3 * n) {
        let rel = rng.random_range(1..8);
        edges.push((rng.random_range(0..n), rng.random_range(0..n), rel, 0.0));
    }
    GraphInput::new(vocab, &edges, [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).unwrap()
}

pub struct GradCheck {
    pub max_rel_err: f64,
    pub params: usize,
}

/// Central differences against the analytic gradient of a two-graph batch.
/// `None` when an activation sits too close to a kink for the seed.
pub fn gradient_check(seed: u64) -> Option<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = RgatModel::new(small_config(), seed);
    let graphs = [random_graph(&mut rng, 10), random_graph(&mut rng, 10)];
    let batch: Vec<(&GraphInput, f64)> = graphs.iter().map(|g| (g, rng.random_range(0.0..1.0))).collect();
    let kink = graphs.iter().map(|g| model.min_kink_distance(g).unwrap()).fold(f64::INFINITY, f64::min);
    if kink < KINK_MARGIN {
        return None;
    }
    let (_, grads) = loss_and_gradients(&model, &batch, Execution::Sequential).unwrap();
    let analytic = grads.flat();
    let base = model.params.flat();
    let mut probe = model.clone();
    let mut loss_at = |values: &[f64]| {
        probe.params.set_flat(values).unwrap();
        loss_and_gradients(&probe, &batch, Execution::Sequential).unwrap().0
    };
    let mut worst: f64 = 0.0;
    let mut x = base.clone();
    for k in 0..base.len() {
        x[k] = base[k] + FD_STEP;
        let up = loss_at(&x);
        x[k] = base[k] - FD_STEP;
        let down = loss_at(&x);
        x[k] = base[k];
        let numeric = (up - down) / (2.0 * FD_STEP);
        let a = analytic[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Some(GradCheck { max_rel_err: worst, params: base.len() })
}

/// A serial program of nested constant-trip `for` loops (trips 1..=10,
/// depth <= 3) over a few `int` accumulators.
pub fn random_program(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::from("void kernel(int n) {\n  int s0 = 0;\n  int s1 = 1;\n");
    let mut counter = 0;
    let mut vars = vec!["s0".to_string(), "s1".to_string()];
    block(rng, 0, &mut counter, &mut vars, &mut out);
    out.push_str("}\n");
    out
}

fn block(rng: &mut ChaCha8Rng, depth: usize, counter: &mut usize, vars: &mut Vec<String>, out: &mut String) {
    let pad = "  ".repeat(depth + 1);
    for _ in 0..rng.random_range(1..=3) {
        if depth < 3 && rng.random_bool(0.6) {
            let var = format!("i{counter}");
            *counter += 1;
            out.push_str(&format!("{pad}for ({}) {{\n", loop_header(rng, &var)));
            vars.push(var);
            block(rng, depth + 1, counter, vars, out);
            vars.pop();
            out.push_str(&format!("{pad}}}\n"));
        } else {
            let target = ["s0", "s1"][rng.random_range(0..2)];
            let a = &vars[rng.random_range(0..vars.len())];
            let b = &vars[rng.random_range(0..vars.len())];
            let stmt = match rng.random_range(0..4) {
                0 => format!("{target} = {a} + {b} * 2;"),
                1 => format!("{target} += {a};"),
                2 => format!("{target} = {a} - 1;"),
                _ => format!("{target}++;"),
            };
            out.push_str(&format!("{pad}{stmt}\n"));
        }
    }
}

fn loop_header(rng: &mut ChaCha8Rng, v: &str) -> String {
    let trips: i64 = rng.random_range(1..=10);
    let step: i64 = rng.random_range(1..=3);
    let start: i64 = rng.random_range(-3..=5);
    let last = start + (trips - 1) * step;
    if rng.random_bool(0.5) {
        let (op, bound) = if rng.random_bool(0.5) { ("<", last + rng.random_range(1..=step)) } else { ("<=", last) };
        let inc = match (step, rng.random_range(0..3)) {
            (1, 0) => format!("{v}++"),
            (1, 1) => format!("++{v}"),
            (_, 2) => format!("{v} = {v} + {step}"),
            _ => format!("{v} += {step}"),
        };
        format!("int {v} = {start}; {v} {op} {bound}; {inc}")
    } else {
        let top = start + 20;
        let last = top - (trips - 1) * step;
        let (op, bound) = if rng.random_bool(0.5) { (">", last - rng.random_range(1..=step)) } else { (">=", last) };
        let dec = match (step, rng.random_range(0..2)) {
            (1, 0) => format!("{v}--"),
            _ => format!("{v} -= {step}"),
        };
        format!("int {v} = {top}; {v} {op} {bound}; {dec}")
    }
}

/// Runs the program's first function and counts how often each node is
/// executed. A loop condition counts only on evaluations that enter the
/// body, once per iteration.
pub fn execution_counts(ast: &Ast) -> Vec<u64> {
    let mut it = Interp { ast, env: HashMap::new(), counts: vec![0; ast.len()] };
    it.exec(ast.root());
    it.counts
}

struct Interp<'a> {
    ast: &'a Ast,
    env: HashMap<NodeId, i64>,
    counts: Vec<u64>,
}

impl Interp<'_> {
    fn exec(&mut self, id: NodeId) {
        let node = self.ast.node(id);
        match node.kind {
            NodeKind::ForStmt => {
                self.counts[id] += 1;
                let (init, cond, body, inc) = (node.children[0], node.children[1], node.children[2], node.children[3]);
                self.exec(init);
                let mut guard = 0;
                loop {
                    let saved = self.counts.clone();
                    if self.eval(cond) == 0 {
                        self.counts = saved;
                        break;
                    }
                    self.exec(body);
                    self.exec(inc);
                    guard += 1;
                    assert!(guard < 10_000, "runaway loop");
                }
            }
            NodeKind::VarDecl => {
                self.counts[id] += 1;
                let v = node.children.first().map_or(0, |&c| self.eval(c));
                self.env.insert(id, v);
            }
            NodeKind::ParmVarDecl => {
                self.counts[id] += 1;
                self.env.insert(id, 0);
            }
            NodeKind::TranslationUnit | NodeKind::FunctionDecl | NodeKind::CompoundStmt | NodeKind::DeclStmt => {
                self.counts[id] += 1;
                for &c in &node.children {
                    self.exec(c);
                }
            }
            _ => {
                self.eval(id);
            }
        }
    }

    fn touch(&mut self, id: NodeId) {
        for n in self.ast.subtree(id) {
            self.counts[n] += 1;
        }
    }

    fn target(&self, id: NodeId) -> NodeId {
        let r = self.ast.node(self.ast.skip_casts(id));
        assert_eq!(r.kind, NodeKind::DeclRefExpr);
        r.decl_ref.expect("resolved reference")
    }

    fn eval(&mut self, id: NodeId) -> i64 {
        self.counts[id] += 1;
        let node = self.ast.node(id);
        let op = node.label.as_deref().unwrap_or("");
        match node.kind {
            NodeKind::IntegerLiteral => node.token_text.parse().expect("integer literal"),
            NodeKind::DeclRefExpr => self.env[&node.decl_ref.expect("resolved reference")],
            NodeKind::ImplicitCastExpr => self.eval(node.children[0]),
            NodeKind::UnaryOperator => match op {
                "++" | "--" | "pre++" | "pre--" => {
                    let t = self.target(node.children[0]);
                    self.touch(node.children[0]);
                    let old = self.env[&t];
                    let new = if op.ends_with("++") { old.wrapping_add(1) } else { old.wrapping_sub(1) };
                    self.env.insert(t, new);
                    if op.starts_with("pre") {
                        new
                    } else {
                        old
                    }
                }
                "-" => self.eval(node.children[0]).wrapping_neg(),
                "!" => (self.eval(node.children[0]) == 0) as i64,
                _ => self.eval(node.children[0]),
            },
            NodeKind::BinaryOperator if matches!(op, "=" | "+=" | "-=" | "*=") => {
                let t = self.target(node.children[0]);
                self.touch(node.children[0]);
                let rhs = self.eval(node.children[1]);
                let old = self.env[&t];
                let v = match op {
                    "=" => rhs,
                    "+=" => old.wrapping_add(rhs),
                    "-=" => old.wrapping_sub(rhs),
                    _ => old.wrapping_mul(rhs),
                };
                self.env.insert(t, v);
                v
            }
            NodeKind::BinaryOperator => {
                let a = self.eval(node.children[0]);
                let b = self.eval(node.children[1]);
                match op {
                    "+" => a.wrapping_add(b),
                    "-" => a.wrapping_sub(b),
                    "*" => a.wrapping_mul(b),
                    "<" => (a < b) as i64,
                    "<=" => (a <= b) as i64,
                    ">" => (a > b) as i64,
                    ">=" => (a >= b) as i64,
                    "==" => (a == b) as i64,
                    "!=" => (a != b) as i64,
                    other => panic!("operator {other} not interpreted"),
                }
            }
            k => panic!("{k:?} not interpreted"),
        }
    }
}
