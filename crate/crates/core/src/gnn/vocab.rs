//! Node vocabulary: one entry per node kind, with operators split by
//! spelling and directives split by (target, collapse, map).

use crate::frontend::{Directive, NodeKind};
use crate::paragraph::GraphNode;

const BINARY_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||",
];
const UNARY_OPS: &[&str] = &["++", "--", "pre++", "pre--", "-", "+", "!"];

const KINDS: usize = NodeKind::ALL.len();
const BINARY_BASE: usize = KINDS;
const UNARY_BASE: usize = BINARY_BASE + BINARY_OPS.len();
const DIRECTIVE_BASE: usize = UNARY_BASE + UNARY_OPS.len();

pub const VOCAB_SIZE: usize = DIRECTIVE_BASE + 8;

/// Vocabulary index of a graph node. Unknown operators fall back to the
/// bare kind.
pub fn vocab_index(node: &GraphNode) -> usize {
    let op = |table: &[&str], base: usize| {
        table.iter().position(|o| *o == node.text).map_or(node.kind.index(), |p| base + p)
    };
    match node.kind {
        NodeKind::BinaryOperator => op(BINARY_OPS, BINARY_BASE),
        NodeKind::UnaryOperator => op(UNARY_OPS, UNARY_BASE),
        NodeKind::OmpDirective => match Directive::parse(&node.text) {
            Ok(d) => {
                DIRECTIVE_BASE
                    + usize::from(d.is_target()) * 4
                    + usize::from(d.collapse() >= 2) * 2
                    + usize::from(d.has_map())
            }
            Err(_) => node.kind.index(),
        },
        k => k.index(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn node(kind: NodeKind, text: &str) -> GraphNode {
        GraphNode { id: 0, kind, text: text.into() }
    }

    #[test]
    fn indices_are_distinct_and_in_range() {
        let mut seen = BTreeSet::new();
        for k in NodeKind::ALL {
            seen.insert(vocab_index(&node(k, "")));
        }
        for o in BINARY_OPS {
            seen.insert(vocab_index(&node(NodeKind::BinaryOperator, o)));
        }
        for o in UNARY_OPS {
            seen.insert(vocab_index(&node(NodeKind::UnaryOperator, o)));
        }
        for d in [
            "#pragma omp parallel for",
            "#pragma omp parallel for collapse(2)",
            "#pragma omp target teams distribute parallel for",
            "#pragma omp target teams distribute parallel for collapse(2)",
            "#pragma omp target teams distribute parallel for map(to: a[0:n])",
            "#pragma omp target teams distribute parallel for collapse(2) map(to: a[0:n])",
        ] {
            seen.insert(vocab_index(&node(NodeKind::OmpDirective, d)));
        }
        assert_eq!(seen.len(), KINDS + BINARY_OPS.len() + UNARY_OPS.len() + 6);
        assert!(seen.iter().all(|&i| i < VOCAB_SIZE));
        assert_eq!(vocab_index(&node(NodeKind::BinaryOperator, "<<")), NodeKind::BinaryOperator.index());
    }
}
