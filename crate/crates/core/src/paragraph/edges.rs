use crate::frontend::{Ast, NodeKind};

use super::{Edge, EdgeType};

fn edge(src: usize, dst: usize, etype: EdgeType) -> Edge {
    Edge { src, dst, etype, weight: 0.0 }
}

/// Every non-`Child` edge of the augmented graph, unsorted.
///
/// - `NextToken` links consecutive terminals in source order.
/// - `NextSib` links consecutive children; a `ForStmt` uses the order
///   (init, cond, inc, body).
/// - `Ref` goes from each `DeclRefExpr` to its declaration.
/// - `ForExec`/`ForNext` follow loop control flow: init to cond to body, and
///   body to inc to cond. A `while` loop gets cond to body and body to cond.
/// - `ConTrue`/`ConFalse` go from an `if` condition to its branches.
pub fn augmentation_edges(ast: &Ast) -> Vec<Edge> {
    let mut out = Vec::new();
    for w in ast.tokens().windows(2) {
        out.push(edge(w[0], w[1], EdgeType::NextToken));
    }
    for node in ast.nodes() {
        for w in ast.emission_children(node.id).windows(2) {
            out.push(edge(w[0], w[1], EdgeType::NextSib));
        }
        if let Some(decl) = node.decl_ref {
            out.push(edge(node.id, decl, EdgeType::Ref));
        }
        match (node.kind, node.children.as_slice()) {
            (NodeKind::ForStmt, &[init, cond, body, inc]) => {
                out.push(edge(init, cond, EdgeType::ForExec));
                out.push(edge(cond, body, EdgeType::ForExec));
                out.push(edge(body, inc, EdgeType::ForNext));
                out.push(edge(inc, cond, EdgeType::ForNext));
            }
            (NodeKind::WhileStmt, &[cond, body]) => {
                out.push(edge(cond, body, EdgeType::ForExec));
                out.push(edge(body, cond, EdgeType::ForNext));
            }
            (NodeKind::IfStmt, [cond, then, rest @ ..]) => {
                out.push(edge(*cond, *then, EdgeType::ConTrue));
                if let Some(&els) = rest.first() {
                    out.push(edge(*cond, els, EdgeType::ConFalse));
                }
            }
            _ => {}
        }
    }
    out
}
