use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::ast::{Ast, AstNode, NodeKind};
use super::omp::Directive;

pub const AST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AstJsonError {
    #[error("malformed AST document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported AST schema version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid AST: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct AstDoc {
    schema_version: u32,
    root: usize,
    nodes: Vec<NodeDoc>,
    tokens: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    kind: NodeKind,
    children: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decl_ref: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    directive: Option<String>,
}

pub fn ast_to_json(ast: &Ast) -> Value {
    let doc = AstDoc {
        schema_version: AST_SCHEMA_VERSION,
        root: ast.root,
        nodes: ast
            .nodes
            .iter()
            .map(|n| NodeDoc {
                id: n.id,
                kind: n.kind,
                children: n.children.clone(),
                text: (!n.token_text.is_empty()).then(|| n.token_text.clone()),
                name: n.label.clone(),
                decl_ref: n.decl_ref,
                directive: n.directive.as_ref().map(|d| d.text.clone()),
            })
            .collect(),
        tokens: ast.tokens.clone(),
    };
    serde_json::to_value(doc).expect("AST documents always serialize")
}

pub fn ast_from_json(value: &Value) -> Result<Ast, AstJsonError> {
    let doc: AstDoc = serde_json::from_value(value.clone())?;
    if doc.schema_version != AST_SCHEMA_VERSION {
        return Err(AstJsonError::Version { found: doc.schema_version, expected: AST_SCHEMA_VERSION });
    }
    let invalid = |m: String| AstJsonError::Invalid(m);
    let n = doc.nodes.len();
    if n == 0 || doc.root != 0 {
        return Err(invalid("root must be node 0 of a non-empty node list".into()));
    }
    let mut nodes = Vec::with_capacity(n);
    for (i, nd) in doc.nodes.into_iter().enumerate() {
        if nd.id != i {
            return Err(invalid(format!("node at position {i} has id {}", nd.id)));
        }
        if let Some(&c) = nd.children.iter().find(|&&c| c >= n) {
            return Err(invalid(format!("node {i} references missing child {c}")));
        }
        let directive = match (&nd.directive, nd.kind) {
            (Some(t), NodeKind::OmpDirective) => {
                Some(Directive::parse(t).map_err(|e| invalid(e.to_string()))?)
            }
            (None, NodeKind::OmpDirective) => return Err(invalid(format!("directive node {i} has no text"))),
            (Some(_), k) => return Err(invalid(format!("{k} node {i} carries directive text"))),
            (None, _) => None,
        };
        if nd.decl_ref.is_some() != (nd.kind == NodeKind::DeclRefExpr) {
            return Err(invalid(format!("decl_ref presence mismatch on {} node {i}", nd.kind)));
        }
        let token_text = nd.text.unwrap_or_default();
        if !token_text.is_empty() && !nd.children.is_empty() {
            return Err(invalid(format!("non-terminal node {i} has token text")));
        }
        nodes.push(AstNode {
            id: i,
            kind: nd.kind,
            children: nd.children,
            token_text,
            label: nd.name,
            decl_ref: nd.decl_ref,
            directive,
        });
    }
    // Pre-order numbering implies a tree; check it directly.
    let mut expected = 0usize;
    let mut stack = vec![0usize];
    let mut seen = vec![false; n];
    while let Some(id) = stack.pop() {
        if id != expected || seen[id] {
            return Err(invalid(format!("ids are not a pre-order numbering of a tree (at node {id})")));
        }
        seen[id] = true;
        expected += 1;
        stack.extend(nodes[id].children.iter().rev());
    }
    if expected != n {
        return Err(invalid(format!("{} nodes are unreachable from the root", n - expected)));
    }
    for node in &nodes {
        if let Some(d) = node.decl_ref {
            if d >= n || !nodes[d].kind.is_decl() {
                return Err(invalid(format!("node {} refers to {d}, which is not a declaration", node.id)));
            }
        }
    }
    let mut terminals: Vec<usize> = nodes.iter().filter(|n| n.children.is_empty()).map(|n| n.id).collect();
    let mut listed = doc.tokens.clone();
    listed.sort_unstable();
    terminals.sort_unstable();
    if listed != terminals {
        return Err(invalid("token list does not match the terminal nodes".into()));
    }
    Ok(Ast { nodes, root: 0, tokens: doc.tokens })
}
