use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::omp::Directive;

/// Index of a node inside its [`Ast`]. Ids are assigned in pre-order, so the
/// root is always `0`.
pub type NodeId = usize;

/// Node kinds, spelled the way Clang's AST dump spells them.
///
/// The increment node of a for-loop is a `UnaryOperator`; some drawings call
/// it `UnaryStmt`, which is the same node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    TranslationUnit,
    FunctionDecl,
    ParmVarDecl,
    CompoundStmt,
    DeclStmt,
    VarDecl,
    BinaryOperator,
    UnaryOperator,
    ImplicitCastExpr,
    IntegerLiteral,
    FloatingLiteral,
    DeclRefExpr,
    ArraySubscriptExpr,
    CallExpr,
    ForStmt,
    WhileStmt,
    IfStmt,
    ReturnStmt,
    OmpDirective,
}

impl NodeKind {
    pub const ALL: [NodeKind; 19] = [
        NodeKind::TranslationUnit,
        NodeKind::FunctionDecl,
        NodeKind::ParmVarDecl,
        NodeKind::CompoundStmt,
        NodeKind::DeclStmt,
        NodeKind::VarDecl,
        NodeKind::BinaryOperator,
        NodeKind::UnaryOperator,
        NodeKind::ImplicitCastExpr,
        NodeKind::IntegerLiteral,
        NodeKind::FloatingLiteral,
        NodeKind::DeclRefExpr,
        NodeKind::ArraySubscriptExpr,
        NodeKind::CallExpr,
        NodeKind::ForStmt,
        NodeKind::WhileStmt,
        NodeKind::IfStmt,
        NodeKind::ReturnStmt,
        NodeKind::OmpDirective,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::TranslationUnit => "TranslationUnit",
            NodeKind::FunctionDecl => "FunctionDecl",
            NodeKind::ParmVarDecl => "ParmVarDecl",
            NodeKind::CompoundStmt => "CompoundStmt",
            NodeKind::DeclStmt => "DeclStmt",
            NodeKind::VarDecl => "VarDecl",
            NodeKind::BinaryOperator => "BinaryOperator",
            NodeKind::UnaryOperator => "UnaryOperator",
            NodeKind::ImplicitCastExpr => "ImplicitCastExpr",
            NodeKind::IntegerLiteral => "IntegerLiteral",
            NodeKind::FloatingLiteral => "FloatingLiteral",
            NodeKind::DeclRefExpr => "DeclRefExpr",
            NodeKind::ArraySubscriptExpr => "ArraySubscriptExpr",
            NodeKind::CallExpr => "CallExpr",
            NodeKind::ForStmt => "ForStmt",
            NodeKind::WhileStmt => "WhileStmt",
            NodeKind::IfStmt => "IfStmt",
            NodeKind::ReturnStmt => "ReturnStmt",
            NodeKind::OmpDirective => "OmpDirective",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_decl(self) -> bool {
        matches!(self, NodeKind::VarDecl | NodeKind::ParmVarDecl)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownKind(pub String);

impl fmt::Display for UnknownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown node kind `{}`", self.0)
    }
}

impl std::error::Error for UnknownKind {}

impl FromStr for NodeKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// One node of the syntax tree.
///
/// `token_text` is only ever set on terminals (nodes without children).
/// `label` carries the operator of `BinaryOperator`/`UnaryOperator`, the
/// declared name of `VarDecl`/`ParmVarDecl`/`FunctionDecl` and the callee of
/// `CallExpr`, whether or not the node is a terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct AstNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    pub token_text: String,
    pub label: Option<String>,
    pub decl_ref: Option<NodeId>,
    pub directive: Option<Directive>,
}

impl AstNode {
    pub fn is_terminal(&self) -> bool {
        self.children.is_empty()
    }

    /// Human-readable spelling: the token for terminals, otherwise the
    /// label or directive text. Empty for purely structural nodes.
    pub fn spelling(&self) -> &str {
        if let Some(d) = &self.directive {
            return &d.text;
        }
        if !self.token_text.is_empty() {
            return &self.token_text;
        }
        self.label.as_deref().unwrap_or("")
    }
}

/// A parsed translation unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub(crate) nodes: Vec<AstNode>,
    pub(crate) root: NodeId,
    pub(crate) tokens: Vec<NodeId>,
}

impl Ast {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Terminal node ids in source order.
    pub fn tokens(&self) -> &[NodeId] {
        &self.tokens
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    /// Children in the order graph emission uses. For a `ForStmt` this is
    /// (init, cond, inc, body); storage keeps (init, cond, body, inc).
    pub fn emission_children(&self, id: NodeId) -> Vec<NodeId> {
        let node = &self.nodes[id];
        match (node.kind, node.children.as_slice()) {
            (NodeKind::ForStmt, &[init, cond, body, inc]) => vec![init, cond, inc, body],
            _ => node.children.clone(),
        }
    }

    /// Parent of every node; `None` for the root.
    pub fn parents(&self) -> Vec<Option<NodeId>> {
        let mut parents = vec![None; self.nodes.len()];
        for node in &self.nodes {
            for &c in &node.children {
                parents[c] = Some(node.id);
            }
        }
        parents
    }

    pub fn ids_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.kind == kind).map(|n| n.id)
    }

    /// Strips `ImplicitCastExpr` wrappers.
    pub fn skip_casts(&self, mut id: NodeId) -> NodeId {
        while self.nodes[id].kind == NodeKind::ImplicitCastExpr {
            id = self.nodes[id].children[0];
        }
        id
    }

    pub fn function(&self, name: &str) -> Option<NodeId> {
        self.children(self.root).iter().copied().find(|&c| {
            self.nodes[c].kind == NodeKind::FunctionDecl
                && self.nodes[c].label.as_deref() == Some(name)
        })
    }

    /// Ids of nodes in the subtree rooted at `id` (pre-order).
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }
}
