//! ParaGraph construction: the AST plus typed flow edges and weighted
//! `Child` edges.

mod edges;
mod json;
mod weights;

use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{Ast, NodeId, NodeKind};

pub use edges::augmentation_edges;
pub use json::{paragraph_from_json, paragraph_to_json, GraphJsonError, GRAPH_SCHEMA_VERSION};
pub use weights::{assign_weights, trip_count, ParamBindings, Rational, TripCount, TripOrigin, WeightError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    Child,
    NextToken,
    NextSib,
    Ref,
    ForExec,
    ForNext,
    ConTrue,
    ConFalse,
}

impl EdgeType {
    pub const ALL: [EdgeType; 8] = [
        EdgeType::Child,
        EdgeType::NextToken,
        EdgeType::NextSib,
        EdgeType::Ref,
        EdgeType::ForExec,
        EdgeType::ForNext,
        EdgeType::ConTrue,
        EdgeType::ConFalse,
    ];
    pub const COUNT: usize = 8;

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Child => "Child",
            EdgeType::NextToken => "NextToken",
            EdgeType::NextSib => "NextSib",
            EdgeType::Ref => "Ref",
            EdgeType::ForExec => "ForExec",
            EdgeType::ForNext => "ForNext",
            EdgeType::ConTrue => "ConTrue",
            EdgeType::ConFalse => "ConFalse",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub etype: EdgeType,
    /// Execution-count weight for `Child` edges, 0 for every other type.
    pub weight: f64,
}

impl Edge {
    fn key(&self) -> (NodeId, NodeId, EdgeType) {
        (self.src, self.dst, self.etype)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub text: String,
}

/// Which graph representation to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Plain AST: `Child` edges only, all weights 1.
    Raw,
    /// All eight edge types, `Child` weights 1.
    Aug,
    /// All eight edge types with execution-count weights.
    Para,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Raw, Mode::Aug, Mode::Para];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Raw => "raw",
            Mode::Aug => "aug",
            Mode::Para => "para",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Mode::Raw),
            "aug" => Ok(Mode::Aug),
            "para" | "paragraph" => Ok(Mode::Para),
            _ => Err(format!("unknown graph mode `{s}` (expected raw, aug or para)")),
        }
    }
}

/// Launch configuration carried alongside the graph as model features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchFeatures {
    pub teams: u32,
    pub threads: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParaGraph {
    pub nodes: Vec<GraphNode>,
    /// Sorted by (src, dst, type).
    pub edges: Vec<Edge>,
    pub features: LaunchFeatures,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("team count must be at least 1 (got {0})")]
    ZeroTeams(u32),
}

impl ParaGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges_of(&self, etype: EdgeType) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.etype == etype)
    }

    pub fn count_of(&self, etype: EdgeType) -> usize {
        self.edges_of(etype).count()
    }

    pub fn weight(&self, src: NodeId, dst: NodeId) -> Option<f64> {
        self.edges_of(EdgeType::Child).find(|e| e.src == src && e.dst == dst).map(|e| e.weight)
    }

    /// Derives a `raw` or `aug` graph from a fully weighted one.
    pub fn project(&self, mode: Mode) -> ParaGraph {
        let edges = match mode {
            Mode::Para => self.edges.clone(),
            Mode::Aug => self
                .edges
                .iter()
                .map(|e| Edge { weight: if e.etype == EdgeType::Child { 1.0 } else { 0.0 }, ..*e })
                .collect(),
            Mode::Raw => self
                .edges
                .iter()
                .filter(|e| e.etype == EdgeType::Child)
                .map(|e| Edge { weight: 1.0, ..*e })
                .collect(),
        };
        ParaGraph { nodes: self.nodes.clone(), edges, features: self.features }
    }

    fn sort_edges(&mut self) {
        self.edges.sort_by_key(Edge::key);
        self.edges.dedup_by_key(|e| e.key());
    }
}

fn to_f64(r: Rational) -> f64 {
    r.to_f64().expect("weights are finite rationals")
}

/// Builds the graph for `ast` in the requested mode.
///
/// `num_threads` divides the trip count of statically scheduled worksharing
/// loops; `num_teams` is recorded as a model feature only.
pub fn build_paragraph(
    ast: &Ast,
    mode: Mode,
    bindings: &ParamBindings,
    num_teams: u32,
    num_threads: u32,
) -> Result<ParaGraph, GraphError> {
    if num_teams < 1 {
        return Err(GraphError::ZeroTeams(num_teams));
    }
    let weights = if mode == Mode::Para { Some(assign_weights(ast, bindings, num_threads)?) } else { None };
    if num_threads < 1 {
        return Err(WeightError::ZeroThreads(num_threads).into());
    }
    let nodes = ast
        .nodes()
        .iter()
        .map(|n| GraphNode { id: n.id, kind: n.kind, text: n.spelling().to_string() })
        .collect();
    let mut edges = Vec::new();
    for node in ast.nodes() {
        for &c in &node.children {
            let weight = weights.as_ref().map_or(1.0, |w| to_f64(w[&(node.id, c)]));
            edges.push(Edge { src: node.id, dst: c, etype: EdgeType::Child, weight });
        }
    }
    if mode != Mode::Raw {
        edges.extend(augmentation_edges(ast));
    }
    let mut g = ParaGraph { nodes, edges, features: LaunchFeatures { teams: num_teams, threads: num_threads } };
    g.sort_edges();
    Ok(g)
}
