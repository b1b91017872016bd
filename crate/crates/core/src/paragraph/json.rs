use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::frontend::NodeKind;

use super::{Edge, EdgeType, GraphNode, LaunchFeatures, ParaGraph};

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphJsonError {
    #[error("malformed graph document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported graph schema version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    schema_version: u32,
    edge_types: Vec<String>,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    features: LaunchFeatures,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    text: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    src: usize,
    dst: usize,
    #[serde(rename = "type")]
    etype: usize,
    w: f64,
}

pub fn paragraph_to_json(g: &ParaGraph) -> Value {
    let doc = GraphDoc {
        schema_version: GRAPH_SCHEMA_VERSION,
        edge_types: EdgeType::ALL.iter().map(|t| t.as_str().to_string()).collect(),
        nodes: g.nodes.iter().map(|n| NodeDoc { id: n.id, kind: n.kind, text: n.text.clone() }).collect(),
        edges: g
            .edges
            .iter()
            .map(|e| EdgeDoc { src: e.src, dst: e.dst, etype: e.etype.code(), w: e.weight })
            .collect(),
        features: g.features,
    };
    serde_json::to_value(doc).expect("graph documents always serialize")
}

pub fn paragraph_from_json(value: &Value) -> Result<ParaGraph, GraphJsonError> {
    let doc: GraphDoc = serde_json::from_value(value.clone())?;
    if doc.schema_version != GRAPH_SCHEMA_VERSION {
        return Err(GraphJsonError::Version { found: doc.schema_version, expected: GRAPH_SCHEMA_VERSION });
    }
    let invalid = GraphJsonError::Invalid;
    let names: Vec<&str> = EdgeType::ALL.iter().map(|t| t.as_str()).collect();
    if doc.edge_types != names {
        return Err(invalid(format!("edge type table {:?} does not match {:?}", doc.edge_types, names)));
    }
    if doc.features.teams < 1 || doc.features.threads < 1 {
        return Err(invalid("teams and threads must be at least 1".into()));
    }
    let n = doc.nodes.len();
    let mut nodes = Vec::with_capacity(n);
    for (i, nd) in doc.nodes.into_iter().enumerate() {
        if nd.id != i {
            return Err(invalid(format!("node at position {i} has id {}", nd.id)));
        }
        nodes.push(GraphNode { id: i, kind: nd.kind, text: nd.text });
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in doc.edges {
        let etype = EdgeType::from_code(e.etype).ok_or_else(|| invalid(format!("unknown edge type {}", e.etype)))?;
        if e.src >= n || e.dst >= n {
            return Err(invalid(format!("edge {} -> {} leaves the node range", e.src, e.dst)));
        }
        let ok = if etype == EdgeType::Child { e.w.is_finite() && e.w > 0.0 } else { e.w == 0.0 };
        if !ok {
            return Err(invalid(format!("{etype} edge {} -> {} has weight {}", e.src, e.dst, e.w)));
        }
        edges.push(Edge { src: e.src, dst: e.dst, etype, weight: e.w });
    }
    let mut g = ParaGraph { nodes, edges, features: doc.features };
    let before = g.edges.len();
    g.sort_edges();
    if g.edges.len() != before {
        return Err(invalid("duplicate edges".into()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::paragraph::{build_paragraph, Mode, ParamBindings};

    fn sample() -> ParaGraph {
        let ast = parse_source(
            "void f(int n, double a[n]) {\n#pragma omp parallel for num_threads(3)\nfor (int i = 0; i < 7; i++) { if (a[i] > 0.5) { a[i] = 0.0; } } }",
        )
        .unwrap();
        build_paragraph(&ast, Mode::Para, &ParamBindings::default(), 1, 3).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let g = sample();
        let v = paragraph_to_json(&g);
        assert_eq!(paragraph_from_json(&v).unwrap(), g);
        // Non-integer weights (7 / 3 / 2) survive the text form too.
        let text = serde_json::to_string(&v).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(paragraph_from_json(&back).unwrap(), g);
    }

    #[test]
    fn rejects_bad_documents() {
        let v = paragraph_to_json(&sample());
        let mut bad = v.clone();
        bad["schema_version"] = 2.into();
        assert!(matches!(paragraph_from_json(&bad), Err(GraphJsonError::Version { found: 2, expected: 1 })));
        let mut bad = v.clone();
        bad["edges"][0]["type"] = 9.into();
        assert!(matches!(paragraph_from_json(&bad), Err(GraphJsonError::Invalid(_))));
        let mut bad = v.clone();
        bad["edges"][0]["dst"] = 10_000.into();
        assert!(matches!(paragraph_from_json(&bad), Err(GraphJsonError::Invalid(_))));
        let mut bad = v;
        bad["nodes"][0]["kind"] = "Lambda".into();
        assert!(matches!(paragraph_from_json(&bad), Err(GraphJsonError::Malformed(_))));
    }
}
