//! Relational graph-attention regressor with hand-written gradients.
//!
//! One layer, for relation `r` and edge `i -> j` with scaled weight `w`:
//!
//! ```text
//! P_r    = H W_r
//! e_ij   = leaky(a_srcᵀ P_r[i] + a_dstᵀ P_r[j]) + u_r w
//! α_ij   = softmax of e over the edges of relation r entering j
//! m_j^r  = Σ_i α_ij (P_r[i] + w q_r)
//! h'_j   = relu(mean over relations entering j of m_j^r + W_self h_j + b)
//! ```
//!
//! A node has one parent, so each `Child` softmax is over a single edge and
//! `u_r` alone could never make the weight visible; `q_r` carries it into the
//! message.

mod adam;
mod checkpoint;
mod layer;
mod model;
mod tensor;
mod train;
mod vocab;

use crate::dataset::Scaler;
use crate::paragraph::{EdgeType, ParaGraph};

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{checkpoint_bytes, checkpoint_from_bytes, checkpoint_load, checkpoint_save, CheckpointError, CHECKPOINT_VERSION};
pub use layer::{rgat_forward, LayerCache, RgatLayer};
pub use model::{loss_and_gradients, Gradients, ModelConfig, ModelParams, RgatModel};
pub use tensor::{ShapeError, Tensor};
pub use train::{prepare_samples, train, EpochStats, Sample, TrainConfig, TrainError, TrainOutcome, TrainedModel};
pub use vocab::{vocab_index, VOCAB_SIZE};

pub const NUM_RELATIONS: usize = EdgeType::COUNT;

/// Edges of one relation, sorted by destination, with rows renumbered to
/// the nodes the relation touches.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationEdges {
    pub rel: usize,
    /// Global id of each local row.
    pub nodes: Vec<usize>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub w: Vec<f64>,
    /// (start, end, global destination) of each run of edges sharing a
    /// destination.
    pub groups: Vec<(usize, usize, usize)>,
}

/// Model input: vocabulary ids, typed weighted edges and the two scaled
/// launch features.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub vocab: Vec<usize>,
    pub relations: Vec<RelationEdges>,
    /// Number of distinct relations entering each node.
    pub relation_count: Vec<u32>,
    pub features: [f64; 2],
}

impl GraphInput {
    /// `edges` are (src, dst, relation, weight).
    pub fn new(vocab: Vec<usize>, edges: &[(usize, usize, usize, f64)], features: [f64; 2]) -> Result<Self, ShapeError> {
        let n = vocab.len();
        if n == 0 {
            return Err(ShapeError { op: "GraphInput::new", expected: vec![1], got: vec![0] });
        }
        if let Some(&(s, d, r, _)) = edges.iter().find(|(s, d, r, _)| *s >= n || *d >= n || *r >= NUM_RELATIONS) {
            return Err(ShapeError { op: "GraphInput::new edge", expected: vec![n, n, NUM_RELATIONS], got: vec![s, d, r] });
        }
        if let Some(&v) = vocab.iter().find(|&&v| v >= VOCAB_SIZE) {
            return Err(ShapeError { op: "GraphInput::new vocab", expected: vec![VOCAB_SIZE], got: vec![v] });
        }
        let mut relation_count = vec![0u32; n];
        let mut relations = Vec::new();
        for rel in 0..NUM_RELATIONS {
            let mut es: Vec<(usize, usize, f64)> =
                edges.iter().filter(|e| e.2 == rel).map(|&(s, d, _, w)| (d, s, w)).collect();
            if es.is_empty() {
                continue;
            }
            es.sort_by_key(|e| (e.0, e.1));
            let mut local = vec![usize::MAX; n];
            let mut nodes = Vec::new();
            let mut id = |v: usize, nodes: &mut Vec<usize>| {
                if local[v] == usize::MAX {
                    local[v] = nodes.len();
                    nodes.push(v);
                }
                local[v]
            };
            let mut re = RelationEdges { rel, nodes: Vec::new(), src: vec![], dst: vec![], w: vec![], groups: vec![] };
            for (k, &(d, s, w)) in es.iter().enumerate() {
                re.src.push(id(s, &mut nodes));
                re.dst.push(id(d, &mut nodes));
                re.w.push(w);
                if k == 0 || es[k - 1].0 != d {
                    re.groups.push((k, k + 1, d));
                    relation_count[d] += 1;
                } else {
                    re.groups.last_mut().expect("group exists").1 = k + 1;
                }
            }
            re.nodes = nodes;
            relations.push(re);
        }
        Ok(GraphInput { vocab, relations, relation_count, features })
    }

    /// Converts a graph with `Child` weights and features scaled by `scaler`.
    pub fn from_graph(g: &ParaGraph, scaler: &Scaler) -> GraphInput {
        let vocab = g.nodes.iter().map(vocab_index).collect();
        let edges: Vec<_> = g
            .edges
            .iter()
            .map(|e| {
                let w = if e.etype == EdgeType::Child { scaler.weight.apply(e.weight) } else { 0.0 };
                (e.src, e.dst, e.etype.code(), w)
            })
            .collect();
        GraphInput::new(vocab, &edges, scaler.features(g)).expect("graphs from ParaGraph are well formed")
    }

    pub fn num_nodes(&self) -> usize {
        self.vocab.len()
    }
}
