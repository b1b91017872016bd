use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par::{self, Execution};

use super::layer::{LayerCache, RgatLayer};
use super::tensor::{axpy, dot, mat_vec, outer_acc, vec_mat, ShapeError, Tensor};
use super::{GraphInput, VOCAB_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab: usize,
    pub hidden: usize,
    pub layers: usize,
    pub head1: usize,
    pub head2: usize,
    pub feat: usize,
    pub leaky_slope: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { vocab: VOCAB_SIZE, hidden: 64, layers: 3, head1: 64, head2: 32, feat: 16, leaky_slope: 0.2 }
    }
}

/// Every trainable tensor of the model. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Tensor,
    pub layers: Vec<RgatLayer>,
    pub head1_w: Tensor,
    pub head1_b: Tensor,
    pub head2_w: Tensor,
    pub head2_b: Tensor,
    pub feat_w: Tensor,
    pub feat_b: Tensor,
    pub out_w: Tensor,
    pub out_b: Tensor,
}

pub type Gradients = ModelParams;

impl ModelParams {
    pub fn zeros(c: &ModelConfig) -> ModelParams {
        ModelParams {
            embedding: Tensor::zeros(&[c.vocab, c.hidden]),
            layers: (0..c.layers).map(|_| RgatLayer::zeros(c.hidden, c.hidden, c.leaky_slope)).collect(),
            head1_w: Tensor::zeros(&[c.hidden, c.head1]),
            head1_b: Tensor::zeros(&[c.head1]),
            head2_w: Tensor::zeros(&[c.head1, c.head2]),
            head2_b: Tensor::zeros(&[c.head2]),
            feat_w: Tensor::zeros(&[2, c.feat]),
            feat_b: Tensor::zeros(&[c.feat]),
            out_w: Tensor::zeros(&[c.head2 + c.feat]),
            out_b: Tensor::zeros(&[1]),
        }
    }

    /// Named tensors in a fixed order (used by the optimizer and
    /// checkpoints).
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut v = vec![("embedding".to_string(), &self.embedding)];
        const LAYER_NAMES: [&str; 7] = ["w", "a_src", "a_dst", "u", "q", "w_self", "bias"];
        for (i, l) in self.layers.iter().enumerate() {
            for (name, t) in LAYER_NAMES.iter().zip(l.tensors()) {
                v.push((format!("layer{i}.{name}"), t));
            }
        }
        v.extend([
            ("head1.w".to_string(), &self.head1_w),
            ("head1.b".to_string(), &self.head1_b),
            ("head2.w".to_string(), &self.head2_w),
            ("head2.b".to_string(), &self.head2_b),
            ("feat.w".to_string(), &self.feat_w),
            ("feat.b".to_string(), &self.feat_b),
            ("out.w".to_string(), &self.out_w),
            ("out.b".to_string(), &self.out_b),
        ]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.embedding];
        for l in &mut self.layers {
            v.extend(l.tensors_mut());
        }
        v.extend([
            &mut self.head1_w,
            &mut self.head1_b,
            &mut self.head2_w,
            &mut self.head2_b,
            &mut self.feat_w,
            &mut self.feat_b,
            &mut self.out_w,
            &mut self.out_b,
        ]);
        v
    }

    pub fn num_params(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.named().iter().flat_map(|(_, t)| t.data().iter().copied()).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<(), ShapeError> {
        if values.len() != self.num_params() {
            return Err(ShapeError { op: "set_flat", expected: vec![self.num_params()], got: vec![values.len()] });
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&values[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        let others: Vec<&Tensor> = other.named().into_iter().map(|(_, t)| t).collect();
        for (a, b) in self.tensors_mut().into_iter().zip(others) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.scale(s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.data().iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgatModel {
    pub config: ModelConfig,
    pub params: ModelParams,
}

struct Cache {
    layers: Vec<LayerCache>,
    n: usize,
    pooled: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    zf: Vec<f64>,
    af: Vec<f64>,
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

fn relu_back(z: &[f64], d: &mut [f64]) {
    for (di, &zi) in d.iter_mut().zip(z) {
        if zi <= 0.0 {
            *di = 0.0;
        }
    }
}

fn dense(x: &[f64], w: &Tensor, b: &Tensor) -> Vec<f64> {
    let mut out = b.data().to_vec();
    vec_mat(x, w.data(), &mut out);
    out
}

impl RgatModel {
    /// Seeded initialization: embeddings and attention vectors uniform in
    /// [-0.1, 0.1], matrices Glorot-uniform, biases zero.
    pub fn new(config: ModelConfig, seed: u64) -> RgatModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::zeros(&config);
        let mut uniform = |t: &mut Tensor, limit: f64| {
            for x in t.data_mut() {
                *x = rng.random_range(-limit..=limit);
            }
        };
        let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        uniform(&mut p.embedding, 0.1);
        let d = config.hidden;
        for l in &mut p.layers {
            uniform(&mut l.w, glorot(d, d));
            uniform(&mut l.a_src, 0.1);
            uniform(&mut l.a_dst, 0.1);
            uniform(&mut l.u, 0.1);
            uniform(&mut l.q, glorot(1, d));
            uniform(&mut l.w_self, glorot(d, d));
        }
        uniform(&mut p.head1_w, glorot(config.hidden, config.head1));
        uniform(&mut p.head2_w, glorot(config.head1, config.head2));
        uniform(&mut p.feat_w, glorot(2, config.feat));
        uniform(&mut p.out_w, glorot(config.head2 + config.feat, 1));
        RgatModel { config, params: p }
    }

    fn forward_cached(&self, g: &GraphInput) -> Result<(f64, Cache), ShapeError> {
        let p = &self.params;
        let (n, d) = (g.num_nodes(), self.config.hidden);
        let mut h = Tensor::zeros(&[n, d]);
        for (j, &v) in g.vocab.iter().enumerate() {
            if v >= self.config.vocab {
                return Err(ShapeError { op: "embedding lookup", expected: vec![self.config.vocab], got: vec![v] });
            }
            h.row_mut(j).copy_from_slice(p.embedding.row(v));
        }
        let mut caches = Vec::with_capacity(p.layers.len());
        for l in &p.layers {
            let (next, c) = l.forward(&h, g)?;
            caches.push(c);
            h = next;
        }
        let mut pooled = vec![0.0; d];
        for j in 0..n {
            axpy(1.0, h.row(j), &mut pooled);
        }
        for x in &mut pooled {
            *x /= n as f64;
        }
        let z1 = dense(&pooled, &p.head1_w, &p.head1_b);
        let a1 = relu(&z1);
        let z2 = dense(&a1, &p.head2_w, &p.head2_b);
        let a2 = relu(&z2);
        let zf = dense(&g.features, &p.feat_w, &p.feat_b);
        let af = relu(&zf);
        let h2 = self.config.head2;
        let y = dot(&a2, &p.out_w.data()[..h2]) + dot(&af, &p.out_w.data()[h2..]) + p.out_b.data()[0];
        Ok((y, Cache { layers: caches, n, pooled, z1, a1, z2, a2, zf, af }))
    }

    /// Predicted scaled runtime.
    pub fn forward(&self, g: &GraphInput) -> Result<f64, ShapeError> {
        self.forward_cached(g).map(|(y, _)| y)
    }

    /// Smallest distance of any activation input to a kink for `g`.
    pub fn min_kink_distance(&self, g: &GraphInput) -> Result<f64, ShapeError> {
        let (_, c) = self.forward_cached(g)?;
        let heads = c.z1.iter().chain(&c.z2).chain(&c.zf).map(|x| x.abs());
        let layers = c.layers.iter().map(LayerCache::min_kink_distance);
        Ok(heads.chain(layers).fold(f64::INFINITY, f64::min))
    }

    fn backward(&self, g: &GraphInput, c: &Cache, dy: f64, grads: &mut Gradients) {
        let p = &self.params;
        let h2 = self.config.head2;
        grads.out_b.data_mut()[0] += dy;
        let (dw2, dwf) = grads.out_w.data_mut().split_at_mut(h2);
        axpy(dy, &c.a2, dw2);
        axpy(dy, &c.af, dwf);

        let mut daf: Vec<f64> = p.out_w.data()[h2..].iter().map(|w| w * dy).collect();
        relu_back(&c.zf, &mut daf);
        axpy(1.0, &daf, grads.feat_b.data_mut());
        outer_acc(&g.features, &daf, grads.feat_w.data_mut());

        let mut da2: Vec<f64> = p.out_w.data()[..h2].iter().map(|w| w * dy).collect();
        relu_back(&c.z2, &mut da2);
        axpy(1.0, &da2, grads.head2_b.data_mut());
        outer_acc(&c.a1, &da2, grads.head2_w.data_mut());
        let mut da1 = vec![0.0; self.config.head1];
        mat_vec(p.head2_w.data(), &da2, &mut da1);
        relu_back(&c.z1, &mut da1);
        axpy(1.0, &da1, grads.head1_b.data_mut());
        outer_acc(&c.pooled, &da1, grads.head1_w.data_mut());
        let mut dpool = vec![0.0; self.config.hidden];
        mat_vec(p.head1_w.data(), &da1, &mut dpool);

        let d = self.config.hidden;
        let mut dh = Tensor::zeros(&[c.n, d]);
        for j in 0..c.n {
            axpy(1.0 / c.n as f64, &dpool, dh.row_mut(j));
        }
        for (i, layer) in p.layers.iter().enumerate().rev() {
            dh = layer.backward(&c.layers[i], g, &dh, &mut grads.layers[i]);
        }
        for (j, &v) in g.vocab.iter().enumerate() {
            axpy(1.0, dh.row(j), grads.embedding.row_mut(v));
        }
    }

    /// Squared error and its gradient for one sample.
    pub fn sample_gradient(&self, g: &GraphInput, target: f64) -> Result<(f64, Gradients), ShapeError> {
        let (y, cache) = self.forward_cached(g)?;
        let mut grads = ModelParams::zeros(&self.config);
        self.backward(g, &cache, 2.0 * (y - target), &mut grads);
        Ok(((y - target) * (y - target), grads))
    }
}

/// Mean squared error over the batch and its gradient, computed per sample
/// (possibly in parallel) and summed in batch order.
pub fn loss_and_gradients(
    model: &RgatModel,
    batch: &[(&GraphInput, f64)],
    exec: Execution,
) -> Result<(f64, Gradients), ShapeError> {
    if batch.is_empty() {
        return Err(ShapeError { op: "loss_and_gradients", expected: vec![1], got: vec![0] });
    }
    let parts = par::map(exec, batch, |&(g, t)| model.sample_gradient(g, t));
    let mut total = ModelParams::zeros(&model.config);
    let mut loss = 0.0;
    for part in parts {
        let (l, g) = part?;
        loss += l;
        total.add_assign(&g);
    }
    let inv = 1.0 / batch.len() as f64;
    total.scale(inv);
    Ok((loss * inv, total))
}
