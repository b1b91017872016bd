use super::tensor::{axpy, dot, mat_vec, outer_acc, vec_mat, ShapeError, Tensor};
use super::{GraphInput, NUM_RELATIONS};

#[derive(Debug, Clone, PartialEq)]
pub struct RgatLayer {
    /// (relations, d_in, d_out)
    pub w: Tensor,
    /// (relations, d_out)
    pub a_src: Tensor,
    pub a_dst: Tensor,
    /// (relations,) logit gain on the edge weight.
    pub u: Tensor,
    /// (relations, d_out) message term scaled by the edge weight.
    pub q: Tensor,
    /// (d_in, d_out)
    pub w_self: Tensor,
    /// (d_out,)
    pub bias: Tensor,
    pub leaky_slope: f64,
}

struct RelCache {
    p: Vec<f64>,
    z: Vec<f64>,
    alpha: Vec<f64>,
}

/// Intermediate values kept for the backward pass.
pub struct LayerCache {
    input: Tensor,
    pre: Tensor,
    rels: Vec<RelCache>,
}

impl LayerCache {
    /// Smallest distance of any activation input to a kink (0 for ReLU and
    /// leaky ReLU).
    pub fn min_kink_distance(&self) -> f64 {
        let pre = self.pre.data().iter().map(|x| x.abs());
        let z = self.rels.iter().flat_map(|r| r.z.iter().map(|x| x.abs()));
        pre.chain(z).fold(f64::INFINITY, f64::min)
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

impl RgatLayer {
    pub fn zeros(d_in: usize, d_out: usize, leaky_slope: f64) -> RgatLayer {
        RgatLayer {
            w: Tensor::zeros(&[NUM_RELATIONS, d_in, d_out]),
            a_src: Tensor::zeros(&[NUM_RELATIONS, d_out]),
            a_dst: Tensor::zeros(&[NUM_RELATIONS, d_out]),
            u: Tensor::zeros(&[NUM_RELATIONS]),
            q: Tensor::zeros(&[NUM_RELATIONS, d_out]),
            w_self: Tensor::zeros(&[d_in, d_out]),
            bias: Tensor::zeros(&[d_out]),
            leaky_slope,
        }
    }

    pub fn d_in(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn d_out(&self) -> usize {
        self.w.shape()[2]
    }

    pub fn tensors(&self) -> [&Tensor; 7] {
        [&self.w, &self.a_src, &self.a_dst, &self.u, &self.q, &self.w_self, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 7] {
        [&mut self.w, &mut self.a_src, &mut self.a_dst, &mut self.u, &mut self.q, &mut self.w_self, &mut self.bias]
    }

    pub(crate) fn forward(&self, h: &Tensor, g: &GraphInput) -> Result<(Tensor, LayerCache), ShapeError> {
        let (n, din, dout) = (g.num_nodes(), self.d_in(), self.d_out());
        h.expect_shape("rgat_forward input", &[n, din])?;
        let mut pre = Tensor::zeros(&[n, dout]);
        for j in 0..n {
            let row = pre.row_mut(j);
            row.copy_from_slice(self.bias.data());
            vec_mat(h.row(j), self.w_self.data(), row);
        }
        let mut rels = Vec::with_capacity(g.relations.len());
        for rel in &g.relations {
            let r = rel.rel;
            let wr = self.w.slab(r);
            let (a_s, a_d, q) = (self.a_src.row(r), self.a_dst.row(r), self.q.row(r));
            let u = self.u.data()[r];
            let m = rel.nodes.len();
            let mut p = vec![0.0; m * dout];
            for (l, &v) in rel.nodes.iter().enumerate() {
                vec_mat(h.row(v), wr, &mut p[l * dout..(l + 1) * dout]);
            }
            let prow = |l: usize| &p[l * dout..(l + 1) * dout];
            let ss: Vec<f64> = (0..m).map(|l| dot(prow(l), a_s)).collect();
            let sd: Vec<f64> = (0..m).map(|l| dot(prow(l), a_d)).collect();
            let ne = rel.src.len();
            let z: Vec<f64> = (0..ne).map(|e| ss[rel.src[e]] + sd[rel.dst[e]]).collect();
            let mut alpha: Vec<f64> = (0..ne).map(|e| leaky(z[e], self.leaky_slope) + u * rel.w[e]).collect();
            for &(s, t, j) in &rel.groups {
                let mx = alpha[s..t].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for a in &mut alpha[s..t] {
                    *a = (*a - mx).exp();
                    sum += *a;
                }
                let inv_c = 1.0 / g.relation_count[j] as f64;
                let out = pre.row_mut(j);
                for e in s..t {
                    alpha[e] /= sum;
                    let c = alpha[e] * inv_c;
                    axpy(c, &p[rel.src[e] * dout..(rel.src[e] + 1) * dout], out);
                    if rel.w[e] != 0.0 {
                        axpy(c * rel.w[e], q, out);
                    }
                }
            }
            rels.push(RelCache { p, z, alpha });
        }
        let mut out = pre.clone();
        for x in out.data_mut() {
            *x = x.max(0.0);
        }
        Ok((out, LayerCache { input: h.clone(), pre, rels }))
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the layer input.
    pub(crate) fn backward(&self, cache: &LayerCache, g: &GraphInput, d_out: &Tensor, grads: &mut RgatLayer) -> Tensor {
        let (n, din, dout) = (g.num_nodes(), self.d_in(), self.d_out());
        let h = &cache.input;
        let mut dpre = d_out.clone();
        for (d, &p) in dpre.data_mut().iter_mut().zip(cache.pre.data()) {
            if p <= 0.0 {
                *d = 0.0;
            }
        }
        let mut dh = Tensor::zeros(&[n, din]);
        for j in 0..n {
            let dj = dpre.row(j);
            axpy(1.0, dj, grads.bias.data_mut());
            outer_acc(h.row(j), dj, grads.w_self.data_mut());
            mat_vec(self.w_self.data(), dj, dh.row_mut(j));
        }
        for (rel, rc) in g.relations.iter().zip(&cache.rels) {
            let r = rel.rel;
            let (a_s, a_d, q) = (self.a_src.row(r), self.a_dst.row(r), self.q.row(r));
            let m = rel.nodes.len();
            let mut dp = vec![0.0; m * dout];
            let mut dq = vec![0.0; dout];
            let mut da_s = vec![0.0; dout];
            let mut da_d = vec![0.0; dout];
            let mut du = 0.0;
            let p = &rc.p;
            let prow = |l: usize| &p[l * dout..(l + 1) * dout];
            let mut dalpha = Vec::new();
            for &(s, t, j) in &rel.groups {
                let inv_c = 1.0 / g.relation_count[j] as f64;
                let dj = dpre.row(j);
                if dj.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let q_dot = dot(dj, q);
                dalpha.clear();
                for e in s..t {
                    let a = rc.alpha[e];
                    let w = rel.w[e];
                    dalpha.push(inv_c * (dot(dj, prow(rel.src[e])) + w * q_dot));
                    let src = rel.src[e];
                    axpy(a * inv_c, dj, &mut dp[src * dout..(src + 1) * dout]);
                    if w != 0.0 {
                        axpy(a * inv_c * w, dj, &mut dq);
                    }
                }
                let mean: f64 = (s..t).map(|e| rc.alpha[e] * dalpha[e - s]).sum();
                for e in s..t {
                    let de = rc.alpha[e] * (dalpha[e - s] - mean);
                    du += de * rel.w[e];
                    let dz = if rc.z[e] > 0.0 { de } else { de * self.leaky_slope };
                    let (src, dst) = (rel.src[e], rel.dst[e]);
                    axpy(dz, prow(src), &mut da_s);
                    axpy(dz, prow(dst), &mut da_d);
                    axpy(dz, a_s, &mut dp[src * dout..(src + 1) * dout]);
                    axpy(dz, a_d, &mut dp[dst * dout..(dst + 1) * dout]);
                }
            }
            axpy(1.0, &dq, grads.q.row_mut(r));
            axpy(1.0, &da_s, grads.a_src.row_mut(r));
            axpy(1.0, &da_d, grads.a_dst.row_mut(r));
            grads.u.data_mut()[r] += du;
            let wr = self.w.slab(r);
            let dwr = grads.w.slab_mut(r);
            for (l, &v) in rel.nodes.iter().enumerate() {
                let dpl = &dp[l * dout..(l + 1) * dout];
                outer_acc(h.row(v), dpl, dwr);
                mat_vec(wr, dpl, dh.row_mut(v));
            }
        }
        dh
    }
}

/// One relational attention convolution.
pub fn rgat_forward(layer: &RgatLayer, h: &Tensor, g: &GraphInput) -> Result<Tensor, ShapeError> {
    layer.forward(h, g).map(|(out, _)| out)
}

/// Attention coefficients of every edge, per relation, in `GraphInput` order.
#[cfg(test)]
pub(crate) fn attention(layer: &RgatLayer, h: &Tensor, g: &GraphInput) -> Vec<Vec<f64>> {
    let (_, cache) = layer.forward(h, g).unwrap();
    cache.rels.into_iter().map(|r| r.alpha).collect()
}
