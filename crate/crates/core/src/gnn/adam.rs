use serde::{Deserialize, Serialize};

use super::model::{Gradients, ModelConfig, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: ModelParams,
    v: ModelParams,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, model: &ModelConfig) -> Adam {
        Adam { config, m: ModelParams::zeros(model), v: ModelParams::zeros(model), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let gs = grads.named();
        let ps = params.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, (_, g)), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            let it = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
            for ((pi, &gi), (mi, vi)) in it {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *pi -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::RgatModel;

    fn cfg() -> ModelConfig {
        ModelConfig { hidden: 3, head1: 4, head2: 2, feat: 2, ..ModelConfig::default() }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut m = RgatModel::new(cfg(), 1);
        let before = m.params.clone();
        let mut opt = Adam::new(AdamConfig::default(), &m.config);
        opt.step(&mut m.params, &ModelParams::zeros(&m.config));
        assert_eq!(m.params, before);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut m = RgatModel::new(cfg(), 2);
        let before = m.params.flat();
        let mut g = ModelParams::zeros(&m.config);
        let signs: Vec<f64> = (0..before.len()).map(|i| [0.5, -2.0, 1e-3][i % 3]).collect();
        g.set_flat(&signs).unwrap();
        let c = AdamConfig { lr: 0.01, ..AdamConfig::default() };
        let mut opt = Adam::new(c, &m.config);
        opt.step(&mut m.params, &g);
        for ((a, b), gi) in m.params.flat().iter().zip(&before).zip(&signs) {
            let expected = -c.lr * gi / (gi.abs() + c.eps);
            assert!((a - b - expected).abs() < 1e-15, "{} vs {expected}", a - b);
            assert!((a - b + c.lr * gi.signum()).abs() < 1e-6);
        }
    }
}
