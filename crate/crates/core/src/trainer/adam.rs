use crate::scorer::ScorerParams;

/// Adaptive-moment optimizer with bias correction. Frozen tensors keep
/// their values and their moments stay zero.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: ScorerParams,
    v: ScorerParams,
    t: u64,
    frozen: Vec<bool>,
}

impl Adam {
    pub fn new(params: &ScorerParams, learning_rate: f64, beta1: f64, beta2: f64, eps: f64, frozen: Vec<bool>) -> Self {
        let mut m = params.clone();
        m.fill(0.0);
        let v = m.clone();
        assert_eq!(frozen.len(), m.tensors().len(), "one freeze flag per tensor");
        Self {
            learning_rate,
            beta1,
            beta2,
            eps,
            m,
            v,
            t: 0,
            frozen,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ScorerParams, grads: &ScorerParams) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let lr = self.learning_rate;
        let eps = self.eps;
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
            .zip(&self.frozen);
        for (((((_, _, p), (_, _, g)), (_, _, m)), (_, _, v)), &frozen) in tensors {
            if frozen {
                continue;
            }
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}
