use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::ScorerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Every trainable tensor of the scorer. Gradients and optimizer moments
/// reuse the same structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    /// vocab × H
    pub token_emb: Array2<f64>,
    /// max_tokens × H
    pub position_emb: Array2<f64>,
    /// 2 × H; row 0 text (and CLS), row 1 image regions.
    pub type_emb: Array2<f64>,
    /// (d + 4) × H
    pub region_w: Array2<f64>,
    pub region_b: Array1<f64>,
    pub layers: Vec<LayerParams>,
    pub final_gain: Array1<f64>,
    pub final_bias: Array1<f64>,
    pub head_w: Array1<f64>,
    /// Length-1 bias of the scoring head.
    pub head_b: Array1<f64>,
}

pub type TensorRef<'a> = (String, Vec<usize>, &'a [f64]);
pub type TensorMut<'a> = (String, Vec<usize>, &'a mut [f64]);

macro_rules! collect_tensors {
    ($out:ident, $owner:expr, $prefix:expr, $slice:ident, [$($field:ident),* $(,)?]) => {
        $(
            let shape = $owner.$field.shape().to_vec();
            $out.push((
                format!("{}{}", $prefix, stringify!($field)),
                shape,
                $owner.$field.$slice().expect("parameters are contiguous"),
            ));
        )*
    };
}

impl LayerParams {
    fn zeros(h: usize, f: usize) -> Self {
        Self {
            ln1_gain: Array1::zeros(h),
            ln1_bias: Array1::zeros(h),
            wq: Array2::zeros((h, h)),
            bq: Array1::zeros(h),
            wk: Array2::zeros((h, h)),
            bk: Array1::zeros(h),
            wv: Array2::zeros((h, h)),
            bv: Array1::zeros(h),
            wo: Array2::zeros((h, h)),
            bo: Array1::zeros(h),
            ln2_gain: Array1::zeros(h),
            ln2_bias: Array1::zeros(h),
            w1: Array2::zeros((h, f)),
            b1: Array1::zeros(f),
            w2: Array2::zeros((f, h)),
            b2: Array1::zeros(h),
        }
    }
}

impl ScorerParams {
    /// All-zero tensors shaped for `config`.
    pub fn zeros(config: &ScorerConfig) -> Self {
        let h = config.hidden_dim;
        Self {
            token_emb: Array2::zeros((config.vocab.len(), h)),
            position_emb: Array2::zeros((config.max_tokens, h)),
            type_emb: Array2::zeros((2, h)),
            region_w: Array2::zeros((config.feature_dim + 4, h)),
            region_b: Array1::zeros(h),
            layers: (0..config.layers)
                .map(|_| LayerParams::zeros(h, config.ffn_dim))
                .collect(),
            final_gain: Array1::zeros(h),
            final_bias: Array1::zeros(h),
            head_w: Array1::zeros(h),
            head_b: Array1::zeros(1),
        }
    }

    /// Embeddings ~ N(0, init_std²); projections ~ N(0, 1/fan_in); layer-norm
    /// gains 1; biases 0.
    pub fn init(config: &ScorerConfig, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(config);
        let std = config.init_std;
        let mut normal =
            |a: &mut [f64], s: f64| a.iter_mut().for_each(|v| *v = rng.sample::<f64, _>(StandardNormal) * s);
        let fan = |n: usize| (1.0 / n as f64).sqrt();
        let h = config.hidden_dim;
        normal(p.token_emb.as_slice_mut().unwrap(), std);
        normal(p.position_emb.as_slice_mut().unwrap(), std);
        normal(p.type_emb.as_slice_mut().unwrap(), std);
        normal(p.region_w.as_slice_mut().unwrap(), fan(config.feature_dim + 4));
        for l in &mut p.layers {
            l.ln1_gain.fill(1.0);
            l.ln2_gain.fill(1.0);
            for w in [&mut l.wq, &mut l.wk, &mut l.wv, &mut l.wo, &mut l.w1] {
                normal(w.as_slice_mut().unwrap(), fan(h));
            }
            normal(l.w2.as_slice_mut().unwrap(), fan(config.ffn_dim));
        }
        p.final_gain.fill(1.0);
        normal(p.head_w.as_slice_mut().unwrap(), fan(h));
        p
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        collect_tensors!(
            out,
            self,
            "",
            as_slice,
            [token_emb, position_emb, type_emb, region_w, region_b]
        );
        for (i, l) in self.layers.iter().enumerate() {
            let prefix = format!("layers.{i}.");
            collect_tensors!(
                out,
                l,
                prefix,
                as_slice,
                [ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo, ln2_gain, ln2_bias, w1, b1, w2, b2]
            );
        }
        collect_tensors!(out, self, "", as_slice, [final_gain, final_bias, head_w, head_b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        collect_tensors!(
            out,
            self,
            "",
            as_slice_mut,
            [token_emb, position_emb, type_emb, region_w, region_b]
        );
        for (i, l) in self.layers.iter_mut().enumerate() {
            let prefix = format!("layers.{i}.");
            collect_tensors!(
                out,
                l,
                prefix,
                as_slice_mut,
                [ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo, ln2_gain, ln2_bias, w1, b1, w2, b2]
            );
        }
        collect_tensors!(out, self, "", as_slice_mut, [final_gain, final_bias, head_w, head_b]);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, _, s)| s.len()).sum()
    }

    pub fn fill(&mut self, value: f64) {
        for (_, _, s) in self.tensors_mut() {
            s.fill(value);
        }
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ScorerParams, scale: f64) {
        for ((_, _, dst), (_, _, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, s)| s.iter().all(|v| v.is_finite()))
    }

    /// Flattened copy of every parameter in tensor order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors()
            .into_iter()
            .flat_map(|(_, _, s)| s.iter().copied())
            .collect()
    }
}
