//! Pre-norm transformer encoder over `[CLS] regions tokens`, with a
//! hand-written backward pass.
//!
//! Regions carry no positional embedding; their only location signal is the
//! box coordinates appended to the features. Keys at padded positions are
//! masked out of attention.

use ndarray::{s, Array1, Array2, Axis};

use super::config::ScorerConfig;
use super::params::{LayerParams, ScorerParams};

/// Tensorized encoder input.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderInput {
    /// N × (d + 4): region features followed by box coordinates.
    pub regions: Array2<f64>,
    pub token_ids: Vec<usize>,
    /// Attention key mask over the `1 + N + T` positions.
    pub key_mask: Vec<bool>,
}

impl EncoderInput {
    pub fn seq_len(&self) -> usize {
        1 + self.regions.nrows() + self.token_ids.len()
    }
}

struct NormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

struct LayerCache {
    norm1: NormCache,
    attn_in: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Vec<Array2<f64>>,
    context: Array2<f64>,
    norm2: NormCache,
    ffn_in: Array2<f64>,
    pre_act: Array2<f64>,
    act: Array2<f64>,
}

/// Activations retained for the backward pass.
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    final_norm: NormCache,
    pub output: Array2<f64>,
}

fn layer_norm(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>, eps: f64) -> (Array2<f64>, NormCache) {
    let h = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, istd) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / h;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / h;
        *istd = 1.0 / (var + eps).sqrt();
        row.mapv_inplace(|v| v * *istd);
    }
    let out = &xhat * gain + bias;
    (out, NormCache { xhat, inv_std })
}

fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &NormCache,
    gain: &Array1<f64>,
    dgain: &mut Array1<f64>,
    dbias: &mut Array1<f64>,
) -> Array2<f64> {
    *dgain += &(dy * &cache.xhat).sum_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0));
    let h = dy.ncols() as f64;
    let mut dx = dy * gain;
    for ((mut row, xhat), istd) in dx
        .rows_mut()
        .into_iter()
        .zip(cache.xhat.rows())
        .zip(cache.inv_std.iter())
    {
        let mean_d = row.sum() / h;
        let mean_dx = row.iter().zip(xhat.iter()).map(|(a, b)| a * b).sum::<f64>() / h;
        for (d, xh) in row.iter_mut().zip(xhat.iter()) {
            *d = istd * (*d - mean_d - xh * mean_dx);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

fn add_row(mut m: Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    m += b;
    m
}

pub fn embed(config: &ScorerConfig, p: &ScorerParams, input: &EncoderInput) -> Array2<f64> {
    let n = input.regions.nrows();
    let h = config.hidden_dim;
    let mut x = Array2::zeros((input.seq_len(), h));
    let text_type = p.type_emb.row(0);
    let image_type = p.type_emb.row(1);
    x.row_mut(0)
        .assign(&(&p.token_emb.row(config.vocab.cls_id()) + &text_type));
    if n > 0 {
        let projected = add_row(input.regions.dot(&p.region_w), &p.region_b);
        x.slice_mut(s![1..1 + n, ..]).assign(&(projected + image_type));
    }
    for (pos, &id) in input.token_ids.iter().enumerate() {
        let row = &(&p.token_emb.row(id) + &p.position_emb.row(pos)) + &text_type;
        x.row_mut(1 + n + pos).assign(&row);
    }
    x
}

fn softmax_masked(scores: &mut Array2<f64>, mask: &[bool]) {
    for mut row in scores.rows_mut() {
        let mut max = f64::NEG_INFINITY;
        for (v, &m) in row.iter().zip(mask) {
            if m && *v > max {
                max = *v;
            }
        }
        let mut sum = 0.0;
        for (v, &m) in row.iter_mut().zip(mask) {
            *v = if m { (*v - max).exp() } else { 0.0 };
            sum += *v;
        }
        row.mapv_inplace(|v| v / sum);
    }
}

fn layer_forward(config: &ScorerConfig, l: &LayerParams, x: Array2<f64>, mask: &[bool]) -> (Array2<f64>, LayerCache) {
    let eps = config.layer_norm_eps;
    let dh = config.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();

    let (attn_in, norm1) = layer_norm(&x, &l.ln1_gain, &l.ln1_bias, eps);
    let q = add_row(attn_in.dot(&l.wq), &l.bq);
    let k = add_row(attn_in.dot(&l.wk), &l.bk);
    let v = add_row(attn_in.dot(&l.wv), &l.bv);
    let mut context = Array2::zeros(x.raw_dim());
    let mut probs = Vec::with_capacity(config.heads);
    for head in 0..config.heads {
        let cols = s![.., head * dh..(head + 1) * dh];
        let mut p = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        softmax_masked(&mut p, mask);
        context.slice_mut(cols).assign(&p.dot(&v.slice(cols)));
        probs.push(p);
    }
    let x_mid = x + add_row(context.dot(&l.wo), &l.bo);

    let (ffn_in, norm2) = layer_norm(&x_mid, &l.ln2_gain, &l.ln2_bias, eps);
    let pre_act = add_row(ffn_in.dot(&l.w1), &l.b1);
    let act = pre_act.mapv(gelu);
    let out = &x_mid + &add_row(act.dot(&l.w2), &l.b2);

    let cache = LayerCache {
        norm1,
        attn_in,
        q,
        k,
        v,
        probs,
        context,
        norm2,
        ffn_in,
        pre_act,
        act,
    };
    (out, cache)
}

/// Runs the encoder and returns the final hidden states with the cache.
pub fn forward(config: &ScorerConfig, p: &ScorerParams, input: &EncoderInput) -> ForwardCache {
    let mut x = embed(config, p, input);
    let mut layers = Vec::with_capacity(p.layers.len());
    for l in &p.layers {
        let (next, cache) = layer_forward(config, l, x, &input.key_mask);
        layers.push(cache);
        x = next;
    }
    let (output, final_norm) = layer_norm(&x, &p.final_gain, &p.final_bias, config.layer_norm_eps);
    ForwardCache {
        layers,
        final_norm,
        output,
    }
}

fn layer_backward(
    config: &ScorerConfig,
    l: &LayerParams,
    c: &LayerCache,
    dout: Array2<f64>,
    g: &mut LayerParams,
) -> Array2<f64> {
    let dh = config.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();

    // Feed-forward branch.
    g.w2 += &c.act.t().dot(&dout);
    g.b2 += &dout.sum_axis(Axis(0));
    let mut dpre = dout.dot(&l.w2.t());
    dpre.zip_mut_with(&c.pre_act, |d, &x| *d *= gelu_grad(x));
    g.w1 += &c.ffn_in.t().dot(&dpre);
    g.b1 += &dpre.sum_axis(Axis(0));
    let dffn_in = dpre.dot(&l.w1.t());
    let dx_mid = dout + layer_norm_backward(&dffn_in, &c.norm2, &l.ln2_gain, &mut g.ln2_gain, &mut g.ln2_bias);

    // Attention branch.
    g.wo += &c.context.t().dot(&dx_mid);
    g.bo += &dx_mid.sum_axis(Axis(0));
    let dcontext = dx_mid.dot(&l.wo.t());
    let mut dq = Array2::zeros(c.q.raw_dim());
    let mut dk = Array2::zeros(c.k.raw_dim());
    let mut dv = Array2::zeros(c.v.raw_dim());
    for (head, probs) in c.probs.iter().enumerate() {
        let cols = s![.., head * dh..(head + 1) * dh];
        let dctx = dcontext.slice(cols);
        dv.slice_mut(cols).assign(&probs.t().dot(&dctx));
        let dprobs = dctx.dot(&c.v.slice(cols).t());
        let mut dscores = &dprobs * probs;
        let row_dot = dscores.sum_axis(Axis(1));
        for ((mut ds, p), rd) in dscores.rows_mut().into_iter().zip(probs.rows()).zip(row_dot.iter()) {
            ds.zip_mut_with(&p, |d, &pv| *d -= pv * rd);
        }
        dscores *= scale;
        dq.slice_mut(cols).assign(&dscores.dot(&c.k.slice(cols)));
        dk.slice_mut(cols).assign(&dscores.t().dot(&c.q.slice(cols)));
    }
    g.wq += &c.attn_in.t().dot(&dq);
    g.bq += &dq.sum_axis(Axis(0));
    g.wk += &c.attn_in.t().dot(&dk);
    g.bk += &dk.sum_axis(Axis(0));
    g.wv += &c.attn_in.t().dot(&dv);
    g.bv += &dv.sum_axis(Axis(0));
    let dattn_in = dq.dot(&l.wq.t()) + dk.dot(&l.wk.t()) + dv.dot(&l.wv.t());
    dx_mid + layer_norm_backward(&dattn_in, &c.norm1, &l.ln1_gain, &mut g.ln1_gain, &mut g.ln1_bias)
}

/// Accumulates into `grads` the gradient of a loss whose derivative with
/// respect to the final hidden states is `doutput`.
pub fn backward(
    config: &ScorerConfig,
    p: &ScorerParams,
    input: &EncoderInput,
    cache: &ForwardCache,
    doutput: &Array2<f64>,
    grads: &mut ScorerParams,
) {
    let mut dx = layer_norm_backward(
        doutput,
        &cache.final_norm,
        &p.final_gain,
        &mut grads.final_gain,
        &mut grads.final_bias,
    );
    for ((l, c), g) in p.layers.iter().zip(&cache.layers).zip(grads.layers.iter_mut()).rev() {
        dx = layer_backward(config, l, c, dx, g);
    }

    let n = input.regions.nrows();
    {
        let row = dx.row(0);
        let cls = config.vocab.cls_id();
        let mut t = grads.token_emb.row_mut(cls);
        t += &row;
        let mut ty = grads.type_emb.row_mut(0);
        ty += &row;
    }
    if n > 0 {
        let dreg = dx.slice(s![1..1 + n, ..]);
        grads.region_w += &input.regions.t().dot(&dreg);
        grads.region_b += &dreg.sum_axis(Axis(0));
        let mut ty = grads.type_emb.row_mut(1);
        ty += &dreg.sum_axis(Axis(0));
    }
    for (pos, &id) in input.token_ids.iter().enumerate() {
        let row = dx.row(1 + n + pos);
        let mut t = grads.token_emb.row_mut(id);
        t += &row;
        let mut pe = grads.position_emb.row_mut(pos);
        pe += &row;
        let mut ty = grads.type_emb.row_mut(0);
        ty += &row;
    }
}
