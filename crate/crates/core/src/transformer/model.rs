//! Forward evaluation and hand-derived backward passes.

use crate::error::{Error, Result};
use crate::rng::SeededRng;

use super::math::{c, gelu, gelu_grad, softmax_inplace, Mat, Scalar};
use super::{EncoderLayerParams, LayerNormParams, LinearParams, MaskSpec, ModelConfig, ModelParameters};

const LN_EPS: f64 = 1e-5;

/// The model: config plus parameters in the working precision.
#[derive(Clone, Debug)]
pub struct Model<T: Scalar> {
    pub config: ModelConfig,
    pub params: ModelParameters<T>,
}

impl<T: Scalar> Model<T> {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = ModelParameters::init(&config, seed);
        Ok(Self { config, params })
    }

    pub fn new(config: ModelConfig, params: ModelParameters<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, params })
    }

    /// Convert a token sequence's f64 features into the working precision.
    pub fn tokens_to_mat(&self, features: &[[f64; 2]]) -> Mat<T> {
        let mut out = Mat::zeros(features.len(), 2);
        for (i, f) in features.iter().enumerate() {
            out.set(i, 0, c(f[0]));
            out.set(i, 1, c(f[1]));
        }
        out
    }

    /// Embed, mask, and run the encoder stack, retaining every intermediate
    /// needed by the backward pass. `dropout_rng` enables dropout.
    pub fn forward(
        &self,
        tokens: &Mat<T>,
        mask: &MaskSpec,
        mut dropout_rng: Option<&mut SeededRng>,
    ) -> ForwardCache<T> {
        let config = &self.config;
        let params = &self.params;
        assert_eq!(tokens.rows(), config.n_tokens);

        let mut masked = vec![false; config.n_tokens];
        for &i in mask.masked() {
            masked[i] = true;
        }
        let embedded = embed_with_mask(params, tokens, &masked);

        let mut layers = Vec::with_capacity(config.n_layers);
        let mut hidden = embedded.clone();
        for layer in &params.layers {
            let fwd = layer_forward(config, layer, &hidden, dropout_rng.as_deref_mut());
            hidden = fwd.output.clone();
            layers.push(fwd);
        }
        let (encoded, final_ln) = layer_norm_forward(&hidden, &params.final_norm);

        ForwardCache {
            tokens: tokens.clone(),
            masked,
            embedded,
            layers,
            final_ln,
            encoded,
            pooled: None,
            lse_weights: None,
            cls_pre: None,
            cls_act: None,
        }
    }

    /// Per-token linear decoder on the encoded states: (n_tokens, 2).
    pub fn reconstruct(&self, cache: &ForwardCache<T>) -> Mat<T> {
        self.params.decoder.apply(&cache.encoded)
    }

    /// Pool the encoded states (per-feature mean and logsumexp over tokens,
    /// concatenated) and apply the feed-forward head. The logsumexp half
    /// highlights peak activations, which separates the pure-state families;
    /// it is smooth, unlike a hard max, so gradients stay exact everywhere.
    pub fn classify(&self, cache: &mut ForwardCache<T>) -> [T; 2] {
        let d = self.config.embed_dim;
        let s = self.config.n_tokens;
        let encoded = &cache.encoded;

        let mut pooled = vec![T::zero(); 2 * d];
        let inv = c::<T>(1.0 / s as f64);
        for r in 0..s {
            for (p, &x) in pooled[..d].iter_mut().zip(encoded.row(r)) {
                *p += x * inv;
            }
        }
        // Row-wise softmax weights are kept for the backward pass.
        let mut lse_weights = Mat::zeros(s, d);
        for j in 0..d {
            let mut max = T::neg_infinity();
            for r in 0..s {
                max = max.max(encoded.get(r, j));
            }
            let mut sum = T::zero();
            for r in 0..s {
                let e = (encoded.get(r, j) - max).exp();
                lse_weights.set(r, j, e);
                sum += e;
            }
            for r in 0..s {
                let w = lse_weights.get(r, j) / sum;
                lse_weights.set(r, j, w);
            }
            pooled[d + j] = max + sum.ln();
        }

        let pre = apply_linear_vec(&self.params.cls_hidden, &pooled);
        let act: Vec<T> = pre.iter().map(|&x| gelu(x)).collect();
        let logits_vec = apply_linear_vec(&self.params.cls_out, &act);
        let logits = [logits_vec[0], logits_vec[1]];

        cache.pooled = Some(pooled);
        cache.lse_weights = Some(lse_weights);
        cache.cls_pre = Some(pre);
        cache.cls_act = Some(act);
        logits
    }

    /// Backpropagate a reconstruction gradient (n_tokens, 2) into `grads`.
    pub fn backward_reconstruction(
        &self,
        cache: &ForwardCache<T>,
        d_pred: &Mat<T>,
        grads: &mut ModelParameters<T>,
    ) {
        let d_encoded =
            linear_backward(&cache.encoded, d_pred, &self.params.decoder, &mut grads.decoder);
        self.backward_encoder(cache, d_encoded, grads);
    }

    /// Backpropagate a logits gradient into `grads`. When `through_encoder`
    /// is false (frozen-encoder probe) the pass stops after the classifier
    /// head; encoder and embedding gradients are withheld entirely.
    pub fn backward_classification(
        &self,
        cache: &ForwardCache<T>,
        d_logits: [T; 2],
        grads: &mut ModelParameters<T>,
        through_encoder: bool,
    ) {
        let act = cache.cls_act.as_ref().expect("classify() ran");
        let pre = cache.cls_pre.as_ref().expect("classify() ran");
        let pooled = cache.pooled.as_ref().expect("classify() ran");

        let d_act = linear_backward_vec(act, &d_logits, &self.params.cls_out, &mut grads.cls_out);
        let d_pre: Vec<T> = d_act
            .iter()
            .zip(pre)
            .map(|(&d, &x)| d * gelu_grad(x))
            .collect();
        let d_pooled =
            linear_backward_vec(pooled, &d_pre, &self.params.cls_hidden, &mut grads.cls_hidden);
        if !through_encoder {
            return;
        }

        let s = self.config.n_tokens;
        let d = self.config.embed_dim;
        let inv = c::<T>(1.0 / s as f64);
        let lse_weights = cache.lse_weights.as_ref().expect("classify() ran");
        let mut d_encoded = Mat::zeros(s, d);
        for r in 0..s {
            let weights = lse_weights.row(r);
            for (j, o) in d_encoded.row_mut(r).iter_mut().enumerate() {
                // Mean half spreads evenly; logsumexp half follows the
                // per-feature softmax over tokens.
                *o = d_pooled[j] * inv + d_pooled[d + j] * weights[j];
            }
        }
        self.backward_encoder(cache, d_encoded, grads);
    }

    fn backward_encoder(
        &self,
        cache: &ForwardCache<T>,
        d_encoded: Mat<T>,
        grads: &mut ModelParameters<T>,
    ) {
        let params = &self.params;
        let mut d_hidden = layer_norm_backward(
            &d_encoded,
            &cache.final_ln,
            &params.final_norm,
            &mut grads.final_norm,
        );
        for ((layer, fwd), grad_layer) in params
            .layers
            .iter()
            .zip(&cache.layers)
            .zip(grads.layers.iter_mut())
            .rev()
        {
            d_hidden = layer_backward(&self.config, layer, fwd, grad_layer, &d_hidden);
        }
        embed_backward(cache, &d_hidden, grads);
    }
}

/// Cached intermediates of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    tokens: Mat<T>,
    masked: Vec<bool>,
    embedded: Mat<T>,
    layers: Vec<LayerForward<T>>,
    final_ln: NormCache<T>,
    encoded: Mat<T>,
    pooled: Option<Vec<T>>,
    lse_weights: Option<Mat<T>>,
    cls_pre: Option<Vec<T>>,
    cls_act: Option<Vec<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Final encoder output (after the closing normalization).
    pub fn encoded(&self) -> &Mat<T> {
        &self.encoded
    }

    /// Post-embedding, post-masking input to the first encoder layer.
    pub fn embedded(&self) -> &Mat<T> {
        &self.embedded
    }

    /// Attention probabilities per layer, per head (rows sum to one).
    pub fn attention_weights(&self) -> Vec<Vec<&Mat<T>>> {
        self.layers
            .iter()
            .map(|l| l.attn.iter().collect())
            .collect()
    }
}

#[derive(Clone, Debug)]
struct NormCache<T> {
    xhat: Mat<T>,
    inv_std: Vec<T>,
}

#[derive(Clone, Debug)]
struct LayerForward<T> {
    ln1: NormCache<T>,
    normed1: Mat<T>,
    q: Mat<T>,
    k: Mat<T>,
    v: Mat<T>,
    attn: Vec<Mat<T>>,
    concat: Mat<T>,
    drop1: Option<Mat<T>>,
    ln2: NormCache<T>,
    normed2: Mat<T>,
    ffn_pre: Mat<T>,
    ffn_act: Mat<T>,
    drop2: Option<Mat<T>>,
    output: Mat<T>,
}

fn embed_with_mask<T: Scalar>(
    params: &ModelParameters<T>,
    tokens: &Mat<T>,
    masked: &[bool],
) -> Mat<T> {
    let mut out = params.token_embed.apply(tokens);
    for (r, &is_masked) in masked.iter().enumerate() {
        if is_masked {
            // Positional information survives masking.
            for (o, (&m, &p)) in out
                .row_mut(r)
                .iter_mut()
                .zip(params.mask_token.iter().zip(params.positional.row(r)))
            {
                *o = m + p;
            }
        } else {
            for (o, &p) in out.row_mut(r).iter_mut().zip(params.positional.row(r)) {
                *o += p;
            }
        }
    }
    out
}

fn embed_backward<T: Scalar>(
    cache: &ForwardCache<T>,
    d_embedded: &Mat<T>,
    grads: &mut ModelParameters<T>,
) {
    for r in 0..d_embedded.rows() {
        let row = d_embedded.row(r);
        for (g, &d) in grads.positional.row_mut(r).iter_mut().zip(row) {
            *g += d;
        }
        if cache.masked[r] {
            for (g, &d) in grads.mask_token.iter_mut().zip(row) {
                *g += d;
            }
        } else {
            let features = cache.tokens.row(r);
            for (f_idx, &f) in features.iter().enumerate() {
                for (g, &d) in grads.token_embed.weight.row_mut(f_idx).iter_mut().zip(row) {
                    *g += f * d;
                }
            }
            for (g, &d) in grads.token_embed.bias.iter_mut().zip(row) {
                *g += d;
            }
        }
    }
}

fn dropout_mask<T: Scalar>(rows: usize, cols: usize, p: f64, rng: &mut SeededRng) -> Mat<T> {
    let keep = 1.0 - p;
    let scale = c::<T>(1.0 / keep);
    let mut mask = Mat::zeros(rows, cols);
    for v in mask.data_mut() {
        if rng.uniform() < keep {
            *v = scale;
        }
    }
    mask
}

fn apply_dropout<T: Scalar>(x: &mut Mat<T>, mask: &Mat<T>) {
    for (v, &m) in x.data_mut().iter_mut().zip(mask.data()) {
        *v *= m;
    }
}

fn layer_forward<T: Scalar>(
    config: &ModelConfig,
    layer: &EncoderLayerParams<T>,
    input: &Mat<T>,
    mut dropout_rng: Option<&mut SeededRng>,
) -> LayerForward<T> {
    let s = config.n_tokens;
    let d = config.embed_dim;
    let dk = config.head_dim();
    let scale = c::<T>(1.0 / (dk as f64).sqrt());

    let (normed1, ln1) = layer_norm_forward(input, &layer.ln1);
    let q = layer.wq.apply(&normed1);
    let k = layer.wk.apply(&normed1);
    let v = layer.wv.apply(&normed1);

    let mut attn = Vec::with_capacity(config.n_heads);
    let mut concat = Mat::zeros(s, d);
    for h in 0..config.n_heads {
        let cols = h * dk..(h + 1) * dk;
        let q_h = extract_cols(&q, cols.clone());
        let k_h = extract_cols(&k, cols.clone());
        let v_h = extract_cols(&v, cols.clone());

        let mut scores = q_h.matmul_bt(&k_h);
        for val in scores.data_mut() {
            *val *= scale;
        }
        for r in 0..s {
            softmax_inplace(scores.row_mut(r));
        }
        let out_h = scores.matmul(&v_h);
        write_cols(&mut concat, cols, &out_h);
        attn.push(scores);
    }

    let mut proj = layer.wo.apply(&concat);
    let drop1 = dropout_rng.as_deref_mut().map(|rng| {
        let mask = dropout_mask(s, d, config.dropout, rng);
        apply_dropout(&mut proj, &mask);
        mask
    });
    let mut after_attn = input.clone();
    after_attn.add_assign(&proj);

    let (normed2, ln2) = layer_norm_forward(&after_attn, &layer.ln2);
    let ffn_pre = layer.ffn_in.apply(&normed2);
    let mut ffn_act = ffn_pre.clone();
    for v in ffn_act.data_mut() {
        *v = gelu(*v);
    }
    let mut ffn = layer.ffn_out.apply(&ffn_act);
    let drop2 = dropout_rng.map(|rng| {
        let mask = dropout_mask(s, d, config.dropout, rng);
        apply_dropout(&mut ffn, &mask);
        mask
    });
    let mut output = after_attn;
    output.add_assign(&ffn);

    LayerForward {
        ln1,
        normed1,
        q,
        k,
        v,
        attn,
        concat,
        drop1,
        ln2,
        normed2,
        ffn_pre,
        ffn_act,
        drop2,
        output,
    }
}

fn layer_backward<T: Scalar>(
    config: &ModelConfig,
    layer: &EncoderLayerParams<T>,
    fwd: &LayerForward<T>,
    grad: &mut EncoderLayerParams<T>,
    d_output: &Mat<T>,
) -> Mat<T> {
    let s = config.n_tokens;
    let d = config.embed_dim;
    let dk = config.head_dim();
    let scale = c::<T>(1.0 / (dk as f64).sqrt());

    // FFN branch: output = after_attn + drop2(ffn_out(gelu(ffn_in(normed2)))).
    let mut d_ffn = d_output.clone();
    if let Some(mask) = &fwd.drop2 {
        apply_dropout(&mut d_ffn, mask);
    }
    let mut d_pre = linear_backward(&fwd.ffn_act, &d_ffn, &layer.ffn_out, &mut grad.ffn_out);
    for (dp, &x) in d_pre.data_mut().iter_mut().zip(fwd.ffn_pre.data()) {
        *dp *= gelu_grad(x);
    }
    let d_normed2 = linear_backward(&fwd.normed2, &d_pre, &layer.ffn_in, &mut grad.ffn_in);
    let d_ln2_in = layer_norm_backward(&d_normed2, &fwd.ln2, &layer.ln2, &mut grad.ln2);
    let mut d_after_attn = d_output.clone();
    d_after_attn.add_assign(&d_ln2_in);

    // Attention branch: after_attn = input + drop1(wo(concat)).
    let mut d_proj = d_after_attn.clone();
    if let Some(mask) = &fwd.drop1 {
        apply_dropout(&mut d_proj, mask);
    }
    let d_concat = linear_backward(&fwd.concat, &d_proj, &layer.wo, &mut grad.wo);

    let mut d_q = Mat::zeros(s, d);
    let mut d_k = Mat::zeros(s, d);
    let mut d_v = Mat::zeros(s, d);
    for h in 0..config.n_heads {
        let cols = h * dk..(h + 1) * dk;
        let d_out_h = extract_cols(&d_concat, cols.clone());
        let q_h = extract_cols(&fwd.q, cols.clone());
        let k_h = extract_cols(&fwd.k, cols.clone());
        let v_h = extract_cols(&fwd.v, cols.clone());
        let attn = &fwd.attn[h];

        // out_h = attn @ v_h
        let d_attn = d_out_h.matmul_bt(&v_h);
        let mut d_v_h = Mat::zeros(s, dk);
        attn.matmul_at_into(&d_out_h, &mut d_v_h);

        // Softmax backward per row, then the 1/sqrt(dk) score scale.
        let mut d_scores = Mat::zeros(s, s);
        for r in 0..s {
            let a_row = attn.row(r);
            let da_row = d_attn.row(r);
            let mut dot = T::zero();
            for (&a, &da) in a_row.iter().zip(da_row) {
                dot += a * da;
            }
            for (o, (&a, &da)) in d_scores
                .row_mut(r)
                .iter_mut()
                .zip(a_row.iter().zip(da_row))
            {
                *o = a * (da - dot);
            }
        }
        for v in d_scores.data_mut() {
            *v *= scale;
        }

        // scores = q_h @ k_h^T (pre-scale handled above).
        let d_q_h = d_scores.matmul(&k_h);
        let mut d_k_h = Mat::zeros(s, dk);
        d_scores.matmul_at_into(&q_h, &mut d_k_h);

        add_cols(&mut d_q, cols.clone(), &d_q_h);
        add_cols(&mut d_k, cols.clone(), &d_k_h);
        add_cols(&mut d_v, cols, &d_v_h);
    }

    let mut d_normed1 = linear_backward(&fwd.normed1, &d_q, &layer.wq, &mut grad.wq);
    d_normed1.add_assign(&linear_backward(&fwd.normed1, &d_k, &layer.wk, &mut grad.wk));
    d_normed1.add_assign(&linear_backward(&fwd.normed1, &d_v, &layer.wv, &mut grad.wv));
    let d_ln1_in = layer_norm_backward(&d_normed1, &fwd.ln1, &layer.ln1, &mut grad.ln1);

    let mut d_input = d_after_attn;
    d_input.add_assign(&d_ln1_in);
    d_input
}

fn layer_norm_forward<T: Scalar>(x: &Mat<T>, ln: &LayerNormParams<T>) -> (Mat<T>, NormCache<T>) {
    let rows = x.rows();
    let cols = x.cols();
    let eps = c::<T>(LN_EPS);
    let inv_n = c::<T>(1.0 / cols as f64);

    let mut xhat = Mat::zeros(rows, cols);
    let mut out = Mat::zeros(rows, cols);
    let mut inv_stds = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = x.row(r);
        let mut mean = T::zero();
        for &v in row {
            mean += v;
        }
        mean *= inv_n;
        let mut var = T::zero();
        for &v in row {
            let d = v - mean;
            var += d * d;
        }
        var *= inv_n;
        let inv_std = (var + eps).sqrt().recip();
        inv_stds.push(inv_std);
        for (col, &v) in row.iter().enumerate() {
            let normalized = (v - mean) * inv_std;
            xhat.set(r, col, normalized);
            out.set(r, col, ln.gamma[col] * normalized + ln.beta[col]);
        }
    }
    (
        out,
        NormCache {
            xhat,
            inv_std: inv_stds,
        },
    )
}

fn layer_norm_backward<T: Scalar>(
    d_out: &Mat<T>,
    cache: &NormCache<T>,
    ln: &LayerNormParams<T>,
    grad: &mut LayerNormParams<T>,
) -> Mat<T> {
    let rows = d_out.rows();
    let cols = d_out.cols();
    let inv_n = c::<T>(1.0 / cols as f64);
    let mut dx = Mat::zeros(rows, cols);
    for r in 0..rows {
        let dy = d_out.row(r);
        let xhat = cache.xhat.row(r);
        for ((g_gamma, g_beta), (&d, &h)) in grad
            .gamma
            .iter_mut()
            .zip(grad.beta.iter_mut())
            .zip(dy.iter().zip(xhat))
        {
            *g_gamma += d * h;
            *g_beta += d;
        }
        let mut mean_dxhat = T::zero();
        let mut mean_dxhat_xhat = T::zero();
        for ((&d, &h), &g) in dy.iter().zip(xhat).zip(&ln.gamma) {
            let dxh = d * g;
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * h;
        }
        mean_dxhat *= inv_n;
        mean_dxhat_xhat *= inv_n;
        let inv_std = cache.inv_std[r];
        for (o, ((&d, &h), &g)) in dx
            .row_mut(r)
            .iter_mut()
            .zip(dy.iter().zip(xhat).zip(&ln.gamma))
        {
            let dxh = d * g;
            *o = (dxh - mean_dxhat - h * mean_dxhat_xhat) * inv_std;
        }
    }
    dx
}

fn extract_cols<T: Scalar>(m: &Mat<T>, cols: std::ops::Range<usize>) -> Mat<T> {
    let width = cols.len();
    let mut out = Mat::zeros(m.rows(), width);
    for r in 0..m.rows() {
        out.row_mut(r).copy_from_slice(&m.row(r)[cols.clone()]);
    }
    out
}

fn write_cols<T: Scalar>(target: &mut Mat<T>, cols: std::ops::Range<usize>, source: &Mat<T>) {
    for r in 0..target.rows() {
        target.row_mut(r)[cols.clone()].copy_from_slice(source.row(r));
    }
}

fn add_cols<T: Scalar>(target: &mut Mat<T>, cols: std::ops::Range<usize>, source: &Mat<T>) {
    for r in 0..target.rows() {
        for (t, &s) in target.row_mut(r)[cols.clone()].iter_mut().zip(source.row(r)) {
            *t += s;
        }
    }
}

/// dW += x^T dy; db += column sums of dy; returns dx = dy W^T.
fn linear_backward<T: Scalar>(
    x: &Mat<T>,
    dy: &Mat<T>,
    lin: &LinearParams<T>,
    grad: &mut LinearParams<T>,
) -> Mat<T> {
    x.matmul_at_into(dy, &mut grad.weight);
    for r in 0..dy.rows() {
        for (g, &d) in grad.bias.iter_mut().zip(dy.row(r)) {
            *g += d;
        }
    }
    dy.matmul_bt(&lin.weight)
}

fn apply_linear_vec<T: Scalar>(lin: &LinearParams<T>, x: &[T]) -> Vec<T> {
    let mut out = lin.bias.clone();
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(lin.weight.row(i)) {
            *o += xi * w;
        }
    }
    out
}

fn linear_backward_vec<T: Scalar>(
    x: &[T],
    dy: &[T],
    lin: &LinearParams<T>,
    grad: &mut LinearParams<T>,
) -> Vec<T> {
    for (i, &xi) in x.iter().enumerate() {
        for (g, &d) in grad.weight.row_mut(i).iter_mut().zip(dy) {
            *g += xi * d;
        }
    }
    for (g, &d) in grad.bias.iter_mut().zip(dy) {
        *g += d;
    }
    let mut dx = vec![T::zero(); x.len()];
    for (i, o) in dx.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (&d, &w) in dy.iter().zip(lin.weight.row(i)) {
            acc += d * w;
        }
        *o = acc;
    }
    dx
}

/// Mean squared error over every output entry.
pub fn loss_mse<T: Scalar>(pred: &Mat<T>, target: &Mat<T>) -> T {
    assert_eq!(pred.rows(), target.rows());
    assert_eq!(pred.cols(), target.cols());
    let mut sum = T::zero();
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = p - t;
        sum += d * d;
    }
    sum / c(pred.data().len() as f64)
}

/// Cross-entropy of a two-class logit pair.
pub fn loss_ce<T: Scalar>(logits: [T; 2], label: u8) -> T {
    let max = logits[0].max(logits[1]);
    let lse = max + ((logits[0] - max).exp() + (logits[1] - max).exp()).ln();
    lse - logits[label as usize]
}

/// Softmax minus one-hot: the logits gradient of [`loss_ce`].
pub fn d_loss_ce<T: Scalar>(logits: [T; 2], label: u8) -> [T; 2] {
    let max = logits[0].max(logits[1]);
    let e0 = (logits[0] - max).exp();
    let e1 = (logits[1] - max).exp();
    let sum = e0 + e1;
    let mut d = [e0 / sum, e1 / sum];
    d[label as usize] -= T::one();
    d
}

/// Which loss drives a gradient computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// Full reconstruction loss against the unmasked token features.
    Mse,
    /// Binary cross-entropy against the record label.
    CrossEntropy,
}

/// One sample of a gradient batch.
#[derive(Clone, Debug)]
pub struct BatchItem {
    pub features: Vec<[f64; 2]>,
    pub mask: MaskSpec,
    pub label: u8,
}

/// Mean loss over the batch and exact gradients for every trainable tensor.
/// Dropout is inactive here; this is the contract checked against central
/// finite differences.
pub fn gradients<T: Scalar>(
    model: &Model<T>,
    batch: &[BatchItem],
    kind: LossKind,
) -> Result<(T, ModelParameters<T>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut grads = ModelParameters::zeros(&model.config);
    let inv_batch = c::<T>(1.0 / batch.len() as f64);
    let mut total = T::zero();
    for item in batch {
        let tokens = model.tokens_to_mat(&item.features);
        match kind {
            LossKind::Mse => {
                let cache = model.forward(&tokens, &item.mask, None);
                let pred = model.reconstruct(&cache);
                let loss = loss_mse(&pred, &tokens);
                total += loss * inv_batch;
                let scale = c::<T>(2.0 / pred.data().len() as f64) * inv_batch;
                let mut d_pred = Mat::zeros(pred.rows(), pred.cols());
                for ((d, &p), &t) in d_pred
                    .data_mut()
                    .iter_mut()
                    .zip(pred.data())
                    .zip(tokens.data())
                {
                    *d = (p - t) * scale;
                }
                model.backward_reconstruction(&cache, &d_pred, &mut grads);
            }
            LossKind::CrossEntropy => {
                let mut cache = model.forward(&tokens, &MaskSpec::empty(), None);
                let logits = model.classify(&mut cache);
                total += loss_ce(logits, item.label) * inv_batch;
                let mut d_logits = d_loss_ce(logits, item.label);
                d_logits[0] *= inv_batch;
                d_logits[1] *= inv_batch;
                model.backward_classification(&cache, d_logits, &mut grads, true);
            }
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: 0, batch: 0 });
    }
    Ok((total, grads))
}

/// Contract surface: embedding without masking.
pub fn embed<T: Scalar>(params: &ModelParameters<T>, tokens: &Mat<T>) -> Mat<T> {
    embed_with_mask(params, tokens, &vec![false; tokens.rows()])
}

/// Contract surface: embedding with masked rows replaced by
/// mask_token + positional.
pub fn apply_mask<T: Scalar>(
    params: &ModelParameters<T>,
    tokens: &Mat<T>,
    mask: &MaskSpec,
) -> Mat<T> {
    let mut masked = vec![false; tokens.rows()];
    for &i in mask.masked() {
        masked[i] = true;
    }
    embed_with_mask(params, tokens, &masked)
}

/// Contract surface: run the encoder stack (and closing normalization) on
/// already-embedded hidden states. Returns the output and the attention
/// probabilities per layer and head.
pub fn encoder_forward<T: Scalar>(
    config: &ModelConfig,
    params: &ModelParameters<T>,
    hidden: &Mat<T>,
    mut dropout_rng: Option<&mut SeededRng>,
) -> (Mat<T>, Vec<Vec<Mat<T>>>) {
    let mut state = hidden.clone();
    let mut attention = Vec::new();
    for layer in &params.layers {
        let fwd = layer_forward(config, layer, &state, dropout_rng.as_deref_mut());
        state = fwd.output;
        attention.push(fwd.attn);
    }
    let (out, _) = layer_norm_forward(&state, &params.final_norm);
    (out, attention)
}
