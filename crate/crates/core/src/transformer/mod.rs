//! Masked transformer for quantum-state reconstruction and classification.
//!
//! Tokens are matrix entries (two real features each). Embedded tokens get
//! trainable positional vectors; masked positions are replaced by a learned
//! mask token (positional vectors survive masking). A pre-norm encoder stack
//! feeds either a linear per-token decoder (reconstruction) or a mean-pooled
//! feed-forward head (two-class logits). Backward passes are hand-derived
//! and checked against central finite differences in the test suite.

pub mod checkpoint;
pub mod math;
pub mod model;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use math::{c, Mat, Scalar};

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use model::{
    apply_mask, embed, encoder_forward, gradients, loss_ce, loss_mse, BatchItem, ForwardCache,
    LossKind, Model,
};

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Sequence length N^2 (one token per matrix entry).
    pub n_tokens: usize,
    pub embed_dim: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub ffn_dim: usize,
    pub dropout: f64,
    pub mask_fraction: f64,
}

impl ModelConfig {
    /// Desk-scale defaults; one code path serves every matrix side via
    /// `n_tokens` alone.
    pub fn desk_default(n_tokens: usize) -> Self {
        Self {
            n_tokens,
            embed_dim: 64,
            n_heads: 4,
            n_layers: 4,
            ffn_dim: 256,
            dropout: 0.1,
            mask_fraction: 0.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tokens == 0 || self.embed_dim == 0 || self.n_heads == 0 || self.ffn_dim == 0 {
            return Err(Error::InvalidConfig(
                "model dimensions must be positive".into(),
            ));
        }
        if !self.embed_dim.is_multiple_of(self.n_heads) {
            return Err(Error::InvalidConfig(format!(
                "embed_dim {} not divisible by n_heads {}",
                self.embed_dim, self.n_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig("dropout must be in [0, 1)".into()));
        }
        if !(0.0 < self.mask_fraction && self.mask_fraction < 1.0) {
            return Err(Error::InvalidConfig("mask_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.n_heads
    }

    /// Masked positions per sequence: round(fraction * n_tokens), at least 1.
    pub fn masked_count(&self) -> usize {
        ((self.mask_fraction * self.n_tokens as f64).round() as usize).max(1)
    }
}

/// Token positions hidden during masked pretraining.
#[derive(Clone, Debug)]
pub struct MaskSpec {
    masked: Vec<usize>,
    seed: u64,
}

impl MaskSpec {
    /// Empty mask: evaluation / fine-tuning mode.
    pub fn empty() -> Self {
        Self {
            masked: Vec::new(),
            seed: 0,
        }
    }

    pub fn from_indices(masked: Vec<usize>, seed: u64) -> Self {
        Self { masked, seed }
    }

    /// Sample `config.masked_count()` distinct positions.
    pub fn sample(config: &ModelConfig, rng: &mut SeededRng) -> Self {
        let masked = rng.sample_indices(config.n_tokens, config.masked_count());
        Self {
            masked,
            seed: rng.seed(),
        }
    }

    pub fn masked(&self) -> &[usize] {
        &self.masked
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_empty(&self) -> bool {
        self.masked.is_empty()
    }
}

/// Affine map y = x W + b with W stored (in, out).
#[derive(Clone, Debug)]
pub struct LinearParams<T> {
    pub weight: Mat<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearParams<T> {
    fn init(inputs: usize, outputs: usize, rng: &mut SeededRng) -> Self {
        let std = (1.0 / inputs as f64).sqrt();
        let data = (0..inputs * outputs)
            .map(|_| c::<T>(rng.normal() * std))
            .collect();
        Self {
            weight: Mat::from_vec(inputs, outputs, data),
            bias: vec![T::zero(); outputs],
        }
    }

    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Mat::zeros(inputs, outputs),
            bias: vec![T::zero(); outputs],
        }
    }

    /// y = x W + b applied row-wise.
    pub fn apply(&self, x: &Mat<T>) -> Mat<T> {
        let mut y = x.matmul(&self.weight);
        for r in 0..y.rows() {
            for (v, &b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        y
    }
}

#[derive(Clone, Debug)]
pub struct LayerNormParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Scalar> LayerNormParams<T> {
    fn init(dim: usize) -> Self {
        Self {
            gamma: vec![T::one(); dim],
            beta: vec![T::zero(); dim],
        }
    }

    fn zeros(dim: usize) -> Self {
        Self {
            gamma: vec![T::zero(); dim],
            beta: vec![T::zero(); dim],
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncoderLayerParams<T> {
    pub ln1: LayerNormParams<T>,
    pub wq: LinearParams<T>,
    pub wk: LinearParams<T>,
    pub wv: LinearParams<T>,
    pub wo: LinearParams<T>,
    pub ln2: LayerNormParams<T>,
    pub ffn_in: LinearParams<T>,
    pub ffn_out: LinearParams<T>,
}

/// Every trainable tensor of the model.
#[derive(Clone, Debug)]
pub struct ModelParameters<T> {
    pub token_embed: LinearParams<T>,
    pub positional: Mat<T>,
    pub mask_token: Vec<T>,
    pub layers: Vec<EncoderLayerParams<T>>,
    pub final_norm: LayerNormParams<T>,
    pub decoder: LinearParams<T>,
    pub cls_hidden: LinearParams<T>,
    pub cls_out: LinearParams<T>,
}

/// Tensors whose names start with this prefix form the classification head;
/// the frozen-encoder probe updates only these.
pub const CLASSIFIER_PREFIX: &str = "cls";

impl<T: Scalar> ModelParameters<T> {
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let d = config.embed_dim;
        let positional_data = (0..config.n_tokens * d)
            .map(|_| c::<T>(rng.normal() * 0.02))
            .collect();
        let mask_token = (0..d).map(|_| c::<T>(rng.normal() * 0.02)).collect();
        let layers = (0..config.n_layers)
            .map(|_| EncoderLayerParams {
                ln1: LayerNormParams::init(d),
                wq: LinearParams::init(d, d, &mut rng),
                wk: LinearParams::init(d, d, &mut rng),
                wv: LinearParams::init(d, d, &mut rng),
                wo: LinearParams::init(d, d, &mut rng),
                ln2: LayerNormParams::init(d),
                ffn_in: LinearParams::init(d, config.ffn_dim, &mut rng),
                ffn_out: LinearParams::init(config.ffn_dim, d, &mut rng),
            })
            .collect();
        Self {
            token_embed: LinearParams::init(2, d, &mut rng),
            positional: Mat::from_vec(config.n_tokens, d, positional_data),
            mask_token,
            layers,
            final_norm: LayerNormParams::init(d),
            decoder: LinearParams::init(d, 2, &mut rng),
            // The head consumes mean- and logsumexp-pooled features.
            cls_hidden: LinearParams::init(2 * d, d, &mut rng),
            cls_out: LinearParams::init(d, 2, &mut rng),
        }
    }

    /// Zeroed parameters with the same shapes (gradient / optimizer buffers).
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.embed_dim;
        let layers = (0..config.n_layers)
            .map(|_| EncoderLayerParams {
                ln1: LayerNormParams::zeros(d),
                wq: LinearParams::zeros(d, d),
                wk: LinearParams::zeros(d, d),
                wv: LinearParams::zeros(d, d),
                wo: LinearParams::zeros(d, d),
                ln2: LayerNormParams::zeros(d),
                ffn_in: LinearParams::zeros(d, config.ffn_dim),
                ffn_out: LinearParams::zeros(config.ffn_dim, d),
            })
            .collect();
        Self {
            token_embed: LinearParams::zeros(2, d),
            positional: Mat::zeros(config.n_tokens, d),
            mask_token: vec![T::zero(); d],
            layers,
            final_norm: LayerNormParams::zeros(d),
            decoder: LinearParams::zeros(d, 2),
            cls_hidden: LinearParams::zeros(2 * d, d),
            cls_out: LinearParams::zeros(d, 2),
        }
    }

    /// All tensors in declaration order (the checkpoint layout).
    pub fn tensors(&self) -> Vec<(String, &[T])> {
        let mut out: Vec<(String, &[T])> = vec![
            ("token_embed.weight".into(), self.token_embed.weight.data()),
            ("token_embed.bias".into(), self.token_embed.bias.as_slice()),
            ("positional".into(), self.positional.data()),
            ("mask_token".into(), self.mask_token.as_slice()),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            let p = |name: &str| format!("layer{i}.{name}");
            out.push((p("ln1.gamma"), layer.ln1.gamma.as_slice()));
            out.push((p("ln1.beta"), layer.ln1.beta.as_slice()));
            out.push((p("wq.weight"), layer.wq.weight.data()));
            out.push((p("wq.bias"), layer.wq.bias.as_slice()));
            out.push((p("wk.weight"), layer.wk.weight.data()));
            out.push((p("wk.bias"), layer.wk.bias.as_slice()));
            out.push((p("wv.weight"), layer.wv.weight.data()));
            out.push((p("wv.bias"), layer.wv.bias.as_slice()));
            out.push((p("wo.weight"), layer.wo.weight.data()));
            out.push((p("wo.bias"), layer.wo.bias.as_slice()));
            out.push((p("ln2.gamma"), layer.ln2.gamma.as_slice()));
            out.push((p("ln2.beta"), layer.ln2.beta.as_slice()));
            out.push((p("ffn_in.weight"), layer.ffn_in.weight.data()));
            out.push((p("ffn_in.bias"), layer.ffn_in.bias.as_slice()));
            out.push((p("ffn_out.weight"), layer.ffn_out.weight.data()));
            out.push((p("ffn_out.bias"), layer.ffn_out.bias.as_slice()));
        }
        out.push(("final_norm.gamma".into(), self.final_norm.gamma.as_slice()));
        out.push(("final_norm.beta".into(), self.final_norm.beta.as_slice()));
        out.push(("decoder.weight".into(), self.decoder.weight.data()));
        out.push(("decoder.bias".into(), self.decoder.bias.as_slice()));
        out.push(("cls_hidden.weight".into(), self.cls_hidden.weight.data()));
        out.push(("cls_hidden.bias".into(), self.cls_hidden.bias.as_slice()));
        out.push(("cls_out.weight".into(), self.cls_out.weight.data()));
        out.push(("cls_out.bias".into(), self.cls_out.bias.as_slice()));
        out
    }

    /// Mutable view of all tensors, same order as [`Self::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [T])> {
        let mut out: Vec<(String, &mut [T])> = vec![
            (
                "token_embed.weight".into(),
                self.token_embed.weight.data_mut(),
            ),
            (
                "token_embed.bias".into(),
                self.token_embed.bias.as_mut_slice(),
            ),
            ("positional".into(), self.positional.data_mut()),
            ("mask_token".into(), self.mask_token.as_mut_slice()),
        ];
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let p = |name: &str| format!("layer{i}.{name}");
            out.push((p("ln1.gamma"), layer.ln1.gamma.as_mut_slice()));
            out.push((p("ln1.beta"), layer.ln1.beta.as_mut_slice()));
            out.push((p("wq.weight"), layer.wq.weight.data_mut()));
            out.push((p("wq.bias"), layer.wq.bias.as_mut_slice()));
            out.push((p("wk.weight"), layer.wk.weight.data_mut()));
            out.push((p("wk.bias"), layer.wk.bias.as_mut_slice()));
            out.push((p("wv.weight"), layer.wv.weight.data_mut()));
            out.push((p("wv.bias"), layer.wv.bias.as_mut_slice()));
            out.push((p("wo.weight"), layer.wo.weight.data_mut()));
            out.push((p("wo.bias"), layer.wo.bias.as_mut_slice()));
            out.push((p("ln2.gamma"), layer.ln2.gamma.as_mut_slice()));
            out.push((p("ln2.beta"), layer.ln2.beta.as_mut_slice()));
            out.push((p("ffn_in.weight"), layer.ffn_in.weight.data_mut()));
            out.push((p("ffn_in.bias"), layer.ffn_in.bias.as_mut_slice()));
            out.push((p("ffn_out.weight"), layer.ffn_out.weight.data_mut()));
            out.push((p("ffn_out.bias"), layer.ffn_out.bias.as_mut_slice()));
        }
        out.push((
            "final_norm.gamma".into(),
            self.final_norm.gamma.as_mut_slice(),
        ));
        out.push((
            "final_norm.beta".into(),
            self.final_norm.beta.as_mut_slice(),
        ));
        out.push(("decoder.weight".into(), self.decoder.weight.data_mut()));
        out.push(("decoder.bias".into(), self.decoder.bias.as_mut_slice()));
        out.push((
            "cls_hidden.weight".into(),
            self.cls_hidden.weight.data_mut(),
        ));
        out.push((
            "cls_hidden.bias".into(),
            self.cls_hidden.bias.as_mut_slice(),
        ));
        out.push(("cls_out.weight".into(), self.cls_out.weight.data_mut()));
        out.push(("cls_out.bias".into(), self.cls_out.bias.as_mut_slice()));
        out
    }

    /// Accumulate `other` into `self` tensor-by-tensor.
    pub fn accumulate(&mut self, other: &Self) {
        let theirs = other.tensors();
        for ((_, mine), (_, other)) in self.tensors_mut().into_iter().zip(theirs) {
            for (a, &b) in mine.iter_mut().zip(other) {
                *a += b;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, data)| data.iter().all(|x| x.is_finite()))
    }

    /// Convert precision (used when loading f64 checkpoints into f32 models).
    pub fn cast<U: Scalar>(&self, config: &ModelConfig) -> ModelParameters<U> {
        let mut out = ModelParameters::<U>::zeros(config);
        let source = self.tensors();
        for ((_, dst), (_, src)) in out.tensors_mut().into_iter().zip(source) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = U::from_f64(s.to_f64().expect("finite parameter")).expect("representable");
            }
        }
        out
    }
}
