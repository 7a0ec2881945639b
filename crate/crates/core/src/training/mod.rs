//! Pretraining, classifier fine-tuning, the frozen-encoder probe, and
//! per-group evaluation.

pub mod eval;

use std::path::Path;

use crate::dataset::{decode_tokens, encode_state, load_records, Split, TokenSequence};
use crate::error::{Error, Result};
use crate::quantum::{hermitian_distance, BipartiteDims};
use crate::rng::{derive_seed, SeededRng};
use crate::sampler::StateGroup;
use crate::transformer::math::{c, Mat};
use crate::transformer::model::{d_loss_ce, loss_ce, loss_mse};
use crate::transformer::{MaskSpec, Model, ModelConfig, ModelParameters, CLASSIFIER_PREFIX};

pub use eval::{evaluate, Confusion, EvalMode, EvalReport, GroupMetrics};

/// Cosine-annealing learning rate:
/// lr_min + (lr_max - lr_min) * (1 + cos(pi * step / total)) / 2.
pub fn cosine_lr(step: usize, total_steps: usize, lr_max: f64, lr_min: f64) -> f64 {
    assert!(step <= total_steps, "step {step} beyond total {total_steps}");
    if total_steps == 0 {
        return lr_min;
    }
    let progress = step as f64 / total_steps as f64;
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (std::f64::consts::PI * progress).cos())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    SgdMomentum,
}

impl OptimizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::SgdMomentum => "sgd-momentum",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd-momentum" => Ok(OptimizerKind::SgdMomentum),
            _ => Err(Error::InvalidConfig(format!("unknown optimizer '{name}'"))),
        }
    }
}

/// Training-run configuration.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    pub seed: u64,
    /// Recorded in reports; runs are bitwise deterministic for a fixed seed
    /// either way (single-writer updates, fixed reduction order).
    pub deterministic: bool,
    /// Probe mode: only classifier-head tensors receive updates.
    pub freeze_encoder: bool,
    pub optimizer: OptimizerKind,
}

impl TrainConfig {
    pub fn desk_pretrain(seed: u64) -> Self {
        Self {
            epochs: 20,
            batch_size: 256,
            lr_max: 3e-4,
            lr_min: 1e-6,
            seed,
            deterministic: true,
            freeze_encoder: false,
            optimizer: OptimizerKind::Adam,
        }
    }

    pub fn desk_finetune(seed: u64) -> Self {
        Self {
            epochs: 10,
            ..Self::desk_pretrain(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs and batch_size must be >= 1".into(),
            ));
        }
        if self.lr_min.is_nan() || self.lr_max.is_nan() || self.lr_min > self.lr_max || self.lr_min < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning rates must satisfy 0 <= lr_min <= lr_max, got {} / {}",
                self.lr_min, self.lr_max
            )));
        }
        Ok(())
    }

    pub fn config_lines(&self) -> Vec<(String, String)> {
        vec![
            ("epochs".into(), self.epochs.to_string()),
            ("batch_size".into(), self.batch_size.to_string()),
            ("lr_max".into(), format!("{:e}", self.lr_max)),
            ("lr_min".into(), format!("{:e}", self.lr_min)),
            ("train_seed".into(), self.seed.to_string()),
            ("deterministic".into(), self.deterministic.to_string()),
            ("freeze_encoder".into(), self.freeze_encoder.to_string()),
            ("optimizer".into(), self.optimizer.name().to_string()),
        ]
    }
}

/// One encoded sample of a loaded corpus.
#[derive(Clone, Debug)]
pub struct Sample {
    pub features: Vec<[f64; 2]>,
    pub label: u8,
    pub group: StateGroup,
    pub split: Split,
}

/// A corpus loaded into memory and encoded into token sequences.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub dims: BipartiteDims,
    pub master_seed: u64,
    pub task: crate::dataset::Task,
    pub samples: Vec<Sample>,
}

impl Corpus {
    pub fn n_tokens(&self) -> usize {
        self.dims.n() * self.dims.n()
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn groups(&self) -> Vec<StateGroup> {
        let mut groups: Vec<StateGroup> = Vec::new();
        for s in &self.samples {
            if !groups.contains(&s.group) {
                groups.push(s.group);
            }
        }
        groups
    }
}

/// Load a manifest's shards and encode every record.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus> {
    let (manifest, records) = load_records(manifest_path)?;
    let samples = records
        .into_iter()
        .map(|entry| Sample {
            features: encode_state(&entry.record.rho).features().to_vec(),
            label: entry.record.label,
            group: entry.record.group,
            split: entry.split,
        })
        .collect();
    Ok(Corpus {
        dims: manifest.dims,
        master_seed: manifest.master_seed,
        task: manifest.task,
        samples,
    })
}

struct Optimizer {
    kind: OptimizerKind,
    first_moment: ModelParameters<f32>,
    second_moment: ModelParameters<f32>,
    step_count: usize,
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    const MOMENTUM: f64 = 0.9;

    fn new(kind: OptimizerKind, config: &ModelConfig) -> Self {
        Self {
            kind,
            first_moment: ModelParameters::zeros(config),
            second_moment: ModelParameters::zeros(config),
            step_count: 0,
        }
    }

    fn step(
        &mut self,
        params: &mut ModelParameters<f32>,
        grads: &ModelParameters<f32>,
        lr: f64,
        freeze_encoder: bool,
    ) {
        self.step_count += 1;
        let grad_tensors = grads.tensors();
        let m_tensors = self.first_moment.tensors_mut();
        let mut v_tensors = self.second_moment.tensors_mut();
        for (((name, param), (_, grad)), ((_, m), (_, v))) in params
            .tensors_mut()
            .into_iter()
            .zip(grad_tensors)
            .zip(m_tensors.into_iter().zip(v_tensors.iter_mut()))
        {
            if freeze_encoder && !name.starts_with(CLASSIFIER_PREFIX) {
                continue;
            }
            match self.kind {
                OptimizerKind::Adam => {
                    let beta1 = Self::BETA1 as f32;
                    let beta2 = Self::BETA2 as f32;
                    let bias1 = 1.0 - Self::BETA1.powi(self.step_count as i32);
                    let bias2 = 1.0 - Self::BETA2.powi(self.step_count as i32);
                    let lr_t = (lr / bias1) as f32;
                    let bias2_sqrt_inv = (1.0 / bias2.sqrt()) as f32;
                    let eps = Self::EPS as f32;
                    for ((p, &g), (mi, vi)) in param
                        .iter_mut()
                        .zip(grad.iter())
                        .zip(m.iter_mut().zip(v.iter_mut()))
                    {
                        *mi = beta1 * *mi + (1.0 - beta1) * g;
                        *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                        *p -= lr_t * *mi / ((*vi).sqrt() * bias2_sqrt_inv + eps);
                    }
                }
                OptimizerKind::SgdMomentum => {
                    let momentum = Self::MOMENTUM as f32;
                    let lr = lr as f32;
                    for ((p, &g), mi) in param.iter_mut().zip(grad.iter()).zip(m.iter_mut()) {
                        *mi = momentum * *mi + g;
                        *p -= lr * *mi;
                    }
                }
            }
        }
    }
}

/// Per-epoch training diagnostics.
#[derive(Clone, Debug)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Hermitian distance of masked reconstructions on the validation split
    /// (reconstruction runs only; NaN-free zero for classifier runs).
    pub val_hermitian_distance: Option<f64>,
    /// Validation accuracy (classifier runs only).
    pub val_accuracy: Option<f64>,
}

/// A finished training run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: Model<f32>,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
    pub report: EvalReport,
}

fn features_mat(model: &Model<f32>, sample: &Sample) -> Mat<f32> {
    model.tokens_to_mat(&sample.features)
}

fn check_corpus_model(corpus: &Corpus, config: &ModelConfig) -> Result<()> {
    if corpus.n_tokens() != config.n_tokens {
        return Err(Error::ArtifactMismatch(format!(
            "corpus has {} tokens per state (dims {}), model expects {}",
            corpus.n_tokens(),
            corpus.dims,
            config.n_tokens
        )));
    }
    Ok(())
}

/// Reconstruction metrics of one split: (mse, hermitian distance), with a
/// fresh deterministic mask per sample.
fn reconstruction_metrics(
    model: &Model<f32>,
    corpus: &Corpus,
    indices: &[usize],
    mask_seed: u64,
) -> (f64, f64) {
    let n = corpus.dims.n();
    let mut total_mse = 0.0f64;
    let mut decoded = Vec::with_capacity(indices.len());
    for (order, &idx) in indices.iter().enumerate() {
        let sample = &corpus.samples[idx];
        let mut mask_rng = SeededRng::new(derive_seed(mask_seed, &[order as u64]));
        let mask = MaskSpec::sample(&model.config, &mut mask_rng);
        let tokens = features_mat(model, sample);
        let cache = model.forward(&tokens, &mask, None);
        let pred = model.reconstruct(&cache);
        total_mse += loss_mse(&pred, &tokens) as f64;
        let features: Vec<[f64; 2]> = (0..pred.rows())
            .map(|r| [pred.get(r, 0) as f64, pred.get(r, 1) as f64])
            .collect();
        let matrix = decode_tokens(&TokenSequence::new(features), n)
            .expect("prediction shape matches corpus side");
        decoded.push(matrix);
    }
    let mse = total_mse / indices.len().max(1) as f64;
    let hdist = if decoded.is_empty() {
        0.0
    } else {
        hermitian_distance(&decoded).expect("nonempty batch")
    };
    (mse, hdist)
}

fn classification_metrics(
    model: &Model<f32>,
    corpus: &Corpus,
    indices: &[usize],
) -> (f64, f64, Confusion) {
    let mut total_ce = 0.0f64;
    let mut correct = 0usize;
    let mut confusion = Confusion::default();
    for &idx in indices {
        let sample = &corpus.samples[idx];
        let tokens = features_mat(model, sample);
        let mut cache = model.forward(&tokens, &MaskSpec::empty(), None);
        let logits = model.classify(&mut cache);
        total_ce += loss_ce(logits, sample.label) as f64;
        let predicted = (logits[1] > logits[0]) as u8;
        if predicted == sample.label {
            correct += 1;
        }
        confusion.record(sample.label, predicted);
    }
    let count = indices.len().max(1) as f64;
    (total_ce / count, correct as f64 / count, confusion)
}

enum Objective {
    Reconstruction,
    Classification,
}

/// Shared epoch loop for both objectives.
fn train_model(
    corpus: &Corpus,
    mut model: Model<f32>,
    train: &TrainConfig,
    objective: Objective,
) -> Result<(Model<f32>, usize, Vec<EpochStats>)> {
    train.validate()?;
    check_corpus_model(corpus, &model.config)?;

    let mut train_indices = corpus.indices_of(Split::Train);
    let val_indices = corpus.indices_of(Split::Val);
    if train_indices.is_empty() {
        return Err(Error::InvalidConfig(
            "corpus has no training-split records".into(),
        ));
    }

    let mut shuffle_rng = SeededRng::new(derive_seed(train.seed, &[1]));
    let mut mask_rng = SeededRng::new(derive_seed(train.seed, &[2]));
    let mut dropout_rng = SeededRng::new(derive_seed(train.seed, &[3]));
    let val_mask_seed = derive_seed(train.seed, &[4]);

    // Dropout is active only while the full network trains; the frozen
    // probe treats the encoder as a fixed feature extractor.
    let dropout_active = model.config.dropout > 0.0 && !train.freeze_encoder;

    let steps_per_epoch = train_indices.len().div_ceil(train.batch_size);
    let total_steps = train.epochs * steps_per_epoch;
    let mut optimizer = Optimizer::new(train.optimizer, &model.config);

    let mut history = Vec::with_capacity(train.epochs);
    let mut best: Option<(f64, usize, ModelParameters<f32>)> = None;
    let mut step = 0usize;

    for epoch in 0..train.epochs {
        shuffle_rng.shuffle(&mut train_indices);
        let mut epoch_loss = 0.0f64;
        let mut epoch_samples = 0usize;

        for (batch_index, batch) in train_indices.chunks(train.batch_size).enumerate() {
            let mut grads = ModelParameters::zeros(&model.config);
            let inv_batch = c::<f32>(1.0 / batch.len() as f64);
            let mut batch_loss = 0.0f64;
            for &idx in batch {
                let sample = &corpus.samples[idx];
                let tokens = features_mat(&model, sample);
                let rng = dropout_active.then_some(&mut dropout_rng);
                match objective {
                    Objective::Reconstruction => {
                        let mask = MaskSpec::sample(&model.config, &mut mask_rng);
                        let cache = model.forward(&tokens, &mask, rng);
                        let pred = model.reconstruct(&cache);
                        batch_loss += loss_mse(&pred, &tokens) as f64;
                        let scale = c::<f32>(2.0 / pred.data().len() as f64) * inv_batch;
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
                    Objective::Classification => {
                        let mut cache = model.forward(&tokens, &MaskSpec::empty(), rng);
                        let logits = model.classify(&mut cache);
                        batch_loss += loss_ce(logits, sample.label) as f64;
                        let mut d_logits = d_loss_ce(logits, sample.label);
                        d_logits[0] *= inv_batch;
                        d_logits[1] *= inv_batch;
                        model.backward_classification(
                            &cache,
                            d_logits,
                            &mut grads,
                            !train.freeze_encoder,
                        );
                    }
                }
            }
            let mean_batch_loss = batch_loss / batch.len() as f64;
            if !mean_batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                });
            }
            epoch_loss += batch_loss;
            epoch_samples += batch.len();

            let lr = cosine_lr(step, total_steps, train.lr_max, train.lr_min);
            optimizer.step(&mut model.params, &grads, lr, train.freeze_encoder);
            step += 1;
        }

        let train_loss = epoch_loss / epoch_samples as f64;
        let stats = match objective {
            Objective::Reconstruction => {
                let (val_loss, val_hdist) = reconstruction_metrics(
                    &model,
                    corpus,
                    &val_indices,
                    derive_seed(val_mask_seed, &[epoch as u64]),
                );
                EpochStats {
                    epoch,
                    train_loss,
                    val_loss,
                    val_hermitian_distance: Some(val_hdist),
                    val_accuracy: None,
                }
            }
            Objective::Classification => {
                let (val_loss, val_acc, _) = classification_metrics(&model, corpus, &val_indices);
                EpochStats {
                    epoch,
                    train_loss,
                    val_loss,
                    val_hermitian_distance: None,
                    val_accuracy: Some(val_acc),
                }
            }
        };
        // Checkpoint selection: lowest validation loss, earliest epoch wins
        // ties. Corpora without a validation split fall back to train loss.
        let selection_loss = if val_indices.is_empty() {
            stats.train_loss
        } else {
            stats.val_loss
        };
        if best.as_ref().map(|(loss, _, _)| selection_loss < *loss).unwrap_or(true) {
            best = Some((selection_loss, epoch, model.params.clone()));
        }
        history.push(stats);

        if !model.params.all_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    model.params = best_params;
    Ok((model, best_epoch, history))
}

/// Pretrain from scratch as a masked autoencoder. The returned report holds
/// per-group reconstruction metrics on the held-out test split.
pub fn pretrain(
    corpus: &Corpus,
    model_config: ModelConfig,
    train: &TrainConfig,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    let model = Model::init(model_config, derive_seed(train.seed, &[0]))?;
    let (model, best_epoch, history) =
        train_model(corpus, model, train, Objective::Reconstruction)?;
    let mut report = eval::evaluate(&model, corpus, EvalMode::Reconstruction, train.seed)?;
    report.attach_run(train, best_epoch, &history);
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
        report,
    })
}

/// Fine-tune a pretrained model for binary classification. Encoder and
/// embedding weights come from `base`; the classifier head is re-initialized
/// from the training seed. With `freeze_encoder`, only the head trains.
pub fn finetune_classifier(
    corpus: &Corpus,
    base: &Model<f32>,
    train: &TrainConfig,
) -> Result<TrainOutcome> {
    check_corpus_model(corpus, &base.config)?;
    let mut params = base.params.clone();
    let fresh = ModelParameters::<f32>::init(&base.config, derive_seed(train.seed, &[5]));
    params.cls_hidden = fresh.cls_hidden;
    params.cls_out = fresh.cls_out;
    let model = Model::new(base.config.clone(), params)?;

    let (model, best_epoch, history) =
        train_model(corpus, model, train, Objective::Classification)?;
    let mut report = eval::evaluate(&model, corpus, EvalMode::Classification, train.seed)?;
    report.attach_run(train, best_epoch, &history);
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
        report,
    })
}
