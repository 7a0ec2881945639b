//! Per-group evaluation reports with stable text serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::hash::fnv64;
use crate::quantum::BipartiteDims;
use crate::sampler::StateGroup;
use crate::transformer::Model;

use super::{
    classification_metrics, reconstruction_metrics, Corpus, EpochStats, TrainConfig,
};
use crate::rng::derive_seed;

pub const REPORT_FORMAT: &str = "entclass-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Reconstruction,
    Classification,
}

impl EvalMode {
    pub fn name(&self) -> &'static str {
        match self {
            EvalMode::Reconstruction => "reconstruction",
            EvalMode::Classification => "classification",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "reconstruction" => Ok(EvalMode::Reconstruction),
            "classification" => Ok(EvalMode::Classification),
            _ => Err(Error::InvalidConfig(format!("unknown eval mode '{name}'"))),
        }
    }
}

/// 2x2 confusion counts for the binary task (positive = entangled).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_positive: usize,
}

impl Confusion {
    pub fn record(&mut self, label: u8, predicted: u8) {
        match (label, predicted) {
            (0, 0) => self.true_negative += 1,
            (0, 1) => self.false_positive += 1,
            (1, 0) => self.false_negative += 1,
            (1, 1) => self.true_positive += 1,
            _ => unreachable!("labels are binary"),
        }
    }
}

/// Metrics of one generative family.
#[derive(Clone, Debug)]
pub struct GroupMetrics {
    pub group: StateGroup,
    pub samples: usize,
    pub mse: Option<f64>,
    pub hermitian_distance: Option<f64>,
    pub accuracy: Option<f64>,
    pub correct: Option<usize>,
}

/// Evaluation (and, for training runs, run history) in a stable text form.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub tool_version: String,
    pub mode: EvalMode,
    pub dims: BipartiteDims,
    pub eval_seed: u64,
    pub groups: Vec<GroupMetrics>,
    pub confusion: Option<Confusion>,
    pub run_config: Vec<(String, String)>,
    pub best_epoch: Option<usize>,
    pub history: Vec<EpochStats>,
}

impl EvalReport {
    pub fn group(&self, group: StateGroup) -> Option<&GroupMetrics> {
        self.groups.iter().find(|g| g.group == group)
    }

    /// Record the resolved training configuration and per-epoch history.
    pub fn attach_run(&mut self, train: &TrainConfig, best_epoch: usize, history: &[EpochStats]) {
        self.run_config = train.config_lines();
        self.best_epoch = Some(best_epoch);
        self.history = history.to_vec();
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format = {REPORT_FORMAT}");
        let _ = writeln!(out, "format_version = {REPORT_VERSION}");
        let _ = writeln!(out, "tool_version = {}", self.tool_version);
        let _ = writeln!(out, "mode = {}", self.mode.name());
        let _ = writeln!(out, "dims = {}", self.dims);
        let _ = writeln!(out, "eval_seed = {}", self.eval_seed);
        for (key, value) in &self.run_config {
            let _ = writeln!(out, "config = {key}={value}");
        }
        if let Some(best) = self.best_epoch {
            let _ = writeln!(out, "best_epoch = {best}");
        }
        for stats in &self.history {
            let mut line = format!(
                "epoch = index={} train_loss={} val_loss={}",
                stats.epoch,
                fmt(stats.train_loss),
                fmt(stats.val_loss)
            );
            if let Some(h) = stats.val_hermitian_distance {
                let _ = write!(line, " val_hdist={}", fmt(h));
            }
            if let Some(a) = stats.val_accuracy {
                let _ = write!(line, " val_accuracy={}", fmt(a));
            }
            let _ = writeln!(out, "{line}");
        }
        for g in &self.groups {
            let mut line = format!("group = name={} samples={}", g.group.name(), g.samples);
            if let Some(v) = g.mse {
                let _ = write!(line, " mse={}", fmt(v));
            }
            if let Some(v) = g.hermitian_distance {
                let _ = write!(line, " hdist={}", fmt(v));
            }
            if let Some(v) = g.accuracy {
                let _ = write!(line, " accuracy={}", fmt(v));
            }
            if let Some(v) = g.correct {
                let _ = write!(line, " correct={v}");
            }
            let _ = writeln!(out, "{line}");
        }
        if let Some(c) = &self.confusion {
            let _ = writeln!(
                out,
                "confusion = tn={} fp={} fn={} tp={}",
                c.true_negative, c.false_positive, c.false_negative, c.true_positive
            );
        }
        let _ = writeln!(out, "digest = {:016x}", fnv64(out.as_bytes()));
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if path.exists() {
            return Err(Error::PathExists(path.display().to_string()));
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.9e}")
}

/// Evaluate a model on the held-out test split of a corpus, per group.
/// Training and validation records are never consumed here.
pub fn evaluate(
    model: &Model<f32>,
    corpus: &Corpus,
    mode: EvalMode,
    eval_seed: u64,
) -> Result<EvalReport> {
    super::check_corpus_model(corpus, &model.config)?;
    let test_indices = corpus.indices_of(Split::Test);
    if test_indices.is_empty() {
        return Err(Error::InvalidConfig(
            "corpus has no test-split records to evaluate".into(),
        ));
    }
    for &idx in &test_indices {
        assert_eq!(corpus.samples[idx].split, Split::Test);
    }

    let groups_present = corpus.groups();
    let ordered: Vec<StateGroup> = StateGroup::ALL
        .iter()
        .copied()
        .filter(|g| groups_present.contains(g))
        .collect();

    let mut groups = Vec::with_capacity(ordered.len());
    let mut confusion = None;
    match mode {
        EvalMode::Reconstruction => {
            for group in ordered {
                let indices: Vec<usize> = test_indices
                    .iter()
                    .copied()
                    .filter(|&i| corpus.samples[i].group == group)
                    .collect();
                let mask_seed = derive_seed(eval_seed, &[0x4556, group.id() as u64]);
                let (mse, hdist) = reconstruction_metrics(model, corpus, &indices, mask_seed);
                groups.push(GroupMetrics {
                    group,
                    samples: indices.len(),
                    mse: Some(mse),
                    hermitian_distance: Some(hdist),
                    accuracy: None,
                    correct: None,
                });
            }
        }
        EvalMode::Classification => {
            let mut total = Confusion::default();
            for group in ordered {
                let indices: Vec<usize> = test_indices
                    .iter()
                    .copied()
                    .filter(|&i| corpus.samples[i].group == group)
                    .collect();
                let (_, accuracy, group_confusion) =
                    classification_metrics(model, corpus, &indices);
                let correct = group_confusion.true_negative + group_confusion.true_positive;
                total.true_negative += group_confusion.true_negative;
                total.false_positive += group_confusion.false_positive;
                total.false_negative += group_confusion.false_negative;
                total.true_positive += group_confusion.true_positive;
                groups.push(GroupMetrics {
                    group,
                    samples: indices.len(),
                    mse: None,
                    hermitian_distance: None,
                    accuracy: Some(accuracy),
                    correct: Some(correct),
                });
            }
            confusion = Some(total);
        }
    }

    Ok(EvalReport {
        tool_version: crate::TOOL_VERSION.to_string(),
        mode,
        dims: corpus.dims,
        eval_seed,
        groups,
        confusion,
        run_config: Vec::new(),
        best_epoch: None,
        history: Vec::new(),
    })
}
