//! Contrastive fine-tuning of the scorer against negative bundles.

mod accuracy;
mod adam;
mod fit;
mod loss;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accuracy::{discrimination_accuracy, DiscriminationReport, TagAccuracy};
pub use adam::Adam;
pub use fit::{
    batch_loss_and_gradient, bundle_loss, fit, fit_repetitions, validation_loss, BatchGradient, FitOutcome,
    RepetitionSummary, Trainer,
};
pub use loss::ranking_loss;

use crate::scorer::ScorerError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("no features for image `{0}`")]
    MissingFeatures(String),
    #[error("image `{0}` appears in both the training and validation split")]
    OverlappingSplits(String),
    #[error("ranking loss needs at least one negative")]
    NoNegatives,
    #[error("non-finite loss or gradient at step {step}; offending bundles: {bundle_ids:?}")]
    NonFinite { step: usize, bundle_ids: Vec<String> },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_eps() -> f64 {
    1e-8
}

/// Hyperparameters of one training run. Paper-scale values (batch 320,
/// lr 2e-6, 4k steps) suit a pre-trained encoder; the defaults here are for
/// training the desk scorer from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub margin: f64,
    /// Number of bundles (positive plus its four negatives) per step.
    pub batch_bundles: usize,
    pub learning_rate: f64,
    pub max_steps: usize,
    pub eval_every: usize,
    pub seed: u64,
    pub repetitions: usize,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_adam_eps")]
    pub adam_eps: f64,
    /// Tensors whose name starts with any of these prefixes stay fixed,
    /// e.g. `["token_emb", "layers.0."]`.
    #[serde(default)]
    pub freeze: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 0.2,
            batch_bundles: 32,
            learning_rate: 1e-4,
            max_steps: 2000,
            eval_every: 100,
            seed: 0,
            repetitions: 1,
            beta1: default_beta1(),
            beta2: default_beta2(),
            adam_eps: default_adam_eps(),
            freeze: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if self.batch_bundles == 0 {
            return bad("batch_bundles must be at least 1");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be at least 1");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.adam_eps <= 0.0 {
            return bad("Adam betas must lie in [0, 1) and eps must be positive");
        }
        Ok(())
    }
}

/// Outcome of one `fit` call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    /// Pre-update batch loss of every step, in order (step `i + 1`).
    pub step_losses: Vec<f64>,
    /// `(step, validation loss)`; step 0 is the initial model.
    pub validation: Vec<(usize, f64)>,
    pub best_step: usize,
    pub best_validation_loss: f64,
    /// Where the best checkpoint was written, if it was.
    pub checkpoint: Option<String>,
    /// Held-out discrimination accuracy of the initial and best model.
    pub initial_accuracy: DiscriminationReport,
    pub accuracy: DiscriminationReport,
}

impl TrainReport {
    /// `step,train_loss,valid_loss` with empty cells where nothing was recorded.
    pub fn loss_curve_csv(&self) -> String {
        let valid: BTreeMap<usize, f64> = self.validation.iter().copied().collect();
        let mut out = String::from("step,train_loss,valid_loss\n");
        for step in 0..=self.step_losses.len() {
            let train = step
                .checked_sub(1)
                .map(|i| self.step_losses[i].to_string())
                .unwrap_or_default();
            let v = valid.get(&step).map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{step},{train},{v}\n"));
        }
        out
    }
}
