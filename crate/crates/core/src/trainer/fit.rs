use std::collections::HashSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accuracy::discrimination_accuracy;
use super::adam::Adam;
use super::loss::{ranking_loss, ranking_loss_grad};
use super::{TrainConfig, TrainError, TrainReport};
use crate::corpus::FeatureStore;
use crate::negatives::NegativeBundle;
use crate::scorer::{ScorerConfig, ScorerModel, ScorerParams};
use crate::seed::derive_rng;

/// Bundles per parallel work item. Fixed so the summation order, and hence
/// the result, does not depend on the thread count.
const CHUNK: usize = 4;

pub struct BatchGradient {
    /// Mean of `per_bundle`.
    pub loss: f64,
    pub per_bundle: Vec<f64>,
    /// Gradient of `loss`.
    pub grads: ScorerParams,
}

fn features_for<'a>(
    features: &'a FeatureStore,
    bundle: &NegativeBundle,
) -> Result<&'a crate::corpus::ImageFeatures, TrainError> {
    features
        .get(bundle.image_id())
        .ok_or_else(|| TrainError::MissingFeatures(bundle.image_id().to_string()))
}

/// Ranking loss of one bundle, every caption scored against the positive's image.
pub fn bundle_loss(
    model: &ScorerModel,
    bundle: &NegativeBundle,
    features: &FeatureStore,
    margin: f64,
) -> Result<f64, TrainError> {
    let img = features_for(features, bundle)?;
    let pos = model.score(img, &bundle.positive)?;
    let negs = bundle
        .negatives
        .iter()
        .map(|n| model.score(img, &n.caption))
        .collect::<Result<Vec<_>, _>>()?;
    ranking_loss(pos, &negs, margin)
}

/// Batch-mean ranking loss and its gradient.
pub fn batch_loss_and_gradient(
    model: &ScorerModel,
    batch: &[&NegativeBundle],
    features: &FeatureStore,
    margin: f64,
) -> Result<BatchGradient, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptySplit("batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let chunks: Vec<(Vec<f64>, ScorerParams)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = ScorerParams::zeros(&model.config);
            let mut losses = Vec::with_capacity(chunk.len());
            for bundle in chunk {
                let img = features_for(features, bundle)?;
                let pos = model.forward(img, &bundle.positive)?;
                let negs = bundle
                    .negatives
                    .iter()
                    .map(|n| model.forward(img, &n.caption))
                    .collect::<Result<Vec<_>, _>>()?;
                let neg_scores: Vec<f64> = negs.iter().map(|p| p.score).collect();
                losses.push(ranking_loss(pos.score, &neg_scores, margin)?);
                let (dpos, dnegs) = ranking_loss_grad(pos.score, &neg_scores, margin);
                if dpos != 0.0 {
                    model.backward(&pos, dpos * scale, &mut grads);
                }
                for (pass, d) in negs.iter().zip(dnegs) {
                    if d != 0.0 {
                        model.backward(pass, d * scale, &mut grads);
                    }
                }
            }
            Ok((losses, grads))
        })
        .collect::<Result<_, TrainError>>()?;

    let mut offending = Vec::new();
    let mut per_bundle = Vec::with_capacity(batch.len());
    let mut grads = ScorerParams::zeros(&model.config);
    for (i, (losses, g)) in chunks.into_iter().enumerate() {
        let ids = batch[i * CHUNK..]
            .iter()
            .take(losses.len())
            .map(|b| b.positive.caption_id.clone());
        if !g.all_finite() {
            offending.extend(ids);
        } else {
            offending.extend(ids.zip(&losses).filter(|(_, l)| !l.is_finite()).map(|(id, _)| id));
        }
        grads.add_scaled(&g, 1.0);
        per_bundle.extend(losses);
    }
    if !offending.is_empty() {
        return Err(TrainError::NonFinite {
            step: 0,
            bundle_ids: offending,
        });
    }
    let loss = per_bundle.iter().sum::<f64>() * scale;
    Ok(BatchGradient {
        loss,
        per_bundle,
        grads,
    })
}

/// Mean bundle loss over a split, scored in parallel.
pub fn validation_loss(
    model: &ScorerModel,
    bundles: &[NegativeBundle],
    features: &FeatureStore,
    margin: f64,
) -> Result<f64, TrainError> {
    if bundles.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    let losses = bundles
        .par_iter()
        .map(|b| bundle_loss(model, b, features, margin))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// A model together with its optimizer state.
pub struct Trainer {
    pub model: ScorerModel,
    pub config: TrainConfig,
    optimizer: Adam,
    step: usize,
}

impl Trainer {
    /// Unlike [`TrainConfig::validate`], a zero learning rate is allowed here.
    pub fn new(model: ScorerModel, config: TrainConfig) -> Result<Self, TrainError> {
        let mut check = config.clone();
        if config.learning_rate == 0.0 {
            check.learning_rate = 1.0;
        }
        check.validate()?;
        let names: Vec<String> = model.params.tensors().into_iter().map(|(n, _, _)| n).collect();
        for prefix in &config.freeze {
            if !names.iter().any(|n| n.starts_with(prefix.as_str())) {
                return Err(TrainError::Config(format!(
                    "freeze prefix `{prefix}` matches no parameter"
                )));
            }
        }
        let frozen = names
            .iter()
            .map(|n| config.freeze.iter().any(|p| n.starts_with(p.as_str())))
            .collect();
        let optimizer = Adam::new(
            &model.params,
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.adam_eps,
            frozen,
        );
        Ok(Self {
            model,
            config,
            optimizer,
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// One update on the batch-mean loss. Returns the loss before the update.
    pub fn train_step(&mut self, batch: &[&NegativeBundle], features: &FeatureStore) -> Result<f64, TrainError> {
        self.step += 1;
        let g = batch_loss_and_gradient(&self.model, batch, features, self.config.margin).map_err(|e| match e {
            TrainError::NonFinite { bundle_ids, .. } => TrainError::NonFinite {
                step: self.step,
                bundle_ids,
            },
            other => other,
        })?;
        self.optimizer.step(&mut self.model.params, &g.grads);
        if !self.model.params.all_finite() {
            return Err(TrainError::NonFinite {
                step: self.step,
                bundle_ids: batch.iter().map(|b| b.positive.caption_id.clone()).collect(),
            });
        }
        Ok(g.loss)
    }
}

pub struct FitOutcome {
    /// Parameters at the step with the lowest validation loss.
    pub model: ScorerModel,
    pub report: TrainReport,
}

fn check_splits(train: &[NegativeBundle], valid: &[NegativeBundle], features: &FeatureStore) -> Result<(), TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptySplit("training"));
    }
    if valid.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    let train_images: HashSet<&str> = train.iter().map(|b| b.image_id()).collect();
    if let Some(b) = valid.iter().find(|b| train_images.contains(b.image_id())) {
        return Err(TrainError::OverlappingSplits(b.image_id().to_string()));
    }
    if let Some(b) = train.iter().chain(valid).find(|b| !features.contains(b.image_id())) {
        return Err(TrainError::MissingFeatures(b.image_id().to_string()));
    }
    Ok(())
}

/// Trains for `max_steps` steps, evaluating the validation loss at step 0,
/// every `eval_every` steps and at the last step, and keeps the parameters
/// with the lowest validation loss. Batches walk through seeded shuffles of
/// the training bundles.
pub fn fit(
    model: ScorerModel,
    train: &[NegativeBundle],
    valid: &[NegativeBundle],
    features: &FeatureStore,
    config: &TrainConfig,
) -> Result<FitOutcome, TrainError> {
    config.validate()?;
    check_splits(train, valid, features)?;
    let initial_accuracy = discrimination_accuracy(&model, valid, features)?;
    let mut best_loss = validation_loss(&model, valid, features, config.margin)?;
    let mut best_params = model.params.clone();
    let mut best_step = 0;
    let mut validation = vec![(0, best_loss)];
    log::info!("seed {}: step 0 validation loss {best_loss:.5}", config.seed);

    let mut trainer = Trainer::new(model, config.clone())?;
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut epoch = 0;
    let mut step_losses = Vec::with_capacity(config.max_steps);
    for step in 1..=config.max_steps {
        let mut batch = Vec::with_capacity(config.batch_bundles);
        while batch.len() < config.batch_bundles.min(train.len()) {
            if cursor == order.len() {
                order = (0..train.len()).collect();
                order.shuffle(&mut derive_rng(config.seed, "train-order", epoch));
                epoch += 1;
                cursor = 0;
            }
            batch.push(&train[order[cursor]]);
            cursor += 1;
        }
        step_losses.push(trainer.train_step(&batch, features)?);
        if step % config.eval_every == 0 || step == config.max_steps {
            let loss = validation_loss(&trainer.model, valid, features, config.margin)?;
            log::info!(
                "seed {}: step {step} train loss {:.5} validation loss {loss:.5}",
                config.seed,
                step_losses[step - 1]
            );
            validation.push((step, loss));
            if loss < best_loss {
                best_loss = loss;
                best_step = step;
                best_params = trainer.model.params.clone();
            }
        }
    }

    let best = ScorerModel::from_parts(trainer.model.config.clone(), best_params)?;
    let accuracy = discrimination_accuracy(&best, valid, features)?;
    Ok(FitOutcome {
        model: best,
        report: TrainReport {
            seed: config.seed,
            step_losses,
            validation,
            best_step,
            best_validation_loss: best_loss,
            checkpoint: None,
            initial_accuracy,
            accuracy,
        },
    })
}

/// Spread of held-out overall accuracy across repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    pub seeds: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl RepetitionSummary {
    pub fn from_reports(reports: &[TrainReport]) -> Self {
        let accuracies: Vec<f64> = reports.iter().map(|r| r.accuracy.overall.accuracy).collect();
        let n = accuracies.len().max(1) as f64;
        Self {
            seeds: reports.iter().map(|r| r.seed).collect(),
            mean: accuracies.iter().sum::<f64>() / n,
            min: accuracies.iter().copied().fold(f64::INFINITY, f64::min),
            max: accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            accuracies,
        }
    }
}

/// Runs `config.repetitions` independent fits with seeds `seed, seed + 1, …`;
/// each seed drives both initialization and batch order.
pub fn fit_repetitions(
    scorer: &ScorerConfig,
    train: &[NegativeBundle],
    valid: &[NegativeBundle],
    features: &FeatureStore,
    config: &TrainConfig,
) -> Result<(Vec<FitOutcome>, RepetitionSummary), TrainError> {
    config.validate()?;
    let mut outcomes = Vec::with_capacity(config.repetitions);
    for r in 0..config.repetitions as u64 {
        let run = TrainConfig {
            seed: config.seed + r,
            ..config.clone()
        };
        let model = ScorerModel::init(scorer.clone(), run.seed)?;
        outcomes.push(fit(model, train, valid, features, &run)?);
    }
    let reports: Vec<TrainReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    Ok((outcomes, RepetitionSummary::from_reports(&reports)))
}
