//! The gradient training loop: seeded shuffling, on-line masking
//! corruption, batched masked cross-entropy, Adam updates, per-epoch
//! validation perplexity, and best-validation checkpointing.

use crate::corrupt::{sample_corruption, CorruptionError, CorruptionPolicy};
use crate::data::Dataset;
use crate::eval::{dataset_eval_maskings, perplexity, EvalSpec};
use crate::model::NeuralNet;
use crate::tensor::{AdamConfig, AdamState, Parameter, TensorError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Molecules per optimizer step.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub policy: CorruptionPolicy,
    pub seed: u64,
    /// Persist an intermediate checkpoint every this many epochs via the
    /// epoch callback; 0 disables.
    pub checkpoint_every: usize,
    /// Stop once validation perplexity reaches this value.
    pub early_stop_perplexity: Option<f64>,
}

impl TrainConfig {
    /// Desk-scale defaults: 50 epochs, batch 32, learning rate 0.001.
    pub fn desk_default(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.001,
            policy: CorruptionPolicy::default(),
            seed,
            checkpoint_every: 0,
            early_stop_perplexity: None,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::InvalidConfig(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidConfig(
                "learning rate must be finite and nonnegative".into(),
            ));
        }
        self.policy.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_perplexity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_perplexity: f64,
}

/// `epoch,train_loss,val_perplexity` rows.
pub fn history_to_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_perplexity\n");
    for stats in history {
        out.push_str(&format!(
            "{},{},{}\n",
            stats.epoch, stats.train_loss, stats.val_perplexity
        ));
    }
    out
}

/// Trains a neural model. Each epoch shuffles the training molecules with
/// the seeded RNG, applies epsilon-greedy masking corruption on line (the
/// corruption size is clamped to each molecule), and takes one Adam step
/// per batch of molecules. Validation perplexity is measured per epoch on
/// fixed maskings; the parameters from the best epoch are restored before
/// returning.
pub fn train<M: NeuralNet>(
    model: &M,
    train_set: &Dataset,
    val_set: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&M, &EpochStats),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let params = model.parameters();
    let mut adam = AdamState::new(
        AdamConfig::with_learning_rate(config.learning_rate),
        &params,
    );
    let val_maskings = dataset_eval_maskings(
        val_set,
        config.policy.n_corrupt,
        EvalSpec::default_variants(config.policy.n_corrupt),
        config.seed,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0;
    let mut best_val = f64::INFINITY;
    let mut best_values = snapshot(&params);

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &index in chunk {
                let molecule = &train_set.molecules()[index];
                let policy = CorruptionPolicy {
                    n_corrupt: config.policy.n_corrupt.min(molecule.atom_count()),
                    epsilon: config.policy.epsilon,
                };
                batch.push(sample_corruption(molecule, &policy, &mut rng)?);
            }
            let loss = model.batch_loss(&batch);
            let loss_value = loss.item();
            if !loss_value.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: batches,
                });
            }
            loss.backward();
            adam.step(&params)?;
            loss_sum += loss_value;
            batches += 1;
        }

        let val_perplexity = perplexity(model, &val_maskings);
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / batches as f64,
            val_perplexity,
        };
        if val_perplexity < best_val {
            best_val = val_perplexity;
            best_epoch = epoch;
            best_values = snapshot(&params);
        }
        history.push(stats);
        on_epoch(model, &stats);
        if config
            .early_stop_perplexity
            .is_some_and(|limit| val_perplexity <= limit)
        {
            break;
        }
    }

    restore(&params, &best_values);
    Ok(TrainOutcome {
        history,
        best_epoch,
        best_val_perplexity: best_val,
    })
}

fn snapshot(params: &[Parameter]) -> Vec<Vec<f64>> {
    params.iter().map(|p| p.values()).collect()
}

fn restore(params: &[Parameter], values: &[Vec<f64>]) {
    for (param, stored) in params.iter().zip(values) {
        param.set_values(stored);
    }
}
