//! Mini-batch training with Adam, global-norm gradient clipping and early
//! stopping on development dependency F1.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::corpus::CorpusSentence;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Lexicon};
use crate::metrics::{self, EvalReport};
use crate::model::Model;
use crate::tensor::{Graph, ParamStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
    /// Sentences per optimizer step.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without dev improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.9,
            epsilon: 1e-12,
            clip_norm: 5.0,
            batch_size: 8,
            max_epochs: 100,
            patience: 10,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("clip_norm", self.clip_norm),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config("batch_size, max_epochs and patience must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adam with bias correction. Moment buffers follow the parameter order of
/// the store they were created for.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(store: &ParamStore, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros = || store.iter().map(|p| vec![0.0; p.value.len()]).collect();
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn from_config(store: &ParamStore, c: &TrainConfig) -> Self {
        Adam::new(store, c.learning_rate, c.beta1, c.beta2, c.epsilon)
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update from the store's gradient buffers. Nothing is
    /// modified if any gradient is not finite.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        if let Some(p) = store
            .iter()
            .find(|p| p.trainable && p.grad.data().iter().any(|g| !g.is_finite()))
        {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (k, p) in store.iter_mut().enumerate() {
            if !p.trainable {
                continue;
            }
            let (m, v) = (&mut self.first[k], &mut self.second[k]);
            let grads = p.grad.data().to_vec();
            for (((w, g), mi), vi) in p.value.data_mut().iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Rescales all gradients so their global L2 norm is at most `threshold`.
/// Returns the norm before clipping.
pub fn clip_gradients(store: &mut ParamStore, threshold: f64) -> f64 {
    let norm = store.grad_norm();
    if norm > threshold {
        let scale = threshold / norm;
        for p in store.iter_mut().filter(|p| p.trainable) {
            for g in p.grad.data_mut() {
                *g *= scale;
            }
        }
    }
    norm
}

struct Example {
    lattice: Lattice,
    tags: Vec<usize>,
    heads: Vec<usize>,
}

/// Owns a model and its optimizer state and runs training epochs.
pub struct Trainer {
    model: Model,
    adam: Adam,
    config: TrainConfig,
    examples: Vec<Example>,
    rng: ChaCha8Rng,
    epoch: usize,
    updates: u64,
}

impl Trainer {
    pub fn new(model: Model, train: &[CorpusSentence], lexicon: &Lexicon, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::Config("empty training corpus".into()));
        }
        let examples = train
            .iter()
            .map(|s| {
                let (tags, heads) = model.gold(s)?;
                Ok(Example {
                    lattice: model.lattice(&s.chars, lexicon)?,
                    tags,
                    heads,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let adam = Adam::from_config(&model.params, &config);
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Trainer {
            model,
            adam,
            config,
            examples,
            rng,
            epoch: 0,
            updates: 0,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Batches of similar-length sentences, visited in random order.
    fn batches(&mut self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        order.shuffle(&mut self.rng);
        order.sort_by_key(|&i| self.examples[i].lattice.n_chars());
        let mut batches: Vec<Vec<usize>> = order.chunks(self.config.batch_size).map(<[usize]>::to_vec).collect();
        batches.shuffle(&mut self.rng);
        batches
    }

    /// One pass over the training data; returns the summed loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        let mut total = 0.0;
        for batch in self.batches() {
            self.model.params.zero_grad();
            for &i in &batch {
                let ex = &self.examples[i];
                let seed = self.config.seed ^ (self.updates << 20) ^ i as u64;
                let mut g = Graph::train(seed);
                let loss = self.model.loss(&mut g, &ex.lattice, &ex.tags, &ex.heads)?;
                total += g.value(loss).item()?;
                g.backward(loss)?.accumulate_into(&mut self.model.params);
            }
            clip_gradients(&mut self.model.params, self.config.clip_norm);
            self.adam.step(&mut self.model.params)?;
            self.updates += 1;
        }
        self.epoch += 1;
        Ok(total)
    }
}

pub fn evaluate_model(model: &Model, gold: &[CorpusSentence], lexicon: &Lexicon) -> Result<EvalReport> {
    let pred = gold
        .iter()
        .map(|s| model.parse(&s.chars, lexicon))
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<_> = gold.iter().map(CorpusSentence::to_parse_output).collect();
    metrics::evaluate(&pred, &gold, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub seconds: f64,
    pub dev_seg_f1: f64,
    pub dev_pos_f1: f64,
    pub dev_dep_f1: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_dep_f1: f64,
    pub stopped_early: bool,
}

pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev dependency F1.
    pub model: Model,
    pub log: TrainLog,
}

/// Trains until `max_epochs` or until dev dependency F1 has not improved for
/// `patience` epochs. When `checkpoint_path` is given, the best model is
/// written there each time it improves.
pub fn train(
    model: Model,
    train: &[CorpusSentence],
    dev: &[CorpusSentence],
    lexicon: &Lexicon,
    config: &TrainConfig,
    checkpoint_path: Option<&Path>,
) -> Result<TrainOutcome> {
    if dev.is_empty() {
        return Err(Error::Config("empty development set".into()));
    }
    let mut trainer = Trainer::new(model, train, lexicon, config.clone())?;
    let mut log = TrainLog {
        best_dev_dep_f1: -1.0,
        ..TrainLog::default()
    };
    let mut best = trainer.model().params.clone();
    let mut stale = 0;
    while trainer.epoch() < config.max_epochs {
        let start = Instant::now();
        let loss = trainer.run_epoch()?;
        let report = evaluate_model(trainer.model(), dev, lexicon)?;
        let entry = EpochLog {
            epoch: trainer.epoch(),
            loss,
            seconds: start.elapsed().as_secs_f64(),
            dev_seg_f1: report.seg.f1,
            dev_pos_f1: report.pos.f1,
            dev_dep_f1: report.dep.f1,
        };
        log::info!(
            "epoch {} loss {:.4} dev seg {:.4} pos {:.4} dep {:.4}",
            entry.epoch,
            entry.loss,
            entry.dev_seg_f1,
            entry.dev_pos_f1,
            entry.dev_dep_f1
        );
        if entry.dev_dep_f1 > log.best_dev_dep_f1 {
            log.best_dev_dep_f1 = entry.dev_dep_f1;
            log.best_epoch = entry.epoch;
            best = trainer.model().params.clone();
            stale = 0;
            if let Some(path) = checkpoint_path {
                checkpoint::save(trainer.model(), path)?;
            }
        } else {
            stale += 1;
        }
        log.epochs.push(entry);
        if stale >= config.patience {
            log.stopped_early = trainer.epoch() < config.max_epochs;
            break;
        }
    }
    let mut model = trainer.into_model();
    model.params = best;
    Ok(TrainOutcome { model, log })
}

/// Default location of the JSON training log next to a checkpoint.
pub fn log_path_for(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_owned();
    name.push(".log.json");
    PathBuf::from(name)
}
