//! Siamese training: pair sampling, contrastive loss, BPTT gradients and the
//! epoch loop.

mod grad;
mod loss;
mod optim;
mod pairs;

use alloc::vec::Vec;

use rand::seq::SliceRandom;

pub use grad::{
    backward_pair, batch_gradients, batch_loss, pair_loss, Gradients, PairBatch, PairRef,
    TrainingPair, CHUNK_PAIRS,
};
pub use loss::{contrastive_loss, Margin, PairLabel};
pub use optim::{optimizer_step, Optimizer, OptimizerKind};
pub use pairs::{generate_pairs, SentencePair};

use crate::corpus::Dataset;
use crate::encoder::{init_params, EncoderDims, Model, DEFAULT_EMBED_DIM, DEFAULT_HIDDEN_DIM, DEFAULT_OUTPUT_DIM};
use crate::featurizer::{TrigramSequence, TrigramVocabulary};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    pub positives_per_sentence: usize,
    pub clip_norm: Option<f64>,
    pub optimizer: OptimizerKind,
    /// Only used by [`OptimizerKind::SgdMomentum`].
    pub momentum: f64,
    /// Draw a fresh pair sample every epoch instead of reusing epoch 1's.
    pub resample_pairs: bool,
    pub seed: u64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: Margin::DEFAULT.value(),
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 32,
            negatives_per_positive: 1,
            positives_per_sentence: 4,
            clip_norm: Some(5.0),
            optimizer: OptimizerKind::Sgd,
            momentum: 0.9,
            resample_pairs: true,
            seed: 0,
            embed_dim: DEFAULT_EMBED_DIM,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            output_dim: DEFAULT_OUTPUT_DIM,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<Margin> {
        let margin = Margin::new(self.margin)?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        for (name, v) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("negatives_per_positive", self.negatives_per_positive),
            ("positives_per_sentence", self.positives_per_sentence),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::invalid("clip_norm", "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum", "must lie in [0, 1)"));
        }
        Ok(margin)
    }

    pub fn dims(&self, vocab_size: usize) -> EncoderDims {
        EncoderDims::new(vocab_size, self.embed_dim, self.hidden_dim, self.output_dim)
    }

    /// Seed of the pair sample for `epoch` (1-based).
    pub fn pair_seed(&self, epoch: usize) -> u64 {
        let round = if self.resample_pairs { epoch as u64 } else { 1 };
        self.seed ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-pair loss over the epoch, measured before each batch's update.
    pub mean_loss: f64,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&EpochRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Per-epoch evaluation callback; returns held-out accuracy.
pub trait EvalHook {
    fn evaluate(&mut self, epoch: usize, model: &Model) -> Result<f64>;
}

impl<F> EvalHook for F
where
    F: FnMut(usize, &Model) -> Result<f64>,
{
    fn evaluate(&mut self, epoch: usize, model: &Model) -> Result<f64> {
        self(epoch, model)
    }
}

/// Hook that never runs; for `train(.., None::<NoEval>)`.
pub struct NoEval;

impl EvalHook for NoEval {
    fn evaluate(&mut self, _: usize, _: &Model) -> Result<f64> {
        Ok(0.0)
    }
}

fn encode_all(d: &Dataset, vocab: &TrigramVocabulary) -> Result<Vec<TrigramSequence>> {
    d.sentences()
        .iter()
        .map(|s| vocab.encode(&s.text).map(|q| q.with_source(s.id.clone())))
        .collect()
}

/// Trains a fresh model on poor/rich pairs.
///
/// `vocab` must cover both languages (see
/// [`crate::featurizer::build_joint_vocabulary`]): the embedding table is a
/// shared parameter. When `fixed_pairs` is given those pairs are used every
/// epoch; otherwise pairs are sampled per [`TrainConfig::pair_seed`].
pub fn train<H: EvalHook>(
    poor: &Dataset,
    rich: &Dataset,
    config: &TrainConfig,
    vocab: &TrigramVocabulary,
    fixed_pairs: Option<&[SentencePair]>,
    mut eval_hook: Option<H>,
) -> Result<(Model, TrainingLog)> {
    let margin = config.validate()?;
    let poor_seqs = encode_all(poor, vocab)?;
    let rich_seqs = encode_all(rich, vocab)?;
    if let Some(pairs) = fixed_pairs {
        if pairs.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if let Some(p) = pairs.iter().find(|p| p.poor >= poor.len() || p.rich >= rich.len()) {
            return Err(Error::invalid(
                "pairs",
                alloc::format!("pair ({}, {}) indexes past the datasets", p.poor, p.rich),
            ));
        }
    }
    let params = init_params(config.dims(vocab.len()), config.seed)?;
    let mut model = Model::new(params, vocab.clone())?;
    let mut optimizer = Optimizer::from_config(config);
    let mut log = TrainingLog::default();

    for epoch in 1..=config.epochs {
        let mut pairs = match fixed_pairs {
            Some(p) => p.to_vec(),
            None => generate_pairs(
                poor,
                rich,
                config.negatives_per_positive,
                config.positives_per_sentence,
                config.pair_seed(epoch),
            )?,
        };
        let mut shuffle_rng = rng::seeded(config.seed, 1000 + epoch as u64);
        pairs.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for (b, batch) in pairs.chunks(config.batch_size).enumerate() {
            let refs: Vec<PairRef<'_>> = batch
                .iter()
                .map(|p| PairRef {
                    poor: &poor_seqs[p.poor].ids,
                    rich: &rich_seqs[p.rich].ids,
                    label: p.label,
                })
                .collect();
            let diverged = Error::Diverged { epoch, batch: b + 1 };
            let (grads, losses) = match batch_gradients(&refs, &model.params, margin) {
                Ok(r) => r,
                Err(e) if e.is_numerical() => return Err(diverged),
                Err(e) => return Err(e),
            };
            let batch_loss = losses.iter().fold(0.0, |a, l| a + l);
            if !batch_loss.is_finite() || grads.first_non_finite().is_some() {
                return Err(diverged);
            }
            optimizer.step(&mut model.params, &grads)?;
            if model.params.first_non_finite().is_some() {
                return Err(diverged);
            }
            epoch_loss += batch_loss;
        }
        let mean_loss = epoch_loss / pairs.len() as f64;
        let accuracy = match eval_hook.as_mut() {
            Some(h) => Some(h.evaluate(epoch, &model)?),
            None => None,
        };
        match accuracy {
            Some(a) => log::info!("epoch {epoch}: mean loss {mean_loss:.6}, accuracy {a:.4}"),
            None => log::info!("epoch {epoch}: mean loss {mean_loss:.6}"),
        }
        log.records.push(EpochRecord {
            epoch,
            mean_loss,
            accuracy,
        });
    }
    Ok((model, log))
}
