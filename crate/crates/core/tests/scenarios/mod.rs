//! Seeded end-to-end scenarios on the toy bilingual corpora.

#![allow(dead_code)]

use snasa_core::baseline::{
    average_sentence_vector, predict_logreg, train_logreg, LogRegConfig, WordVectorTable,
};
use snasa_core::classifier::{build_reference_set, evaluate};
use snasa_core::featurizer::build_joint_vocabulary;
use snasa_core::synthetic::{generate, ToyLanguage};
use snasa_core::trainer::{train, TrainConfig};
use snasa_core::{ClassificationPolicy, Dataset, EvalReport, Model, TrainingLog, VocabOptions};

pub struct ToyCorpora {
    /// Language A training sentences (the resource-poor side).
    pub poor: Dataset,
    /// Language B training sentences (the resource-rich side).
    pub rich: Dataset,
    /// Held-out language A sentences.
    pub held_out: Dataset,
}

/// `per_class` training sentences per class in each language and
/// `held_out_per_class` held-out A sentences per class.
pub fn toy_corpora(per_class: usize, held_out_per_class: usize, seed: u64) -> ToyCorpora {
    ToyCorpora {
        poor: generate(ToyLanguage::A, per_class, seed, "a").unwrap(),
        rich: generate(ToyLanguage::B, per_class, seed + 1, "b").unwrap(),
        held_out: generate(ToyLanguage::A, held_out_per_class, seed + 2, "h").unwrap(),
    }
}

pub struct SiameseOutcome {
    pub model: Model,
    pub log: TrainingLog,
    pub report: EvalReport,
}

/// Trains on (A, B) pairs, then classifies held-out A against B references.
pub fn run_siamese(c: &ToyCorpora, config: &TrainConfig, refs_per_class: usize) -> SiameseOutcome {
    let vocab = build_joint_vocabulary(&[&c.poor, &c.rich], VocabOptions::default()).unwrap();
    let rich = c.rich.clone();
    let held = c.held_out.clone();
    let hook = move |_: usize, m: &Model| {
        let refs = build_reference_set(m, &rich, refs_per_class, config.seed)?;
        Ok(evaluate(m, &refs, &held, ClassificationPolicy::MeanSim)?.accuracy)
    };
    let (model, log) = train(&c.poor, &c.rich, config, &vocab, None, Some(hook)).unwrap();
    let refs = build_reference_set(&model, &c.rich, refs_per_class, config.seed).unwrap();
    let report = evaluate(&model, &refs, &c.held_out, ClassificationPolicy::MeanSim).unwrap();
    SiameseOutcome { model, log, report }
}

/// One-hot vectors for every word of both toy languages.
pub fn one_hot_table() -> WordVectorTable {
    let mut words = ToyLanguage::A.words();
    words.extend(ToyLanguage::B.words());
    let mut table = WordVectorTable::new(words.len()).unwrap();
    for (i, w) in words.iter().enumerate() {
        let mut v = vec![0.0; words.len()];
        v[i] = 1.0;
        table.insert(*w, &v).unwrap();
    }
    table
}

/// Averaged one-hot features plus logistic regression, trained on `train`
/// and scored on `test`. Returns held-out accuracy.
pub fn run_asv(train: &Dataset, test: &Dataset, config: LogRegConfig) -> f64 {
    let table = one_hot_table();
    let features: Vec<(Vec<f64>, _)> = train
        .sentences()
        .iter()
        .map(|s| (average_sentence_vector(&s.text, &table), s.label))
        .collect();
    let (model, _) = train_logreg(&features, train.scheme(), config).unwrap();
    let correct = test
        .sentences()
        .iter()
        .filter(|s| predict_logreg(&model, &average_sentence_vector(&s.text, &table)).unwrap() == s.label)
        .count();
    correct as f64 / test.len() as f64
}
