//! Reference-set classification and evaluation.
//!
//! A fixed number of rich-language sentences is sampled per class and
//! embedded. A poor-language sentence is assigned the class whose references
//! it matches best under a [`ClassificationPolicy`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;

use crate::corpus::{Dataset, LabelScheme, SentimentLabel};
use crate::encoder::{cosine, Model, SentimentEmbedding};
use crate::trainer::Margin;
use crate::{rng, Error, Result};

pub const DEFAULT_REFS_PER_CLASS: usize = 100;

/// How "most matches" is decided. Ties always go to the class that comes
/// first in the scheme's canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ClassificationPolicy {
    /// Highest mean cosine similarity to the class's references.
    #[default]
    MeanSim,
    /// Majority vote of the `k` globally most similar references.
    KnnVote(usize),
    /// Most references with cosine similarity at least `tau`.
    ThresholdCount(f64),
}

impl ClassificationPolicy {
    /// Parses `meansim`, `knn:<k>` or `threshold[:<t>]`; a bare
    /// `threshold` uses the default margin as `t`.
    pub fn parse(s: &str) -> Result<Self> {
        Self::parse_with_margin(s, Margin::DEFAULT.value())
    }

    /// As [`ClassificationPolicy::parse`], with a bare `threshold` taking
    /// `margin` as its cut-off.
    pub fn parse_with_margin(s: &str, margin: f64) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid("policy", format!("'{s}' (expected meansim, knn:<k> or threshold[:<t>])"));
        match s.split_once(':') {
            None if s.eq_ignore_ascii_case("meansim") => Ok(Self::MeanSim),
            None if s.eq_ignore_ascii_case("threshold") => Ok(Self::ThresholdCount(margin)),
            Some((name, k)) if name.eq_ignore_ascii_case("knn") => {
                let k: usize = k.trim().parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                Ok(Self::KnnVote(k))
            }
            Some((name, t)) if name.eq_ignore_ascii_case("threshold") => {
                let t: f64 = t.trim().parse().map_err(|_| bad())?;
                if !t.is_finite() {
                    return Err(bad());
                }
                Ok(Self::ThresholdCount(t))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ClassificationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MeanSim => f.write_str("meansim"),
            Self::KnnVote(k) => write!(f, "knn:{k}"),
            Self::ThresholdCount(t) => write!(f, "threshold:{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReferences {
    pub label: SentimentLabel,
    /// Embeddings; each carries its sentence id as `source`.
    pub embeddings: Vec<SentimentEmbedding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    scheme: LabelScheme,
    classes: Vec<ClassReferences>,
    n_per_class: usize,
    seed: u64,
    model_fingerprint: u32,
}

impl ReferenceSet {
    /// Validates that every class of `scheme` appears once, in canonical
    /// order, with at least one reference, and that all embeddings share a
    /// dimension.
    pub fn new(
        scheme: LabelScheme,
        classes: Vec<ClassReferences>,
        n_per_class: usize,
        seed: u64,
        model_fingerprint: u32,
    ) -> Result<Self> {
        if classes.len() != scheme.num_classes()
            || classes.iter().zip(scheme.classes()).any(|(c, l)| c.label != *l)
        {
            return Err(Error::invalid(
                "reference set",
                format!("classes must be exactly the {scheme} classes in canonical order"),
            ));
        }
        if let Some(c) = classes.iter().find(|c| c.embeddings.is_empty()) {
            return Err(Error::ClassTooSmall {
                class: c.label,
                count: 0,
                required: 1,
            });
        }
        let dim = classes[0].embeddings[0].dim();
        for c in &classes {
            if let Some(e) = c.embeddings.iter().find(|e| e.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: e.dim(),
                });
            }
        }
        Ok(Self {
            scheme,
            classes,
            n_per_class,
            seed,
            model_fingerprint,
        })
    }

    pub fn scheme(&self) -> LabelScheme {
        self.scheme
    }

    pub fn classes(&self) -> &[ClassReferences] {
        &self.classes
    }

    /// The requested number of references per class.
    pub fn n_per_class(&self) -> usize {
        self.n_per_class
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fingerprint of the parameters that produced the embeddings.
    pub fn model_fingerprint(&self) -> u32 {
        self.model_fingerprint
    }

    pub fn dim(&self) -> usize {
        self.classes[0].embeddings[0].dim()
    }

    /// Classes that had fewer sentences than requested.
    pub fn undersized_classes(&self) -> Vec<SentimentLabel> {
        self.classes
            .iter()
            .filter(|c| c.embeddings.len() < self.n_per_class)
            .map(|c| c.label)
            .collect()
    }

    /// Multiplies every reference embedding by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.classes {
            for e in &mut c.embeddings {
                e.values.iter_mut().for_each(|v| *v *= factor);
            }
        }
        out
    }

    /// Appends an extra reference to `label`'s list.
    pub fn with_extra_reference(&self, label: SentimentLabel, e: SentimentEmbedding) -> Result<Self> {
        let mut out = self.clone();
        let ci = self.class_index(label)?;
        if e.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: e.dim(),
            });
        }
        out.classes[ci].embeddings.push(e);
        Ok(out)
    }

    fn class_index(&self, label: SentimentLabel) -> Result<usize> {
        self.scheme.index_of(label).ok_or(Error::LabelOutsideScheme {
            label: label.token(),
            scheme: self.scheme.name(),
        })
    }
}

/// Samples `min(n_per_class, class size)` rich sentences per class without
/// replacement and embeds them. Classes smaller than requested are taken
/// whole, with a warning.
pub fn build_reference_set(
    model: &Model,
    rich: &Dataset,
    n_per_class: usize,
    seed: u64,
) -> Result<ReferenceSet> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class", "must be at least 1"));
    }
    let mut classes = Vec::new();
    for (ci, &label) in rich.scheme().classes().iter().enumerate() {
        let members = rich.indices_of(label);
        if members.is_empty() {
            return Err(Error::ClassTooSmall {
                class: label,
                count: 0,
                required: 1,
            });
        }
        if members.len() < n_per_class {
            log::warn!(
                "class {label} has {} sentences, fewer than the {n_per_class} requested; using all",
                members.len()
            );
        }
        let mut rng = rng::seeded(seed, 100 + ci as u64);
        let take = n_per_class.min(members.len());
        let mut picked: Vec<usize> = index::sample(&mut rng, members.len(), take)
            .into_iter()
            .map(|i| members[i])
            .collect();
        picked.sort_unstable();
        let embeddings = picked
            .into_iter()
            .map(|i| {
                let s = &rich.sentences()[i];
                model.embed_with_source(&s.text, &s.id)
            })
            .collect::<Result<Vec<_>>>()?;
        classes.push(ClassReferences { label, embeddings });
    }
    ReferenceSet::new(rich.scheme(), classes, n_per_class, seed, model.params.fingerprint())
}

/// First index of the maximum; earlier (canonical) classes win ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Per-class score under `policy`, in canonical class order.
pub fn class_scores(
    e: &SentimentEmbedding,
    refs: &ReferenceSet,
    policy: ClassificationPolicy,
) -> Result<Vec<f64>> {
    if e.dim() != refs.dim() {
        return Err(Error::DimensionMismatch {
            expected: refs.dim(),
            actual: e.dim(),
        });
    }
    let sims: Vec<Vec<f64>> = refs
        .classes
        .iter()
        .map(|c| c.embeddings.iter().map(|r| cosine(&e.values, &r.values)).collect())
        .collect();
    let scores = match policy {
        ClassificationPolicy::MeanSim => sims
            .iter()
            .map(|s| s.iter().fold(0.0, |a, v| a + v) / s.len() as f64)
            .collect(),
        ClassificationPolicy::ThresholdCount(tau) => sims
            .iter()
            .map(|s| s.iter().filter(|&&v| v >= tau).count() as f64)
            .collect(),
        ClassificationPolicy::KnnVote(k) => {
            if k == 0 {
                return Err(Error::invalid("policy", "knn needs k >= 1"));
            }
            let mut all: Vec<(f64, usize, usize)> = sims
                .iter()
                .enumerate()
                .flat_map(|(ci, s)| s.iter().enumerate().map(move |(ri, &v)| (v, ci, ri)))
                .collect();
            all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut votes = vec![0.0; sims.len()];
            for &(_, ci, _) in all.iter().take(k) {
                votes[ci] += 1.0;
            }
            votes
        }
    };
    Ok(scores)
}

pub fn classify(
    e: &SentimentEmbedding,
    refs: &ReferenceSet,
    policy: ClassificationPolicy,
) -> Result<SentimentLabel> {
    let scores = class_scores(e, refs, policy)?;
    Ok(refs.scheme.classes()[argmax(&scores)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub label: SentimentLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of test sentences whose true label is this class.
    pub support: usize,
}

/// Accuracy, per-class and macro-averaged precision/recall/F1, and the
/// confusion matrix (rows: true class, columns: predicted class).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scheme: LabelScheme,
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Ordered `key=value` metadata describing how the report was produced.
    pub meta: Vec<(String, String)>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    /// Derives every metric from a confusion matrix. Precision and recall use
    /// 0/0 = 0; macro values are unweighted means over all scheme classes.
    pub fn from_confusion(scheme: LabelScheme, confusion: Vec<Vec<usize>>) -> Result<Self> {
        let k = scheme.num_classes();
        if confusion.len() != k || confusion.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: confusion.len(),
            });
        }
        let total: usize = confusion.iter().flatten().sum();
        let trace: usize = (0..k).map(|i| confusion[i][i]).sum();
        let per_class: Vec<ClassMetrics> = scheme
            .classes()
            .iter()
            .enumerate()
            .map(|(i, &label)| {
                let tp = confusion[i][i];
                let support: usize = confusion[i].iter().sum();
                let predicted: usize = confusion.iter().map(|r| r[i]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics { label, precision, recall, f1, support }
            })
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
        Ok(Self {
            scheme,
            accuracy: ratio(trace, total),
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f1: mean(|m| m.f1),
            per_class,
            confusion,
            meta: Vec::new(),
        })
    }

    /// Builds a report from `(true, predicted)` label pairs.
    pub fn from_predictions<I>(scheme: LabelScheme, outcomes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SentimentLabel, SentimentLabel)>,
    {
        let k = scheme.num_classes();
        let mut confusion = vec![vec![0usize; k]; k];
        for (truth, pred) in outcomes {
            let idx = |l: SentimentLabel| {
                scheme.index_of(l).ok_or(Error::LabelOutsideScheme {
                    label: l.token(),
                    scheme: scheme.name(),
                })
            };
            confusion[idx(truth)?][idx(pred)?] += 1;
        }
        Self::from_confusion(scheme, confusion)
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Micro-averaged `(precision, recall, f1)`. With one label per sentence
    /// all three equal accuracy.
    pub fn micro(&self) -> (f64, f64, f64) {
        let tp: usize = (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum();
        let p = ratio(tp, self.total());
        (p, p, p)
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }
}

fn embed_all(model: &Model, test: &Dataset) -> Result<Vec<SentimentEmbedding>> {
    let sentences = test.sentences();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        sentences
            .par_iter()
            .map(|s| model.embed_with_source(&s.text, &s.id))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sentences
            .iter()
            .map(|s| model.embed_with_source(&s.text, &s.id))
            .collect()
    }
}

/// Predicted label for every test sentence, in dataset order.
pub fn predict(
    model: &Model,
    refs: &ReferenceSet,
    test: &Dataset,
    policy: ClassificationPolicy,
) -> Result<Vec<SentimentLabel>> {
    if test.scheme() != refs.scheme {
        return Err(Error::SchemeMismatch {
            left: refs.scheme.name(),
            right: test.scheme().name(),
        });
    }
    embed_all(model, test)?
        .iter()
        .map(|e| classify(e, refs, policy))
        .collect()
}

pub fn evaluate(
    model: &Model,
    refs: &ReferenceSet,
    test: &Dataset,
    policy: ClassificationPolicy,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset(test.name().into()));
    }
    let predicted = predict(model, refs, test, policy)?;
    let outcomes = test.sentences().iter().map(|s| s.label).zip(predicted);
    Ok(EvalReport::from_predictions(test.scheme(), outcomes)?
        .with_meta("model", format!("{:08x}", refs.model_fingerprint))
        .with_meta("policy", policy)
        .with_meta("seed", refs.seed)
        .with_meta("refs_per_class", refs.n_per_class)
        .with_meta("averaging", "macro"))
}
