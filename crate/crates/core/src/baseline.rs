//! Average-word-vector baseline.
//!
//! A sentence vector is the mean of the pretrained vectors of its known
//! whitespace tokens; an L2-regularized multinomial logistic regression is
//! trained on those vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{LabelScheme, SentimentLabel};
use crate::linalg::{dot, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    index: BTreeMap<String, usize>,
    data: Vec<f64>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "word vectors need at least one dimension"));
        }
        Ok(Self {
            dim,
            index: BTreeMap::new(),
            data: Vec::new(),
        })
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: &[f64]) -> Result<()> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if self.index.contains_key(&word) {
            return Err(Error::DuplicateEntry(word));
        }
        self.index.insert(word, self.index.len());
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

/// Mean vector over the tokens found in `table` and how many were found.
pub fn average_with_count(text: &str, table: &WordVectorTable) -> (Vec<f64>, usize) {
    let mut sum = vec![0.0; table.dim];
    let mut found = 0;
    for v in text.split_whitespace().filter_map(|w| table.get(w)) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        found += 1;
    }
    if found > 0 {
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    (sum, found)
}

/// Mean of the known tokens' vectors. Unknown tokens are skipped; if none
/// is known the zero vector is returned and a warning logged.
pub fn average_sentence_vector(text: &str, table: &WordVectorTable) -> Vec<f64> {
    let (v, found) = average_with_count(text, table);
    if found == 0 {
        log::warn!("no known words in sentence; using the zero vector");
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    /// L2 strength on the weights (biases are not penalized).
    pub lambda: f64,
    /// Stop when the gradient's infinity norm drops below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            lambda: 0.001,
            tol: 0.001,
            max_iters: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub scheme: LabelScheme,
    /// One row per class, canonical order.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub lambda: f64,
}

/// Objective value per iteration and whether the tolerance was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegTrace {
    pub losses: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// A training example in index form: feature vector and class index.
pub type Example<'a> = (&'a [f64], usize);

fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
    max + libm::log(sum)
}

fn objective_value(weights: &Matrix, bias: &[f64], data: &[Example<'_>], lambda: f64) -> f64 {
    let mut z = vec![0.0; bias.len()];
    let mut nll = 0.0;
    for &(x, y) in data {
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = bias[k] + dot(weights.row(k), x);
        }
        let lse = softmax_in_place(&mut z);
        nll += lse - (bias[y] + dot(weights.row(y), x));
    }
    let w = weights.as_slice();
    nll / data.len() as f64 + 0.5 * lambda * dot(w, w)
}

/// Mean cross-entropy plus `lambda / 2 * ||W||^2`, with its gradient.
pub fn logreg_objective(
    weights: &Matrix,
    bias: &[f64],
    data: &[Example<'_>],
    lambda: f64,
) -> (f64, Matrix, Vec<f64>) {
    let k = bias.len();
    let mut gw = Matrix::zeros(k, weights.cols());
    let mut gb = vec![0.0; k];
    let mut z = vec![0.0; k];
    let mut nll = 0.0;
    for &(x, y) in data {
        for (c, zc) in z.iter_mut().enumerate() {
            *zc = bias[c] + dot(weights.row(c), x);
        }
        let correct = z[y];
        let lse = softmax_in_place(&mut z);
        nll += lse - correct;
        z[y] -= 1.0;
        for (c, &d) in z.iter().enumerate() {
            gb[c] += d;
            crate::linalg::axpy(d, x, gw.row_mut(c));
        }
    }
    let n = data.len() as f64;
    gb.iter_mut().for_each(|g| *g /= n);
    for (g, w) in gw.as_mut_slice().iter_mut().zip(weights.as_slice()) {
        *g = *g / n + lambda * w;
    }
    let w = weights.as_slice();
    (nll / n + 0.5 * lambda * dot(w, w), gw, gb)
}

const MAX_HALVINGS: usize = 60;

/// Armijo backtracking along `-grad` on one block. Returns the accepted
/// step, or 0 when no step decreases the objective.
fn backtrack<F>(start: f64, current: f64, grad_sq: f64, mut eval: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut t = start;
    for _ in 0..MAX_HALVINGS {
        if eval(t) <= current - 0.5 * t * grad_sq {
            return t;
        }
        t *= 0.5;
    }
    0.0
}

/// Full-batch gradient descent from zero, alternating a backtracked step on
/// the weights with one on the biases. Every accepted step lowers the
/// objective, so the recorded losses are non-increasing.
pub fn train_logreg(
    features: &[(Vec<f64>, SentimentLabel)],
    scheme: LabelScheme,
    config: LogRegConfig,
) -> Result<(LogRegModel, LogRegTrace)> {
    if config.lambda.is_nan() || config.lambda < 0.0 || config.tol.is_nan() || config.tol <= 0.0 {
        return Err(Error::invalid("logreg", "need lambda >= 0 and tol > 0"));
    }
    let dim = features.first().map(|(x, _)| x.len()).unwrap_or(0);
    let mut data = Vec::with_capacity(features.len());
    let mut seen = vec![false; scheme.num_classes()];
    for (x, label) in features {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.len(),
            });
        }
        let y = scheme.index_of(*label).ok_or(Error::LabelOutsideScheme {
            label: label.token(),
            scheme: scheme.name(),
        })?;
        seen[y] = true;
        data.push((x.as_slice(), y));
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::invalid("features", "need examples of at least two classes"));
    }
    if dim == 0 {
        return Err(Error::invalid("features", "zero-length feature vectors"));
    }

    let k = scheme.num_classes();
    let lambda = config.lambda;
    let mut weights = Matrix::zeros(k, dim);
    let mut bias = vec![0.0; k];
    let mut step_w = 1.0f64;
    let mut step_b = 1.0f64;
    let mut trace = LogRegTrace {
        losses: Vec::new(),
        converged: false,
        iterations: 0,
    };
    let inf_norm = |gw: &Matrix, gb: &[f64]| {
        gw.as_slice()
            .iter()
            .chain(gb)
            .fold(0.0f64, |m, g| m.max(g.abs()))
    };

    for _ in 0..config.max_iters {
        let (loss, gw, gb_now) = logreg_objective(&weights, &bias, &data, lambda);
        if inf_norm(&gw, &gb_now) < config.tol {
            trace.converged = true;
            break;
        }
        trace.iterations += 1;

        let gw_sq = dot(gw.as_slice(), gw.as_slice());
        let mut trial = weights.clone();
        let t = backtrack((step_w * 2.0).min(1e6), loss, gw_sq, |t| {
            for ((w, g), o) in trial.as_mut_slice().iter_mut().zip(gw.as_slice()).zip(weights.as_slice()) {
                *w = o - t * g;
            }
            objective_value(&trial, &bias, &data, lambda)
        });
        if t > 0.0 {
            for (w, g) in weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                *w -= t * g;
            }
            step_w = t;
        }

        let (loss, _, gb) = logreg_objective(&weights, &bias, &data, lambda);
        let gb_sq = dot(&gb, &gb);
        let mut trial_b = bias.clone();
        let t = backtrack((step_b * 2.0).min(1e6), loss, gb_sq, |t| {
            for ((b, g), o) in trial_b.iter_mut().zip(&gb).zip(&bias) {
                *b = o - t * g;
            }
            objective_value(&weights, &trial_b, &data, lambda)
        });
        if t > 0.0 {
            for (b, g) in bias.iter_mut().zip(&gb) {
                *b -= t * g;
            }
            step_b = t;
        }
        trace.losses.push(objective_value(&weights, &bias, &data, lambda));
    }
    if !trace.converged {
        log::warn!("logistic regression stopped at max_iters={} before reaching tol", config.max_iters);
    }
    Ok((
        LogRegModel {
            scheme,
            weights,
            bias,
            lambda,
        },
        trace,
    ))
}

impl LogRegModel {
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.weights.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.cols(),
                actual: x.len(),
            });
        }
        Ok(self
            .bias
            .iter()
            .enumerate()
            .map(|(k, b)| b + dot(self.weights.row(k), x))
            .collect())
    }
}

/// Class with the highest score; canonical order breaks ties.
pub fn predict_from_scores(scheme: LabelScheme, scores: &[f64]) -> SentimentLabel {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    scheme.classes()[best]
}

pub fn predict_logreg(model: &LogRegModel, x: &[f64]) -> Result<SentimentLabel> {
    Ok(predict_from_scores(model.scheme, &model.scores(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentLabel::*;

    fn table() -> WordVectorTable {
        let mut t = WordVectorTable::new(2).unwrap();
        t.insert("a", &[1.0, 0.0]).unwrap();
        t.insert("b", &[0.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn averaging_examples() {
        let t = table();
        assert_eq!(average_sentence_vector("a b", &t), vec![0.5, 0.5]);
        assert_eq!(average_sentence_vector("a", &t), vec![1.0, 0.0]);
        assert_eq!(average_with_count("x y", &t), (vec![0.0, 0.0], 0));
        assert_eq!(average_sentence_vector("a zzz b", &t), vec![0.5, 0.5]);
    }

    #[test]
    fn table_rejects_bad_rows() {
        let mut t = table();
        assert!(t.insert("c", &[1.0]).is_err());
        assert!(t.insert("a", &[1.0, 1.0]).is_err());
        assert!(WordVectorTable::new(0).is_err());
    }

    #[test]
    fn separable_toy_is_learned() {
        let data = vec![(vec![1.0, 0.0], Positive), (vec![-1.0, 0.0], Negative)];
        let (m, trace) = train_logreg(&data, LabelScheme::ThreeClass, LogRegConfig::default()).unwrap();
        assert!(trace.converged || trace.iterations > 0);
        assert_eq!(predict_logreg(&m, &[1.0, 0.0]).unwrap(), Positive);
        assert_eq!(predict_logreg(&m, &[-1.0, 0.0]).unwrap(), Negative);
    }

    #[test]
    fn heavy_regularization_collapses_to_prior() {
        let data = vec![
            (vec![1.0, 0.0], Positive),
            (vec![0.9, 0.1], Positive),
            (vec![-1.0, 0.0], Negative),
        ];
        let cfg = LogRegConfig { lambda: 1e6, ..Default::default() };
        let (m, _) = train_logreg(&data, LabelScheme::ThreeClass, cfg).unwrap();
        assert!(m.weights.as_slice().iter().all(|w| w.abs() < 1e-3));
        for x in [[1.0, 0.0], [-1.0, 0.0], [0.0, 5.0]] {
            assert_eq!(predict_logreg(&m, &x).unwrap(), Positive);
        }
    }

    #[test]
    fn zero_features_predict_majority() {
        let data = vec![
            (vec![0.0, 0.0], Neutral),
            (vec![0.0, 0.0], Neutral),
            (vec![0.0, 0.0], Negative),
        ];
        let (m, _) = train_logreg(&data, LabelScheme::ThreeClass, LogRegConfig::default()).unwrap();
        assert!(m.weights.as_slice().iter().all(|&w| w == 0.0));
        assert_eq!(predict_logreg(&m, &[0.0, 0.0]).unwrap(), Neutral);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = vec![(vec![1.0], Positive), (vec![2.0], Positive)];
        assert!(train_logreg(&data, LabelScheme::ThreeClass, LogRegConfig::default()).is_err());
    }

    #[test]
    fn prediction_ties_and_argmax() {
        assert_eq!(predict_from_scores(LabelScheme::ThreeClass, &[2.0, 1.0, 0.5]), Negative);
        assert_eq!(predict_from_scores(LabelScheme::ThreeClass, &[1.0, 3.0, 3.0]), Neutral);
        let data = vec![(vec![1.0, 0.0], Positive), (vec![-1.0, 0.0], Negative)];
        let (m, _) = train_logreg(&data, LabelScheme::ThreeClass, LogRegConfig::default()).unwrap();
        assert!(predict_logreg(&m, &[1.0]).is_err());
    }

    #[test]
    fn losses_never_increase() {
        let data = vec![
            (vec![1.0, 0.2], Positive),
            (vec![0.1, 1.0], Neutral),
            (vec![-1.0, 0.3], Negative),
            (vec![0.8, 0.9], Neutral),
        ];
        let (_, trace) = train_logreg(&data, LabelScheme::ThreeClass, LogRegConfig::default()).unwrap();
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0]));
    }
}
