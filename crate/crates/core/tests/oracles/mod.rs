//! Test-side oracles written independently of the library's hot paths.
//!
//! `naive_encode` is a direct transcription of the LSTM recurrences with
//! plain loops and std math; the finite-difference checker perturbs one
//! parameter at a time and differentiates that naive forward pass.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use snasa_core::encoder::{EncoderDims, SiameseEncoderParams};
use snasa_core::trainer::{backward_pair, Gradients, Margin, PairLabel, TrainingPair};
use snasa_core::TrigramSequence;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Final hidden state of one direction over `ids` (already in reading order).
fn naive_direction(
    wx: &[f64],
    wh: &[f64],
    b: &[f64],
    emb: &[f64],
    e: usize,
    h: usize,
    ids: &[u32],
) -> Vec<f64> {
    let mut hid = vec![0.0; h];
    let mut cell = vec![0.0; h];
    for &id in ids {
        let x = &emb[id as usize * e..(id as usize + 1) * e];
        let mut z = vec![0.0; 4 * h];
        for r in 0..4 * h {
            let mut acc = b[r];
            for c in 0..e {
                acc += wx[r * e + c] * x[c];
            }
            for c in 0..h {
                acc += wh[r * h + c] * hid[c];
            }
            z[r] = acc;
        }
        for k in 0..h {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[h + k]);
            let g = z[2 * h + k].tanh();
            let o = sigmoid(z[3 * h + k]);
            cell[k] = f * cell[k] + i * g;
            hid[k] = o * cell[k].tanh();
        }
    }
    hid
}

/// `(pre-activation, output)` of the encoder, computed naively.
pub fn naive_encode_full(p: &SiameseEncoderParams, ids: &[u32]) -> (Vec<f64>, Vec<f64>) {
    let dims = p.dims();
    let (e, h, d) = (dims.embed_dim, dims.hidden_dim, dims.output_dim);
    let emb = p.embedding().as_slice();
    let fw_cell = p.forward_cell();
    let bw_cell = p.backward_cell();
    let fw = naive_direction(
        fw_cell.input_weights().as_slice(),
        fw_cell.recurrent_weights().as_slice(),
        fw_cell.bias(),
        emb,
        e,
        h,
        ids,
    );
    let rev: Vec<u32> = ids.iter().rev().copied().collect();
    let bw = naive_direction(
        bw_cell.input_weights().as_slice(),
        bw_cell.recurrent_weights().as_slice(),
        bw_cell.bias(),
        emb,
        e,
        h,
        &rev,
    );
    let concat: Vec<f64> = fw.into_iter().chain(bw).collect();
    let w = p.dense_weights().as_slice();
    let pre: Vec<f64> = (0..d)
        .map(|r| p.dense_bias()[r] + (0..2 * h).map(|c| w[r * 2 * h + c] * concat[c]).sum::<f64>())
        .collect();
    let out = pre.iter().map(|&v| v.max(0.0)).collect();
    (pre, out)
}

pub fn naive_encode(p: &SiameseEncoderParams, ids: &[u32]) -> Vec<f64> {
    naive_encode_full(p, ids).1
}

pub fn naive_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn naive_loss(c: f64, label: PairLabel, m: f64) -> f64 {
    match label {
        PairLabel::Similar => 1.0 - c,
        PairLabel::Dissimilar => (c - m).max(0.0),
    }
}

pub fn naive_pair_loss(p: &SiameseEncoderParams, pair: &TrainingPair, m: f64) -> f64 {
    let a = naive_encode(p, &pair.poor.ids);
    let b = naive_encode(p, &pair.rich.ids);
    naive_loss(naive_cosine(&a, &b), pair.label, m)
}

/// Random parameters with every entry uniform in `[-scale, scale]`, so
/// biases and the dense layer are not at their special init values.
pub fn random_params(dims: EncoderDims, seed: u64, scale: f64) -> SiameseEncoderParams {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..dims.num_parameters())
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    SiameseEncoderParams::from_flat(dims, &values).expect("sized to dims")
}

pub fn random_ids(rng: &mut impl Rng, vocab: usize, min_len: usize, max_len: usize) -> Vec<u32> {
    let n = rng.gen_range(min_len..=max_len);
    (0..n).map(|_| rng.gen_range(0..vocab as u32)).collect()
}

pub fn make_pair(poor: Vec<u32>, rich: Vec<u32>, label: PairLabel) -> TrainingPair {
    TrainingPair {
        poor: TrigramSequence::new(poor, "p"),
        rich: TrigramSequence::new(rich, "r"),
        label,
    }
}

/// Which loss region a pair sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Similar,
    DissimilarActive,
    DissimilarFlat,
}

/// Distance of the pair from every kink of the loss surface: ReLU
/// pre-activations at 0 and the hinge at `c = m`.
pub fn kink_distance(p: &SiameseEncoderParams, pair: &TrainingPair, m: f64) -> f64 {
    let (pa, oa) = naive_encode_full(p, &pair.poor.ids);
    let (pb, ob) = naive_encode_full(p, &pair.rich.ids);
    let relu = pa.iter().chain(&pb).fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let hinge = match pair.label {
        PairLabel::Similar => f64::INFINITY,
        PairLabel::Dissimilar => (naive_cosine(&oa, &ob) - m).abs(),
    };
    relu.min(hinge)
}

#[derive(Debug, Clone)]
pub struct FdOutcome {
    pub checked: usize,
    pub failures: Vec<String>,
    pub max_rel_error: f64,
}

/// Compares `backward_pair` against central differences of the naive loss.
/// An entry passes when its relative error is below `rel_tol`, or, if the
/// analytic value is below `small`, its absolute error is below `abs_tol`.
pub fn finite_difference_check(
    params: &SiameseEncoderParams,
    pair: &TrainingPair,
    margin: f64,
    step: f64,
    rel_tol: f64,
    small: f64,
    abs_tol: f64,
) -> FdOutcome {
    let mut grads = Gradients::zeros(params.dims());
    backward_pair(pair, params, Margin::new(margin).unwrap(), &mut grads).unwrap();
    let mut probe = params.clone();
    let mut outcome = FdOutcome {
        checked: 0,
        failures: Vec::new(),
        max_rel_error: 0.0,
    };
    let analytic: Vec<(String, Vec<f64>)> = grads
        .blocks()
        .iter()
        .map(|b| (b.name.to_string(), b.values.to_vec()))
        .collect();
    for (bi, (name, values)) in analytic.iter().enumerate() {
        for (k, &a) in values.iter().enumerate() {
            let original = probe.blocks_mut()[bi].values[k];
            probe.blocks_mut()[bi].values[k] = original + step;
            let up = naive_pair_loss(&probe, pair, margin);
            probe.blocks_mut()[bi].values[k] = original - step;
            let down = naive_pair_loss(&probe, pair, margin);
            probe.blocks_mut()[bi].values[k] = original;
            let fd = (up - down) / (2.0 * step);
            let abs_err = (fd - a).abs();
            let ok = if a.abs() < small {
                abs_err < abs_tol
            } else {
                let rel = abs_err / a.abs().max(fd.abs());
                outcome.max_rel_error = outcome.max_rel_error.max(rel);
                rel < rel_tol
            };
            outcome.checked += 1;
            if !ok {
                outcome
                    .failures
                    .push(format!("{name}[{k}]: analytic {a:e} vs numeric {fd:e}"));
            }
        }
    }
    outcome
}

/// Random pairs on `params` covering every loss region, each at least
/// `min_kink` away from a kink. Returns `(pair, margin, region)`.
pub fn pairs_covering_regions(
    params: &SiameseEncoderParams,
    rng: &mut impl Rng,
    per_region: usize,
    min_kink: f64,
) -> Vec<(TrainingPair, f64, Region)> {
    let v = params.dims().vocab_size;
    let mut out = Vec::new();
    for region in [Region::Similar, Region::DissimilarActive, Region::DissimilarFlat] {
        let mut found = 0;
        let mut attempts = 0;
        while found < per_region {
            attempts += 1;
            assert!(attempts < 10_000, "could not sample a {region:?} pair");
            let a = random_ids(rng, v, 2, 7);
            let b = random_ids(rng, v, 2, 7);
            let c = naive_cosine(&naive_encode(params, &a), &naive_encode(params, &b));
            let (label, m) = match region {
                Region::Similar => (PairLabel::Similar, 0.5),
                // Put the hinge well below or above c.
                Region::DissimilarActive => (PairLabel::Dissimilar, c - 0.05),
                Region::DissimilarFlat => (PairLabel::Dissimilar, c + 0.05),
            };
            if !(m > 0.0 && m < 1.0) || c == 0.0 {
                continue;
            }
            let pair = make_pair(a, b, label);
            if kink_distance(params, &pair, m) < min_kink {
                continue;
            }
            out.push((pair, m, region));
            found += 1;
        }
    }
    out
}
