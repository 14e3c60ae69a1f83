//! Exact gradients of the contrastive loss, backpropagated through time into
//! the one shared parameter record.

use alloc::vec::Vec;

use super::loss::{Margin, PairLabel};
use crate::encoder::{
    backprop_encoding, cosine, encode_trace, encode_trace_with, EncodeTrace, EncoderDims,
    InputGateGrads, InputProjections, ParamBlock, ParamBlockMut, SiameseEncoderParams,
};
use crate::featurizer::TrigramSequence;
use crate::linalg::{dot, norm};
use crate::{Error, Result};

/// Structural mirror of [`SiameseEncoderParams`] holding gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub(crate) SiameseEncoderParams);

impl Gradients {
    pub fn zeros(dims: EncoderDims) -> Self {
        Gradients(SiameseEncoderParams::zeros(dims))
    }

    pub fn dims(&self) -> EncoderDims {
        self.0.dims()
    }

    pub fn blocks(&self) -> [ParamBlock<'_>; 9] {
        self.0.blocks()
    }

    pub fn blocks_mut(&mut self) -> [ParamBlockMut<'_>; 9] {
        self.0.blocks_mut()
    }

    /// The gradients viewed as a parameter record.
    pub fn as_params(&self) -> &SiameseEncoderParams {
        &self.0
    }

    pub fn clear(&mut self) {
        for b in self.blocks_mut() {
            b.values.fill(0.0);
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch("gradients"));
        }
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.values.iter_mut().zip(b.values) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn global_norm(&self) -> f64 {
        let sq: f64 = self.blocks().iter().map(|b| dot(b.values, b.values)).sum();
        libm::sqrt(sq)
    }

    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.0.first_non_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks().iter().all(|b| b.values.iter().all(|&v| v == 0.0))
    }
}

/// `(p_i, r_i, y_i)`: a poor-language sentence, a rich-language sentence and
/// whether they share a sentiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub poor: TrigramSequence,
    pub rich: TrigramSequence,
    pub label: PairLabel,
}

/// An ordered batch; its similar pairs form `C` and dissimilar pairs `C'`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairBatch {
    pub pairs: Vec<TrainingPair>,
}

impl PairBatch {
    pub fn new(pairs: Vec<TrainingPair>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(|C|, |C'|)`
    pub fn partition_sizes(&self) -> (usize, usize) {
        let similar = self
            .pairs
            .iter()
            .filter(|p| p.label == PairLabel::Similar)
            .count();
        (similar, self.pairs.len() - similar)
    }

    fn as_refs(&self) -> Vec<PairRef<'_>> {
        self.pairs
            .iter()
            .map(|p| PairRef {
                poor: &p.poor.ids,
                rich: &p.rich.ids,
                label: p.label,
            })
            .collect()
    }
}

/// Borrowed view of a pair used in the hot loop.
#[derive(Debug, Clone, Copy)]
pub struct PairRef<'a> {
    pub poor: &'a [u32],
    pub rich: &'a [u32],
    pub label: PairLabel,
}

/// Loss of one pair from its forward pass only.
pub fn pair_loss(pair: PairRef<'_>, params: &SiameseEncoderParams, margin: Margin) -> Result<f64> {
    let p = encode_trace(pair.poor, params)?;
    let r = encode_trace(pair.rich, params)?;
    Ok(pair.label.loss(cosine(&p.output, &r.output), margin))
}

/// Total and per-pair loss; the total is summed in batch order.
pub fn batch_loss(
    batch: &PairBatch,
    params: &SiameseEncoderParams,
    margin: Margin,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let per_pair = batch
        .as_refs()
        .into_iter()
        .map(|p| pair_loss(p, params, margin))
        .collect::<Result<Vec<_>>>()?;
    let total = per_pair.iter().fold(0.0, |acc, l| acc + l);
    Ok((total, per_pair))
}

/// Accumulates the gradient of one pair's loss into `grads` and returns the
/// loss. Both towers add into the same accumulator.
pub fn backward_pair(
    pair: &TrainingPair,
    params: &SiameseEncoderParams,
    margin: Margin,
    grads: &mut Gradients,
) -> Result<f64> {
    backward_ref(
        PairRef {
            poor: &pair.poor.ids,
            rich: &pair.rich.ids,
            label: pair.label,
        },
        params,
        margin,
        grads,
    )
}

/// d cos(a, b) / d a, scaled by `slope`.
fn cosine_grad(slope: f64, a: &[f64], b: &[f64], na: f64, nb: f64, cos: f64) -> Vec<f64> {
    let cross = na * nb;
    let self_sq = na * na;
    a.iter()
        .zip(b)
        .map(|(&ai, &bi)| slope * (bi / cross - cos * ai / self_sq))
        .collect()
}

pub(crate) fn backward_ref(
    pair: PairRef<'_>,
    params: &SiameseEncoderParams,
    margin: Margin,
    grads: &mut Gradients,
) -> Result<f64> {
    if grads.dims() != params.dims() {
        return Err(Error::ShapeMismatch("gradients"));
    }
    let proj = InputProjections::new(params, [pair.poor, pair.rich])?;
    let mut gate_grads = InputGateGrads::zeros(&proj);
    let loss = accumulate_pair(pair, params, margin, &proj, &mut grads.0, &mut gate_grads)?;
    gate_grads.apply(&proj, params, &mut grads.0);
    if let Some(block) = grads.first_non_finite() {
        return Err(Error::NonFinite(block));
    }
    Ok(loss)
}

/// Forward and backward for one pair; input-projection gradients are left
/// in `gate_grads`.
fn accumulate_pair(
    pair: PairRef<'_>,
    params: &SiameseEncoderParams,
    margin: Margin,
    proj: &InputProjections,
    grads: &mut SiameseEncoderParams,
    gate_grads: &mut InputGateGrads,
) -> Result<f64> {
    let tp = encode_trace_with(pair.poor, params, proj)?;
    let tr = encode_trace_with(pair.rich, params, proj)?;
    let (sp, sr) = (&tp.output, &tr.output);
    let c = cosine(sp, sr);
    let loss = pair.label.loss(c, margin);
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    let slope = pair.label.slope(c, margin);
    let (np, nr) = (norm(sp), norm(sr));
    // A zero-norm side makes the cosine a constant 0 locally.
    if slope == 0.0 || np == 0.0 || nr == 0.0 {
        return Ok(loss);
    }
    let dp = cosine_grad(slope, sp, sr, np, nr, c);
    let dr = cosine_grad(slope, sr, sp, nr, np, c);
    if dp.iter().chain(&dr).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("embedding gradient"));
    }
    // A fixed tower order (by sequence) makes the accumulated result
    // independent of which tower received which sentence.
    let mut towers: [(&EncodeTrace, &[u32], Vec<f64>); 2] =
        [(&tp, pair.poor, dp), (&tr, pair.rich, dr)];
    if towers[1].1 < towers[0].1 {
        towers.swap(0, 1);
    }
    for (trace, _, d) in &towers {
        backprop_encoding(trace, params, d, grads, gate_grads);
    }
    Ok(loss)
}

/// Pairs per private accumulator. Fixed so that the merged batch gradient is
/// the same whether chunks run sequentially or in parallel.
pub const CHUNK_PAIRS: usize = 8;

struct ChunkResult {
    grads: SiameseEncoderParams,
    gate_grads: InputGateGrads,
    losses: Vec<f64>,
}

fn chunk_gradients(
    chunk: &[PairRef<'_>],
    params: &SiameseEncoderParams,
    margin: Margin,
    proj: &InputProjections,
) -> Result<ChunkResult> {
    let mut grads = SiameseEncoderParams::zeros(params.dims());
    let mut gate_grads = InputGateGrads::zeros(proj);
    let losses = chunk
        .iter()
        .map(|&p| accumulate_pair(p, params, margin, proj, &mut grads, &mut gate_grads))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChunkResult {
        grads,
        gate_grads,
        losses,
    })
}

/// Gradient of the summed batch loss plus per-pair losses in batch order.
///
/// Pairs are processed in fixed-size chunks with private accumulators that
/// are merged in chunk order; with the `parallel` feature the chunks run on
/// the rayon pool and the result is bit-identical to the sequential path.
pub fn batch_gradients(
    pairs: &[PairRef<'_>],
    params: &SiameseEncoderParams,
    margin: Margin,
) -> Result<(Gradients, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let proj = InputProjections::new(params, pairs.iter().flat_map(|p| [p.poor, p.rich]))?;
    #[cfg(feature = "parallel")]
    let parts: Vec<ChunkResult> = {
        use rayon::prelude::*;
        pairs
            .par_chunks(CHUNK_PAIRS)
            .map(|c| chunk_gradients(c, params, margin, &proj))
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<ChunkResult> = pairs
        .chunks(CHUNK_PAIRS)
        .map(|c| chunk_gradients(c, params, margin, &proj))
        .collect::<Result<Vec<_>>>()?;

    let mut parts = parts.into_iter();
    // Non-empty input guarantees at least one chunk.
    let first = parts.next().ok_or(Error::EmptyBatch)?;
    let mut total = Gradients(first.grads);
    let mut gate_grads = first.gate_grads;
    let mut losses = first.losses;
    for part in parts {
        total.add_assign(&Gradients(part.grads))?;
        gate_grads.add_assign(&part.gate_grads);
        losses.extend(part.losses);
    }
    gate_grads.apply(&proj, params, &mut total.0);
    if let Some(block) = total.first_non_finite() {
        return Err(Error::NonFinite(block));
    }
    Ok((total, losses))
}
