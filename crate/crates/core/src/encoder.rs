//! The shared sentence encoder.
//!
//! A sentence's trigram ids are looked up in the embedding table and read by
//! two LSTMs, one left to right and one right to left, both from zero state.
//! The two final hidden states are concatenated and projected:
//!
//! ```text
//! s = max(0, W [fw; bw] + b)
//! ```
//!
//! There is exactly one [`SiameseEncoderParams`] per model; both towers of
//! the siamese pair are calls to [`encode`] with that same record.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::featurizer::{TrigramSequence, TrigramVocabulary};
use crate::linalg::{dot, gemv_acc, gemv_t_acc, norm, outer_acc, sigmoid};
pub use crate::linalg::Matrix;
use crate::{rng, Error, Result};

pub const DEFAULT_EMBED_DIM: usize = 64;
pub const DEFAULT_HIDDEN_DIM: usize = 64;
pub const DEFAULT_OUTPUT_DIM: usize = 128;

/// Number of LSTM gates. Stacked gate rows are ordered input, forget, cell
/// candidate, output; each block is `hidden_dim` rows.
pub const GATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

impl EncoderDims {
    pub fn new(vocab_size: usize, embed_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        Self {
            vocab_size,
            embed_dim,
            hidden_dim,
            output_dim,
        }
    }

    /// Default layer sizes for a vocabulary of `vocab_size` ids.
    pub fn with_vocab(vocab_size: usize) -> Self {
        Self::new(vocab_size, DEFAULT_EMBED_DIM, DEFAULT_HIDDEN_DIM, DEFAULT_OUTPUT_DIM)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("output_dim", self.output_dim),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "dimension must be at least 1"));
            }
        }
        Ok(())
    }

    /// `(name, rows, cols)` of every parameter block, in storage order.
    pub fn block_shapes(&self) -> [(&'static str, usize, usize); 9] {
        let (v, e, h, d) = (self.vocab_size, self.embed_dim, self.hidden_dim, self.output_dim);
        [
            ("embedding", v, e),
            ("forward.input_weights", GATES * h, e),
            ("forward.recurrent_weights", GATES * h, h),
            ("forward.bias", GATES * h, 1),
            ("backward.input_weights", GATES * h, e),
            ("backward.recurrent_weights", GATES * h, h),
            ("backward.bias", GATES * h, 1),
            ("dense.weights", d, 2 * h),
            ("dense.bias", d, 1),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.block_shapes().iter().map(|(_, r, c)| r * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    pub(crate) input_weights: Matrix,
    pub(crate) recurrent_weights: Matrix,
    pub(crate) bias: Vec<f64>,
}

impl LstmCellParams {
    fn zeros(embed_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_weights: Matrix::zeros(GATES * hidden_dim, embed_dim),
            recurrent_weights: Matrix::zeros(GATES * hidden_dim, hidden_dim),
            bias: vec![0.0; GATES * hidden_dim],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.bias.len() / GATES
    }

    /// Stacked `4h x e` input weights.
    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    /// Stacked `4h x h` recurrent weights.
    pub fn recurrent_weights(&self) -> &Matrix {
        &self.recurrent_weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

/// Every learnable parameter of the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseEncoderParams {
    pub(crate) dims: EncoderDims,
    pub(crate) embedding: Matrix,
    pub(crate) forward: LstmCellParams,
    pub(crate) backward: LstmCellParams,
    pub(crate) dense_weights: Matrix,
    pub(crate) dense_bias: Vec<f64>,
}

impl SiameseEncoderParams {
    pub(crate) fn zeros(dims: EncoderDims) -> Self {
        let (v, e, h, d) = (dims.vocab_size, dims.embed_dim, dims.hidden_dim, dims.output_dim);
        Self {
            dims,
            embedding: Matrix::zeros(v, e),
            forward: LstmCellParams::zeros(e, h),
            backward: LstmCellParams::zeros(e, h),
            dense_weights: Matrix::zeros(d, 2 * h),
            dense_bias: vec![0.0; d],
        }
    }

    /// Rebuilds parameters from the concatenation of all blocks in
    /// [`EncoderDims::block_shapes`] order.
    pub fn from_flat(dims: EncoderDims, values: &[f64]) -> Result<Self> {
        dims.validate()?;
        let expected = dims.num_parameters();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        let mut p = Self::zeros(dims);
        let mut offset = 0;
        for block in p.blocks_mut() {
            let n = block.values.len();
            block.values.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(p)
    }

    pub fn dims(&self) -> EncoderDims {
        self.dims
    }

    pub fn embedding(&self) -> &Matrix {
        &self.embedding
    }

    pub fn forward_cell(&self) -> &LstmCellParams {
        &self.forward
    }

    pub fn backward_cell(&self) -> &LstmCellParams {
        &self.backward
    }

    /// `d x 2h` projection applied to `[fw; bw]`.
    pub fn dense_weights(&self) -> &Matrix {
        &self.dense_weights
    }

    pub fn dense_bias(&self) -> &[f64] {
        &self.dense_bias
    }

    pub fn blocks(&self) -> [ParamBlock<'_>; 9] {
        let names = self.dims.block_shapes().map(|(n, _, _)| n);
        [
            ParamBlock { name: names[0], values: self.embedding.as_slice() },
            ParamBlock { name: names[1], values: self.forward.input_weights.as_slice() },
            ParamBlock { name: names[2], values: self.forward.recurrent_weights.as_slice() },
            ParamBlock { name: names[3], values: &self.forward.bias },
            ParamBlock { name: names[4], values: self.backward.input_weights.as_slice() },
            ParamBlock { name: names[5], values: self.backward.recurrent_weights.as_slice() },
            ParamBlock { name: names[6], values: &self.backward.bias },
            ParamBlock { name: names[7], values: self.dense_weights.as_slice() },
            ParamBlock { name: names[8], values: &self.dense_bias },
        ]
    }

    pub fn blocks_mut(&mut self) -> [ParamBlockMut<'_>; 9] {
        let names = self.dims.block_shapes().map(|(n, _, _)| n);
        [
            ParamBlockMut { name: names[0], values: self.embedding.as_mut_slice() },
            ParamBlockMut { name: names[1], values: self.forward.input_weights.as_mut_slice() },
            ParamBlockMut { name: names[2], values: self.forward.recurrent_weights.as_mut_slice() },
            ParamBlockMut { name: names[3], values: &mut self.forward.bias },
            ParamBlockMut { name: names[4], values: self.backward.input_weights.as_mut_slice() },
            ParamBlockMut { name: names[5], values: self.backward.recurrent_weights.as_mut_slice() },
            ParamBlockMut { name: names[6], values: &mut self.backward.bias },
            ParamBlockMut { name: names[7], values: self.dense_weights.as_mut_slice() },
            ParamBlockMut { name: names[8], values: &mut self.dense_bias },
        ]
    }

    /// Name of the first block holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.blocks()
            .into_iter()
            .find(|b| b.values.iter().any(|v| !v.is_finite()))
            .map(|b| b.name)
    }

    /// CRC-32 of all parameters as little-endian bytes in block order.
    pub fn fingerprint(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for b in self.blocks() {
            for v in b.values {
                h.update(&v.to_le_bytes());
            }
        }
        h.finalize()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamBlock<'a> {
    pub name: &'static str,
    pub values: &'a [f64],
}

#[derive(Debug)]
pub struct ParamBlockMut<'a> {
    pub name: &'static str,
    pub values: &'a mut [f64],
}

fn uniform_fill(rng: &mut rng::Rng, values: &mut [f64], fan_in: usize, fan_out: usize) {
    let r = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    for v in values {
        *v = rng.gen_range(-r..=r);
    }
}

/// Glorot-uniform weights (bound computed per gate matrix), zero biases,
/// forget-gate biases one. Deterministic in `(dims, seed)`.
pub fn init_params(dims: EncoderDims, seed: u64) -> Result<SiameseEncoderParams> {
    dims.validate()?;
    let (v, e, h, d) = (dims.vocab_size, dims.embed_dim, dims.hidden_dim, dims.output_dim);
    let mut p = SiameseEncoderParams::zeros(dims);
    let mut rng = rng::seeded(seed, 0);
    uniform_fill(&mut rng, p.embedding.as_mut_slice(), v, e);
    for cell in [&mut p.forward, &mut p.backward] {
        uniform_fill(&mut rng, cell.input_weights.as_mut_slice(), e, h);
        uniform_fill(&mut rng, cell.recurrent_weights.as_mut_slice(), h, h);
        cell.bias[h..2 * h].fill(1.0);
    }
    uniform_fill(&mut rng, p.dense_weights.as_mut_slice(), 2 * h, d);
    Ok(p)
}

/// A sentence's point in the sentiment space. Entries are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentEmbedding {
    pub values: Vec<f64>,
    pub source: String,
}

impl SentimentEmbedding {
    pub fn new(values: Vec<f64>, source: impl Into<String>) -> Self {
        Self {
            values,
            source: source.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Input-to-gate projections `W_x e[id]` of both directions for a sorted
/// set of ids. A projection depends only on the id, so a batch computes it
/// once per distinct trigram instead of once per time step.
#[derive(Debug, Clone)]
pub(crate) struct InputProjections {
    ids: Vec<u32>,
    width: usize,
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl InputProjections {
    /// Projections for every id in `sequences`, which are validated.
    pub(crate) fn new<'a, I>(params: &SiameseEncoderParams, sequences: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [u32]>,
    {
        let mut ids = Vec::new();
        for seq in sequences {
            check_sequence(seq, &params.dims)?;
            ids.extend_from_slice(seq);
        }
        ids.sort_unstable();
        ids.dedup();
        let width = GATES * params.dims.hidden_dim;
        let mut forward = vec![0.0; ids.len() * width];
        let mut backward = vec![0.0; ids.len() * width];
        for (s, &id) in ids.iter().enumerate() {
            let x = params.embedding.row(id as usize);
            gemv_acc(&params.forward.input_weights, x, &mut forward[s * width..(s + 1) * width]);
            gemv_acc(&params.backward.input_weights, x, &mut backward[s * width..(s + 1) * width]);
        }
        Ok(Self {
            ids,
            width,
            forward,
            backward,
        })
    }

    fn slots(&self, ids: &[u32]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.ids
                    .binary_search(id)
                    .map_err(|_| Error::ShapeMismatch("input projections"))
            })
            .collect()
    }
}

/// Gate gradients summed per projection slot; [`InputGateGrads::apply`]
/// turns them into input-weight and embedding gradients.
#[derive(Debug, Clone)]
pub(crate) struct InputGateGrads {
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl InputGateGrads {
    pub(crate) fn zeros(proj: &InputProjections) -> Self {
        Self {
            forward: vec![0.0; proj.forward.len()],
            backward: vec![0.0; proj.backward.len()],
        }
    }

    pub(crate) fn add_assign(&mut self, other: &InputGateGrads) {
        for (a, b) in self
            .forward
            .iter_mut()
            .chain(self.backward.iter_mut())
            .zip(other.forward.iter().chain(&other.backward))
        {
            *a += b;
        }
    }

    pub(crate) fn apply(
        &self,
        proj: &InputProjections,
        params: &SiameseEncoderParams,
        grads: &mut SiameseEncoderParams,
    ) {
        let w = proj.width;
        let mut dx = vec![0.0; params.dims.embed_dim];
        for (s, &id) in proj.ids.iter().enumerate() {
            let id = id as usize;
            for (sums, cell, grad_cell) in [
                (&self.forward, &params.forward, &mut grads.forward),
                (&self.backward, &params.backward, &mut grads.backward),
            ] {
                let dz = &sums[s * w..(s + 1) * w];
                if dz.iter().all(|&g| g == 0.0) {
                    continue;
                }
                outer_acc(&mut grad_cell.input_weights, dz, params.embedding.row(id));
                dx.fill(0.0);
                gemv_t_acc(&cell.input_weights, dz, &mut dx);
                for (ge, g) in grads.embedding.row_mut(id).iter_mut().zip(&dx) {
                    *ge += g;
                }
            }
        }
    }
}

/// Activations of one LSTM direction, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct DirectionTrace {
    /// Projection slots of the ids, in processing order.
    pub(crate) slots: Vec<usize>,
    /// Post-activation gates `[i, f, g, o]`, one `4h` row per step.
    pub(crate) gates: Vec<f64>,
    /// Cell states; row 0 is the zero initial state.
    pub(crate) cells: Vec<f64>,
    pub(crate) cell_tanh: Vec<f64>,
    /// Hidden states; row 0 is the zero initial state.
    pub(crate) hiddens: Vec<f64>,
}

impl DirectionTrace {
    pub(crate) fn final_hidden(&self, h: usize) -> &[f64] {
        &self.hiddens[self.slots.len() * h..]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EncodeTrace {
    pub(crate) forward: DirectionTrace,
    pub(crate) backward: DirectionTrace,
    pub(crate) concat: Vec<f64>,
    pub(crate) pre_activation: Vec<f64>,
    pub(crate) output: Vec<f64>,
}

fn run_direction(cell: &LstmCellParams, projections: &[f64], slots: Vec<usize>) -> DirectionTrace {
    let h = cell.hidden_dim();
    let w = GATES * h;
    let steps = slots.len();
    let mut trace = DirectionTrace {
        slots,
        gates: Vec::with_capacity(steps * w),
        cells: vec![0.0; h],
        cell_tanh: Vec::with_capacity(steps * h),
        hiddens: vec![0.0; h],
    };
    trace.cells.reserve(steps * h);
    trace.hiddens.reserve(steps * h);
    let mut z = vec![0.0; w];
    for t in 0..steps {
        let s = trace.slots[t];
        for ((zk, b), p) in z.iter_mut().zip(&cell.bias).zip(&projections[s * w..(s + 1) * w]) {
            *zk = b + p;
        }
        gemv_acc(&cell.recurrent_weights, &trace.hiddens[t * h..(t + 1) * h], &mut z);
        let (zi, rest) = z.split_at_mut(h);
        let (zf, rest) = rest.split_at_mut(h);
        let (zg, zo) = rest.split_at_mut(h);
        for k in 0..h {
            zi[k] = sigmoid(zi[k]);
            zf[k] = sigmoid(zf[k]);
            zg[k] = libm::tanh(zg[k]);
            zo[k] = sigmoid(zo[k]);
        }
        for k in 0..h {
            let c = zf[k] * trace.cells[t * h + k] + zi[k] * zg[k];
            let tc = libm::tanh(c);
            trace.cells.push(c);
            trace.cell_tanh.push(tc);
            trace.hiddens.push(zo[k] * tc);
        }
        trace.gates.extend_from_slice(&z);
    }
    trace
}

fn check_sequence(ids: &[u32], dims: &EncoderDims) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(&id) = ids.iter().find(|&&id| id as usize >= dims.vocab_size) {
        return Err(Error::IdOutOfRange {
            id,
            size: dims.vocab_size,
        });
    }
    Ok(())
}

pub(crate) fn encode_trace(ids: &[u32], params: &SiameseEncoderParams) -> Result<EncodeTrace> {
    let proj = InputProjections::new(params, [ids])?;
    encode_trace_with(ids, params, &proj)
}

/// Forward pass reading input projections from `proj`, which must cover `ids`.
pub(crate) fn encode_trace_with(
    ids: &[u32],
    params: &SiameseEncoderParams,
    proj: &InputProjections,
) -> Result<EncodeTrace> {
    check_sequence(ids, &params.dims)?;
    let h = params.dims.hidden_dim;
    let slots = proj.slots(ids)?;
    let reversed: Vec<usize> = slots.iter().rev().copied().collect();
    let forward = run_direction(&params.forward, &proj.forward, slots);
    let backward = run_direction(&params.backward, &proj.backward, reversed);
    let mut concat = Vec::with_capacity(2 * h);
    concat.extend_from_slice(forward.final_hidden(h));
    concat.extend_from_slice(backward.final_hidden(h));
    let mut pre = params.dense_bias.clone();
    gemv_acc(&params.dense_weights, &concat, &mut pre);
    let output = pre.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
    Ok(EncodeTrace {
        forward,
        backward,
        concat,
        pre_activation: pre,
        output,
    })
}

/// Backpropagates `d_output` (gradient w.r.t. the ReLU output) through one
/// encoding. Dense, recurrent and bias gradients go into `grads`; gate
/// gradients that still need the input projection go into `gate_grads`.
/// The ReLU subgradient at exactly 0 is 0.
pub(crate) fn backprop_encoding(
    trace: &EncodeTrace,
    params: &SiameseEncoderParams,
    d_output: &[f64],
    grads: &mut SiameseEncoderParams,
    gate_grads: &mut InputGateGrads,
) {
    let h = params.dims.hidden_dim;
    let d_pre: Vec<f64> = d_output
        .iter()
        .zip(&trace.pre_activation)
        .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
        .collect();
    if d_pre.iter().all(|&g| g == 0.0) {
        return;
    }
    for (gb, g) in grads.dense_bias.iter_mut().zip(&d_pre) {
        *gb += g;
    }
    outer_acc(&mut grads.dense_weights, &d_pre, &trace.concat);
    let mut d_concat = vec![0.0; 2 * h];
    gemv_t_acc(&params.dense_weights, &d_pre, &mut d_concat);
    backprop_direction(
        &params.forward,
        &trace.forward,
        &d_concat[..h],
        &mut grads.forward,
        &mut gate_grads.forward,
    );
    backprop_direction(
        &params.backward,
        &trace.backward,
        &d_concat[h..],
        &mut grads.backward,
        &mut gate_grads.backward,
    );
}

fn backprop_direction(
    cell: &LstmCellParams,
    trace: &DirectionTrace,
    d_final: &[f64],
    grad_cell: &mut LstmCellParams,
    slot_sums: &mut [f64],
) {
    let h = cell.hidden_dim();
    let w = GATES * h;
    let mut dh = d_final.to_vec();
    let mut dc = vec![0.0; h];
    let mut dz = vec![0.0; w];
    for t in (0..trace.slots.len()).rev() {
        let gates = &trace.gates[t * w..(t + 1) * w];
        let c_prev = &trace.cells[t * h..(t + 1) * h];
        let tanh_c = &trace.cell_tanh[t * h..(t + 1) * h];
        for k in 0..h {
            let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let tc = tanh_c[k];
            let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
            dz[k] = dct * g * i * (1.0 - i);
            dz[h + k] = dct * c_prev[k] * f * (1.0 - f);
            dz[2 * h + k] = dct * i * (1.0 - g * g);
            dz[3 * h + k] = dh[k] * tc * o * (1.0 - o);
            dc[k] = dct * f;
        }
        let s = trace.slots[t];
        let h_prev = &trace.hiddens[t * h..(t + 1) * h];
        for ((gb, acc), g) in grad_cell
            .bias
            .iter_mut()
            .zip(&mut slot_sums[s * w..(s + 1) * w])
            .zip(&dz)
        {
            *gb += g;
            *acc += g;
        }
        outer_acc(&mut grad_cell.recurrent_weights, &dz, h_prev);
        dh.fill(0.0);
        gemv_t_acc(&cell.recurrent_weights, &dz, &mut dh);
    }
}

/// Encodes one trigram sequence. Pure in `(seq, params)`.
pub fn encode(seq: &TrigramSequence, params: &SiameseEncoderParams) -> Result<SentimentEmbedding> {
    let trace = encode_trace(&seq.ids, params)?;
    Ok(SentimentEmbedding::new(trace.output, seq.source.clone()))
}

/// Cosine on raw slices; 0 when either side has zero norm.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

fn check_dims(a: &SentimentEmbedding, b: &SentimentEmbedding) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity. A zero-norm input yields 0 and logs a warning:
/// ReLU outputs can legitimately be all zero.
pub fn cosine_similarity(a: &SentimentEmbedding, b: &SentimentEmbedding) -> Result<f64> {
    check_dims(a, b)?;
    if norm(&a.values) == 0.0 || norm(&b.values) == 0.0 {
        log::warn!("cosine similarity with a zero-norm embedding; defined as 0");
    }
    Ok(cosine(&a.values, &b.values))
}

/// Euclidean distance `||a - b||` between two embeddings.
pub fn euclidean_energy(a: &SentimentEmbedding, b: &SentimentEmbedding) -> Result<f64> {
    check_dims(a, b)?;
    let sq: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(libm::sqrt(sq))
}

/// Parameters plus the vocabulary that indexes their embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: SiameseEncoderParams,
    pub vocab: TrigramVocabulary,
}

impl Model {
    pub fn new(params: SiameseEncoderParams, vocab: TrigramVocabulary) -> Result<Self> {
        if vocab.len() != params.dims.vocab_size {
            return Err(Error::DimensionMismatch {
                expected: params.dims.vocab_size,
                actual: vocab.len(),
            });
        }
        Ok(Self { params, vocab })
    }

    pub fn embed(&self, text: &str) -> Result<SentimentEmbedding> {
        encode(&self.vocab.encode(text)?, &self.params)
    }

    pub fn embed_with_source(&self, text: &str, source: &str) -> Result<SentimentEmbedding> {
        let mut e = self.embed(text)?;
        e.source = source.into();
        Ok(e)
    }
}
