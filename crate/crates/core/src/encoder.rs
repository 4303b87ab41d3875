//! Reference document encoder.
//!
//! Two tiers of attention pooling stand in for a recurrent feature
//! extractor:
//!
//! 1. each token's characters are projected (`tanh(W_c e + b_c)`) and
//!    attention-pooled into a `D_r` vector;
//! 2. the word embedding and that vector are concatenated and mapped through
//!    `tanh(W_t [e_w; r] + b_t)`;
//! 3. token vectors are attention-pooled into unit vectors;
//! 4. unit vectors are attention-pooled into the document embedding `x`.
//!
//! PAD positions are excluded from every softmax. When a level has no
//! unmasked position at all (the empty document) it attends uniformly over
//! all positions, which makes the output the encoding of zero inputs.
//!
//! Anything implementing [`DocumentEncoder`] can replace it.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::data::{EncodedDocument, PAD_ID};
use crate::linalg::Matrix;
use crate::num;
use crate::params::Parameters;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct EncoderConfig {
    /// `D_w`
    pub word_dim: usize,
    /// `D_c`
    pub char_dim: usize,
    /// `D_r`, size of the character-level word vector.
    pub char_repr_dim: usize,
    /// `D_x`
    pub output_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            word_dim: 32,
            char_dim: 8,
            char_repr_dim: 16,
            output_dim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncoderError {
    #[error("{kind} id {id} out of range for table with {rows} rows")]
    IdOutOfRange {
        kind: &'static str,
        id: u32,
        rows: usize,
    },
}

/// Feature extractor interface: map an encoded document to `x` and
/// back-propagate a gradient on `x`.
pub trait DocumentEncoder {
    type Trace;
    type Grads: Parameters;

    fn output_dim(&self) -> usize;
    fn forward(&self, doc: &EncodedDocument) -> Self::Trace;
    fn output<'a>(&self, trace: &'a Self::Trace) -> &'a [f64];
    fn backward(&self, trace: &Self::Trace, grad_x: &[f64], grads: &mut Self::Grads);
    fn zero_grads(&self) -> Self::Grads;
}

pub(crate) fn uniform_matrix(rng: &mut Rng, rows: usize, cols: usize, limit: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-limit..limit))
}

pub(crate) fn glorot(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let limit = num::sqrt(6.0 / (rows + cols) as f64);
    uniform_matrix(rng, rows, cols, limit)
}

pub(crate) fn glorot_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    glorot(rng, 1, n).as_slice().to_vec()
}

/// Word and character lookup tables. Row [`PAD_ID`] is zero and never
/// updated.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTables {
    pub word: Matrix,
    pub chars: Matrix,
}

impl EmbeddingTables {
    pub fn init(token_count: usize, char_count: usize, cfg: &EncoderConfig, rng: &mut Rng) -> Self {
        let mut word = uniform_matrix(rng, token_count, cfg.word_dim, 0.1);
        let mut chars = uniform_matrix(rng, char_count, cfg.char_dim, 0.1);
        word.row_mut(PAD_ID as usize).fill(0.0);
        chars.row_mut(PAD_ID as usize).fill(0.0);
        Self { word, chars }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            word: Matrix::zeros(self.word.rows(), self.word.cols()),
            chars: Matrix::zeros(self.chars.rows(), self.chars.cols()),
        }
    }

    pub fn check_ids(&self, doc: &EncodedDocument) -> Result<(), EncoderError> {
        let check = |kind, id: u32, rows: usize| {
            if (id as usize) < rows {
                Ok(())
            } else {
                Err(EncoderError::IdOutOfRange { kind, id, rows })
            }
        };
        check("token", doc.max_token_id(), self.word.rows())?;
        check("char", doc.max_char_id(), self.chars.rows())
    }
}

impl Parameters for EmbeddingTables {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(
            "word",
            &[self.word.rows(), self.word.cols()],
            self.word.as_slice(),
        );
        f(
            "char",
            &[self.chars.rows(), self.chars.cols()],
            self.chars.as_slice(),
        );
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let (r, c) = self.word.shape();
        f("word", &[r, c], self.word.as_mut_slice());
        let (r, c) = self.chars.shape();
        f("char", &[r, c], self.chars.as_mut_slice());
    }
}

/// Per-position embedding grids of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedded {
    /// `n_units × T_w × D_w`
    pub words: Vec<f64>,
    /// `n_units × T_w × T_c × D_c`
    pub chars: Vec<f64>,
}

/// Plain table lookup; PAD maps to the zero row.
pub fn embed(doc: &EncodedDocument, tables: &EmbeddingTables) -> Result<Embedded, EncoderError> {
    tables.check_ids(doc)?;
    let words = doc
        .tokens
        .iter()
        .flat_map(|&t| tables.word.row(t as usize).iter().copied())
        .collect();
    let chars = doc
        .chars
        .iter()
        .flat_map(|&c| tables.chars.row(c as usize).iter().copied())
        .collect();
    Ok(Embedded { words, chars })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// `D_r × D_c`
    pub char_proj: Matrix,
    pub char_bias: Vec<f64>,
    pub char_attention: Vec<f64>,
    /// `D_x × (D_w + D_r)`
    pub token_proj: Matrix,
    pub token_bias: Vec<f64>,
    pub token_attention: Vec<f64>,
    pub unit_attention: Vec<f64>,
}

impl EncoderParams {
    pub fn init(cfg: &EncoderConfig, rng: &mut Rng) -> Self {
        Self {
            char_proj: glorot(rng, cfg.char_repr_dim, cfg.char_dim),
            char_bias: vec![0.0; cfg.char_repr_dim],
            char_attention: glorot_vec(rng, cfg.char_repr_dim),
            token_proj: glorot(rng, cfg.output_dim, cfg.word_dim + cfg.char_repr_dim),
            token_bias: vec![0.0; cfg.output_dim],
            token_attention: glorot_vec(rng, cfg.output_dim),
            unit_attention: glorot_vec(rng, cfg.output_dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Self {
            char_proj: z(&self.char_proj),
            char_bias: vec![0.0; self.char_bias.len()],
            char_attention: vec![0.0; self.char_attention.len()],
            token_proj: z(&self.token_proj),
            token_bias: vec![0.0; self.token_bias.len()],
            token_attention: vec![0.0; self.token_attention.len()],
            unit_attention: vec![0.0; self.unit_attention.len()],
        }
    }

    pub fn output_dim(&self) -> usize {
        self.token_bias.len()
    }
}

impl Parameters for EncoderParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(
            "char_proj",
            &[self.char_proj.rows(), self.char_proj.cols()],
            self.char_proj.as_slice(),
        );
        f("char_bias", &[self.char_bias.len()], &self.char_bias);
        f(
            "char_attention",
            &[self.char_attention.len()],
            &self.char_attention,
        );
        f(
            "token_proj",
            &[self.token_proj.rows(), self.token_proj.cols()],
            self.token_proj.as_slice(),
        );
        f("token_bias", &[self.token_bias.len()], &self.token_bias);
        f(
            "token_attention",
            &[self.token_attention.len()],
            &self.token_attention,
        );
        f(
            "unit_attention",
            &[self.unit_attention.len()],
            &self.unit_attention,
        );
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let (r, c) = self.char_proj.shape();
        f("char_proj", &[r, c], self.char_proj.as_mut_slice());
        f("char_bias", &[self.char_bias.len()], &mut self.char_bias);
        f(
            "char_attention",
            &[self.char_attention.len()],
            &mut self.char_attention,
        );
        let (r, c) = self.token_proj.shape();
        f("token_proj", &[r, c], self.token_proj.as_mut_slice());
        f("token_bias", &[self.token_bias.len()], &mut self.token_bias);
        f(
            "token_attention",
            &[self.token_attention.len()],
            &mut self.token_attention,
        );
        f(
            "unit_attention",
            &[self.unit_attention.len()],
            &mut self.unit_attention,
        );
    }
}

/// Attention pooling: weights `softmax(values · context)` over `n` rows of
/// width `d`, result `Σ w_k v_k`.
fn attend(values: &[f64], d: usize, context: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = values.len() / d;
    let scores: Vec<f64> = values
        .chunks_exact(d)
        .map(|v| num::dot(v, context))
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores.iter().map(|s| num::exp(s - max)).collect();
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    let mut pooled = vec![0.0; d];
    for k in 0..n {
        num::axpy(weights[k], &values[k * d..(k + 1) * d], &mut pooled);
    }
    (weights, pooled)
}

/// Backward of [`attend`]: accumulates into `grad_values` and `grad_context`.
fn attend_backward(
    values: &[f64],
    d: usize,
    weights: &[f64],
    context: &[f64],
    grad_pooled: &[f64],
    grad_values: &mut [f64],
    grad_context: &mut [f64],
) {
    let dw: Vec<f64> = values
        .chunks_exact(d)
        .map(|v| num::dot(v, grad_pooled))
        .collect();
    let mean: f64 = weights.iter().zip(&dw).map(|(w, g)| w * g).sum();
    for (k, v) in values.chunks_exact(d).enumerate() {
        let ds = weights[k] * (dw[k] - mean);
        let gv = &mut grad_values[k * d..(k + 1) * d];
        num::axpy(weights[k], grad_pooled, gv);
        num::axpy(ds, context, gv);
        num::axpy(ds, v, grad_context);
    }
}

/// Positions to attend over: the unmasked ones, or all when none is.
fn active_positions(n: usize, masked: impl Fn(usize) -> bool) -> Vec<usize> {
    let live: Vec<usize> = (0..n).filter(|&i| !masked(i)).collect();
    if live.is_empty() {
        (0..n).collect()
    } else {
        live
    }
}

#[derive(Debug, Clone)]
struct TokenTrace {
    word_id: u32,
    char_ids: Vec<u32>,
    /// projected characters, `n_chars × D_r`
    char_h: Vec<f64>,
    char_weights: Vec<f64>,
    /// `[e_w; r]`
    input: Vec<f64>,
    /// `tanh(W_t input + b_t)`
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
struct UnitTrace {
    tokens: Vec<TokenTrace>,
    /// stacked token vectors, `n_tokens × D_x`
    token_h: Vec<f64>,
    weights: Vec<f64>,
}

/// Forward values kept for [`AttentionEncoder::backward`].
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    units: Vec<UnitTrace>,
    unit_v: Vec<f64>,
    unit_weights: Vec<f64>,
    x: Vec<f64>,
}

impl EncoderTrace {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Attention weights at each level: (unit, per-unit token, per-token
    /// character).
    pub fn attention_weights(&self) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let tok = self.units.iter().map(|u| u.weights.clone()).collect();
        let chr = self
            .units
            .iter()
            .flat_map(|u| u.tokens.iter().map(|t| t.char_weights.clone()))
            .collect();
        (self.unit_weights.clone(), tok, chr)
    }
}

/// Gradient container for the whole encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub tables: EmbeddingTables,
    pub params: EncoderParams,
}

impl Parameters for EncoderGrads {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.tables.visit(f);
        self.params.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.tables.visit_mut(f);
        self.params.visit_mut(f);
    }
}

/// The reference encoder: borrowed tables and parameters.
#[derive(Debug, Clone, Copy)]
pub struct AttentionEncoder<'a> {
    pub tables: &'a EmbeddingTables,
    pub params: &'a EncoderParams,
}

impl<'a> AttentionEncoder<'a> {
    pub fn new(tables: &'a EmbeddingTables, params: &'a EncoderParams) -> Self {
        Self { tables, params }
    }

    fn token_forward(&self, word_id: u32, char_slots: &[u32]) -> TokenTrace {
        let p = self.params;
        let d_r = p.char_bias.len();
        let d_w = self.tables.word.cols();
        let active = active_positions(char_slots.len(), |k| char_slots[k] == PAD_ID);
        let char_ids: Vec<u32> = active.iter().map(|&k| char_slots[k]).collect();
        let mut char_h = vec![0.0; char_ids.len() * d_r];
        for (k, &c) in char_ids.iter().enumerate() {
            let out = &mut char_h[k * d_r..(k + 1) * d_r];
            p.char_proj
                .matvec_into(self.tables.chars.row(c as usize), out);
            for (o, b) in out.iter_mut().zip(&p.char_bias) {
                *o = num::tanh(*o + b);
            }
        }
        let (char_weights, r) = attend(&char_h, d_r, &p.char_attention);
        let mut input = Vec::with_capacity(d_w + d_r);
        input.extend_from_slice(self.tables.word.row(word_id as usize));
        input.extend_from_slice(&r);
        let mut h = p.token_proj.matvec(&input);
        for (o, b) in h.iter_mut().zip(&p.token_bias) {
            *o = num::tanh(*o + b);
        }
        TokenTrace {
            word_id,
            char_ids,
            char_h,
            char_weights,
            input,
            h,
        }
    }

    pub fn forward_trace(&self, doc: &EncodedDocument) -> EncoderTrace {
        let d_x = self.params.output_dim();
        let t_w = doc.tokens_per_unit;
        let unit_masked = |s: usize| doc.unit_tokens(s).iter().all(|&t| t == PAD_ID);
        let active_units = active_positions(doc.n_units, unit_masked);
        let mut units = Vec::with_capacity(active_units.len());
        let mut unit_v = Vec::with_capacity(active_units.len() * d_x);
        for &s in &active_units {
            let toks = doc.unit_tokens(s);
            let active = active_positions(t_w, |w| toks[w] == PAD_ID);
            let tokens: Vec<TokenTrace> = active
                .iter()
                .map(|&w| self.token_forward(toks[w], doc.token_chars(s, w)))
                .collect();
            let token_h: Vec<f64> = tokens.iter().flat_map(|t| t.h.iter().copied()).collect();
            let (weights, v) = attend(&token_h, d_x, &self.params.token_attention);
            unit_v.extend_from_slice(&v);
            units.push(UnitTrace {
                tokens,
                token_h,
                weights,
            });
        }
        let (unit_weights, x) = attend(&unit_v, d_x, &self.params.unit_attention);
        EncoderTrace {
            units,
            unit_v,
            unit_weights,
            x,
        }
    }

    pub fn backward_into(&self, trace: &EncoderTrace, grad_x: &[f64], grads: &mut EncoderGrads) {
        let p = self.params;
        let d_x = p.output_dim();
        let d_r = p.char_bias.len();
        let d_w = self.tables.word.cols();
        let g = &mut grads.params;

        let mut grad_unit_v = vec![0.0; trace.unit_v.len()];
        attend_backward(
            &trace.unit_v,
            d_x,
            &trace.unit_weights,
            &p.unit_attention,
            grad_x,
            &mut grad_unit_v,
            &mut g.unit_attention,
        );
        for (unit, gv) in trace.units.iter().zip(grad_unit_v.chunks_exact(d_x)) {
            let mut grad_h = vec![0.0; unit.token_h.len()];
            attend_backward(
                &unit.token_h,
                d_x,
                &unit.weights,
                &p.token_attention,
                gv,
                &mut grad_h,
                &mut g.token_attention,
            );
            for (tok, gh) in unit.tokens.iter().zip(grad_h.chunks_exact(d_x)) {
                let dz: Vec<f64> = gh
                    .iter()
                    .zip(&tok.h)
                    .map(|(g, h)| g * (1.0 - h * h))
                    .collect();
                g.token_proj.add_outer(1.0, &dz, &tok.input);
                num::axpy(1.0, &dz, &mut g.token_bias);
                let mut d_input = vec![0.0; d_w + d_r];
                p.token_proj.matvec_t_acc(&dz, &mut d_input);
                if tok.word_id != PAD_ID {
                    num::axpy(
                        1.0,
                        &d_input[..d_w],
                        grads.tables.word.row_mut(tok.word_id as usize),
                    );
                }
                let mut grad_ch = vec![0.0; tok.char_h.len()];
                attend_backward(
                    &tok.char_h,
                    d_r,
                    &tok.char_weights,
                    &p.char_attention,
                    &d_input[d_w..],
                    &mut grad_ch,
                    &mut g.char_attention,
                );
                for (k, &c) in tok.char_ids.iter().enumerate() {
                    let ch = &tok.char_h[k * d_r..(k + 1) * d_r];
                    let gc = &grad_ch[k * d_r..(k + 1) * d_r];
                    let dzc: Vec<f64> = gc.iter().zip(ch).map(|(g, h)| g * (1.0 - h * h)).collect();
                    let e = self.tables.chars.row(c as usize);
                    g.char_proj.add_outer(1.0, &dzc, e);
                    num::axpy(1.0, &dzc, &mut g.char_bias);
                    if c != PAD_ID {
                        p.char_proj
                            .matvec_t_acc(&dzc, grads.tables.chars.row_mut(c as usize));
                    }
                }
            }
        }
    }
}

impl DocumentEncoder for AttentionEncoder<'_> {
    type Trace = EncoderTrace;
    type Grads = EncoderGrads;

    fn output_dim(&self) -> usize {
        self.params.output_dim()
    }

    fn forward(&self, doc: &EncodedDocument) -> EncoderTrace {
        self.forward_trace(doc)
    }

    fn output<'t>(&self, trace: &'t EncoderTrace) -> &'t [f64] {
        trace.x()
    }

    fn backward(&self, trace: &EncoderTrace, grad_x: &[f64], grads: &mut EncoderGrads) {
        self.backward_into(trace, grad_x, grads)
    }

    fn zero_grads(&self) -> EncoderGrads {
        EncoderGrads {
            tables: self.tables.zeros_like(),
            params: self.params.zeros_like(),
        }
    }
}

/// Document embedding `x`.
pub fn encode(doc: &EncodedDocument, tables: &EmbeddingTables, params: &EncoderParams) -> Vec<f64> {
    AttentionEncoder::new(tables, params).forward_trace(doc).x
}

/// Gradients of `grad_x · x` with respect to the tables and parameters.
pub fn encoder_backward(
    doc: &EncodedDocument,
    tables: &EmbeddingTables,
    params: &EncoderParams,
    grad_x: &[f64],
) -> EncoderGrads {
    let enc = AttentionEncoder::new(tables, params);
    let trace = enc.forward_trace(doc);
    let mut grads = enc.zero_grads();
    enc.backward_into(&trace, grad_x, &mut grads);
    grads
}
