//! Joint training with per-component losses and detached inputs, plus
//! evaluation of fixed pairs.
//!
//! Each batch is evaluated once with the current parameters. The encoder
//! and DML head step on the contrastive loss, the BFS head steps on its
//! cross entropy with the LEVs held constant, and the UAL head steps on its
//! regularized likelihood with LEVs and BFS posteriors held constant.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::bfs::{self, BfsConfig, BfsError, BfsPairTrace, BfsParams, GaussianModel};
use crate::data::{Document, EncodedDocument};
use crate::dml::{self, DmlConfig, DmlPairTrace, DmlParams};
use crate::encoder::{
    AttentionEncoder, EmbeddingTables, EncoderConfig, EncoderError, EncoderParams,
};
use crate::metrics::TrialResult;
use crate::num;
use crate::optim::{self, AdamConfig, AdamState};
use crate::params::{export_tensors, import_tensors, ImportError, NamedTensor, Parameters};
use crate::rng;
use crate::sampler::{self, DocumentPair, IndexPair, SamplerConfig, SamplerConfigError, SubsetTag};
use crate::ual::{self, UalConfig, UalPairTrace, UalParams};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub dml: DmlConfig,
    pub bfs: BfsConfig,
    pub ual: UalConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Learning rate of the encoder, embeddings and DML head.
    pub lr_encoder: f64,
    pub lr_bfs: f64,
    pub lr_ual: f64,
    pub adam: AdamConfig,
    /// Seeds initialization and every per-epoch draw.
    pub seed: u64,
    /// Pair sampling probabilities. Its `seed` is not used; epochs derive
    /// their own from `seed`.
    pub sampler: SamplerConfig,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 33,
            batch_size: 32,
            lr_encoder: 1e-3,
            lr_bfs: 1e-3,
            lr_ual: 1e-3,
            adam: AdamConfig::default(),
            seed: 0,
            sampler: SamplerConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("`{0}` must be positive")]
    NotPositive(&'static str),
    #[error("`{name}` = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Sampler(#[from] SamplerConfigError),
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        let counts = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("encoder.word_dim", m.encoder.word_dim),
            ("encoder.char_dim", m.encoder.char_dim),
            ("encoder.char_repr_dim", m.encoder.char_repr_dim),
            ("encoder.output_dim", m.encoder.output_dim),
            ("dml.lev_dim", m.dml.lev_dim),
            ("bfs.dim", m.bfs.dim),
            ("ual.dim", m.ual.dim),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        let rates = [
            ("lr_encoder", self.lr_encoder),
            ("lr_bfs", self.lr_bfs),
            ("lr_ual", self.lr_ual),
            ("adam.epsilon", self.adam.epsilon),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::NotPositive(name));
            }
        }
        let unit = [
            ("adam.beta_1", self.adam.beta_1),
            ("adam.beta_2", self.adam.beta_2),
        ];
        for (name, value) in unit {
            if !(0.0..1.0).contains(&value) {
                return Err(ConfigError::OutOfRange { name, value });
            }
        }
        let prior = m.bfs.prior;
        if !(prior > 0.0 && prior < 1.0) {
            return Err(ConfigError::OutOfRange {
                name: "bfs.prior",
                value: prior,
            });
        }
        let beta = m.ual.beta;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(ConfigError::OutOfRange {
                name: "ual.beta",
                value: beta,
            });
        }
        let (ts, td) = (m.dml.tau_s, m.dml.tau_d);
        if !((0.0..=1.0).contains(&ts) && (0.0..=1.0).contains(&td)) {
            return Err(ConfigError::OutOfRange {
                name: "dml.tau_s/tau_d",
                value: ts,
            });
        }
        self.sampler.validate()?;
        Ok(())
    }
}

/// All trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub tables: EmbeddingTables,
    pub encoder: EncoderParams,
    pub dml: DmlParams,
    pub bfs: BfsParams,
    pub ual: UalParams,
}

impl Model {
    pub fn init(config: &ModelConfig, token_count: usize, char_count: usize, seed: u64) -> Self {
        let mut r = rng::rng_for(seed, rng::tag::INIT, 0);
        let tables = EmbeddingTables::init(token_count, char_count, &config.encoder, &mut r);
        let encoder = EncoderParams::init(&config.encoder, &mut r);
        let dml = DmlParams::init(config.encoder.output_dim, config.dml.lev_dim, &mut r);
        let bfs = BfsParams::init(config.dml.lev_dim, &config.bfs, &mut r);
        let ual = UalParams::init(config.dml.lev_dim, config.ual.dim, &mut r);
        Self {
            config: *config,
            tables,
            encoder,
            dml,
            bfs,
            ual,
        }
    }

    pub fn attention_encoder(&self) -> AttentionEncoder<'_> {
        AttentionEncoder::new(&self.tables, &self.encoder)
    }

    pub fn encode(&self, doc: &EncodedDocument) -> Vec<f64> {
        self.attention_encoder().forward_trace(doc).x().to_vec()
    }

    /// `(H_within, H_between)` of the current BFS model.
    pub fn entropies(&self) -> (f64, f64) {
        bfs::gaussian_entropies(&self.bfs)
    }

    /// Every parameter tensor, named `<group>.<tensor>`.
    pub fn tensors(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        export_tensors("tables", &self.tables, &mut out);
        export_tensors("encoder", &self.encoder, &mut out);
        export_tensors("dml", &self.dml, &mut out);
        export_tensors("bfs", &self.bfs, &mut out);
        export_tensors("ual", &self.ual, &mut out);
        out
    }

    /// Rebuild from [`Model::tensors`] output; shapes are checked against
    /// `config` and the table sizes.
    pub fn from_tensors(
        config: &ModelConfig,
        token_count: usize,
        char_count: usize,
        tensors: &[NamedTensor],
    ) -> Result<Self, ImportError> {
        let mut m = Self::init(config, token_count, char_count, 0);
        import_tensors("tables", &mut m.tables, tensors)?;
        import_tensors("encoder", &mut m.encoder, tensors)?;
        import_tensors("dml", &mut m.dml, tensors)?;
        import_tensors("bfs", &mut m.bfs, tensors)?;
        import_tensors("ual", &mut m.ual, tensors)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochTelemetry {
    pub epoch: usize,
    pub loss_dml: f64,
    pub loss_bfs: f64,
    pub loss_ual: f64,
    pub h_within: f64,
    pub h_between: f64,
}

/// Everything needed to continue training bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: Model,
    pub adam_encoder: AdamState,
    pub adam_bfs: AdamState,
    pub adam_ual: AdamState,
    pub epochs_done: usize,
    pub step: u64,
    pub telemetry: Vec<EpochTelemetry>,
}

impl TrainState {
    pub fn new(model: Model) -> Self {
        let adam_encoder = AdamState::new(
            model.tables.num_parameters()
                + model.encoder.num_parameters()
                + model.dml.num_parameters(),
        );
        let adam_bfs = AdamState::for_params(&model.bfs);
        let adam_ual = AdamState::for_params(&model.ual);
        Self {
            model,
            adam_encoder,
            adam_bfs,
            adam_ual,
            epochs_done: 0,
            step: 0,
            telemetry: Vec::new(),
        }
    }

    pub fn init(cfg: &TrainConfig, token_count: usize, char_count: usize) -> Self {
        Self::new(Model::init(&cfg.model, token_count, char_count, cfg.seed))
    }

    /// Model tensors followed by optimizer moments
    /// (`adam.<group>.m`, `adam.<group>.v`).
    pub fn tensors(&self) -> Vec<NamedTensor> {
        let mut out = self.model.tensors();
        for (name, st) in self.adam_groups() {
            for (kind, data) in [("m", &st.m), ("v", &st.v)] {
                out.push(NamedTensor {
                    name: format!("adam.{name}.{kind}"),
                    shape: vec![data.len()],
                    data: data.clone(),
                });
            }
        }
        out
    }

    pub fn adam_groups(&self) -> [(&'static str, &AdamState); 3] {
        [
            ("encoder", &self.adam_encoder),
            ("bfs", &self.adam_bfs),
            ("ual", &self.adam_ual),
        ]
    }

    /// Inverse of [`TrainState::tensors`]. Adam step counters, progress and
    /// telemetry are restored from `meta`.
    pub fn from_tensors(
        config: &ModelConfig,
        token_count: usize,
        char_count: usize,
        tensors: &[NamedTensor],
        meta: &StateMeta,
    ) -> Result<Self, ImportError> {
        let model = Model::from_tensors(config, token_count, char_count, tensors)?;
        let mut st = Self::new(model);
        let steps = meta.adam_steps;
        for (k, (name, state)) in [
            ("encoder", &mut st.adam_encoder),
            ("bfs", &mut st.adam_bfs),
            ("ual", &mut st.adam_ual),
        ]
        .into_iter()
        .enumerate()
        {
            for (kind, buf) in [("m", &mut state.m), ("v", &mut state.v)] {
                let full = format!("adam.{name}.{kind}");
                let t = tensors
                    .iter()
                    .find(|t| t.name == full)
                    .ok_or_else(|| ImportError::Missing(full.clone()))?;
                if t.data.len() != buf.len() {
                    return Err(ImportError::Shape {
                        name: full,
                        expected: vec![buf.len()],
                        found: t.shape.clone(),
                    });
                }
                buf.copy_from_slice(&t.data);
            }
            state.step = steps[k];
        }
        st.epochs_done = meta.epochs_done;
        st.step = meta.step;
        st.telemetry = meta.telemetry.clone();
        Ok(st)
    }

    pub fn meta(&self) -> StateMeta {
        StateMeta {
            epochs_done: self.epochs_done,
            step: self.step,
            adam_steps: [
                self.adam_encoder.step,
                self.adam_bfs.step,
                self.adam_ual.step,
            ],
            telemetry: self.telemetry.clone(),
        }
    }
}

/// Non-tensor part of a [`TrainState`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateMeta {
    pub epochs_done: usize,
    pub step: u64,
    pub adam_steps: [u64; 3],
    pub telemetry: Vec<EpochTelemetry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{docs} documents but {encoded} encodings")]
    LengthMismatch { docs: usize, encoded: usize },
    #[error("document {doc_id}: {source}")]
    Encoding {
        doc_id: String,
        #[source]
        source: EncoderError,
    },
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Bfs {
        epoch: usize,
        batch: usize,
        #[source]
        source: BfsError,
    },
    #[error("non-finite {what} at epoch {epoch}, batch {batch}\n{dump}")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        batch: usize,
        dump: String,
    },
    #[error("training set yields no pairs")]
    NoPairs,
}

/// Mean losses of one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLosses {
    pub dml: f64,
    pub bfs: f64,
    pub ual: f64,
    pub pairs: usize,
}

/// Gradients of the three groups for one batch, evaluated at one
/// parameter state.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients {
    pub tables: EmbeddingTables,
    pub encoder: EncoderParams,
    pub dml: DmlParams,
    pub bfs: BfsParams,
    pub ual: UalParams,
    pub losses: BatchLosses,
    /// Per-pair `(loss_dml, loss_bfs, loss_ual)`.
    pub pair_losses: Vec<(f64, f64, f64)>,
}

struct PairForward {
    x_1: Vec<f64>,
    x_2: Vec<f64>,
    dml: DmlPairTrace,
    bfs: BfsPairTrace,
    ual: UalPairTrace,
}

/// Forward pass and gradients of all three losses (each a batch mean) for
/// `(doc_1, doc_2, same_author)` triples.
pub fn batch_gradients(
    model: &Model,
    batch: &[(&EncodedDocument, &EncodedDocument, bool)],
) -> Result<BatchGradients, BfsError> {
    let cfg = &model.config;
    let enc = model.attention_encoder();
    let gaussian = GaussianModel::prepare(&model.bfs, cfg.bfs.prior)?;
    let n = batch.len().max(1) as f64;
    let mut traces = Vec::with_capacity(batch.len());
    let mut forwards = Vec::with_capacity(batch.len());
    let mut pair_losses = Vec::with_capacity(batch.len());
    let (mut l_dml, mut l_bfs, mut l_ual) = (0.0, 0.0, 0.0);
    for &(d1, d2, a) in batch {
        let t1 = enc.forward_trace(d1);
        let t2 = enc.forward_trace(d2);
        let x_1 = t1.x().to_vec();
        let x_2 = t2.x().to_vec();
        let dml_t = dml::dml_pair_forward(&x_1, &x_2, &model.dml);
        let bfs_t = bfs::bfs_pair_forward(&dml_t.y_1, &dml_t.y_2, &model.bfs, &gaussian);
        let ual_t = ual::ual_pair_forward(&dml_t.y_1, &dml_t.y_2, bfs_t.p_bfs, &model.ual);
        let ld = dml::dml_pair_loss(&dml_t, a, &cfg.dml);
        let lb = bfs::bfs_loss_from_logit(bfs_t.score + num::logit(cfg.bfs.prior), a);
        let lu = ual::ual_loss(&ual_t.p_ual, &ual_t.confusion, a, cfg.ual.beta);
        l_dml += ld;
        l_bfs += lb;
        l_ual += lu;
        pair_losses.push((ld, lb, lu));
        traces.push((t1, t2));
        forwards.push(PairForward {
            x_1,
            x_2,
            dml: dml_t,
            bfs: bfs_t,
            ual: ual_t,
        });
    }

    let mut enc_grads = crate::encoder::EncoderGrads {
        tables: model.tables.zeros_like(),
        params: model.encoder.zeros_like(),
    };
    let mut dml_grads = model.dml.zeros_like();
    let mut ual_grads = model.ual.zeros_like();
    for (k, f) in forwards.iter().enumerate() {
        let a = batch[k].2;
        let (g1, g2) = dml::dml_pair_backward(
            &f.dml,
            &f.x_1,
            &f.x_2,
            a,
            &model.dml,
            &cfg.dml,
            1.0 / n,
            &mut dml_grads,
        );
        if g1.iter().chain(&g2).any(|&g| g != 0.0) {
            enc.backward_into(&traces[k].0, &g1, &mut enc_grads);
            enc.backward_into(&traces[k].1, &g2, &mut enc_grads);
        }
        ual::ual_pair_backward(&f.ual, a, cfg.ual.beta, &model.ual, 1.0 / n, &mut ual_grads);
    }
    let bfs_grads = bfs::bfs_backward(
        forwards
            .iter()
            .zip(batch)
            .map(|(f, b)| (&f.bfs, f.dml.y_1.as_slice(), f.dml.y_2.as_slice(), b.2)),
        &model.bfs,
        &gaussian,
        1.0 / n,
    );
    Ok(BatchGradients {
        tables: enc_grads.tables,
        encoder: enc_grads.params,
        dml: dml_grads,
        bfs: bfs_grads,
        ual: ual_grads,
        losses: BatchLosses {
            dml: l_dml / n,
            bfs: l_bfs / n,
            ual: l_ual / n,
            pairs: batch.len(),
        },
        pair_losses,
    })
}

/// Which optimizer groups [`apply_gradients`] updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepGroups {
    pub encoder: bool,
    pub bfs: bool,
    pub ual: bool,
}

impl StepGroups {
    pub const ALL: Self = Self {
        encoder: true,
        bfs: true,
        ual: true,
    };
}

/// One Adam step per selected group.
pub fn apply_gradients(
    state: &mut TrainState,
    grads: &BatchGradients,
    cfg: &TrainConfig,
    groups: StepGroups,
) {
    let m = &mut state.model;
    if groups.encoder {
        let mut params = (&mut m.tables, &mut m.encoder, &mut m.dml);
        let g = (&grads.tables, &grads.encoder, &grads.dml);
        let flat_g = {
            let mut v = g.0.flatten();
            v.extend(g.1.flatten());
            v.extend(g.2.flatten());
            v
        };
        let mut flat = params.flatten();
        optim::adam_update(
            &mut flat,
            &flat_g,
            &mut state.adam_encoder,
            cfg.lr_encoder,
            &cfg.adam,
        );
        params.assign_flat(&flat);
    }
    if groups.bfs {
        optim::optimizer_step(
            &mut m.bfs,
            &grads.bfs,
            &mut state.adam_bfs,
            cfg.lr_bfs,
            &cfg.adam,
        );
    }
    if groups.ual {
        optim::optimizer_step(
            &mut m.ual,
            &grads.ual,
            &mut state.adam_ual,
            cfg.lr_ual,
            &cfg.adam,
        );
    }
    state.step += 1;
}

fn finite_grads(g: &BatchGradients) -> bool {
    g.tables.all_finite()
        && g.encoder.all_finite()
        && g.dml.all_finite()
        && g.bfs.all_finite()
        && g.ual.all_finite()
}

fn dump_batch(docs: &[Document], batch: &[IndexPair], g: Option<&BatchGradients>) -> String {
    let mut s = String::new();
    for (k, p) in batch.iter().enumerate() {
        let losses = g
            .and_then(|g| g.pair_losses.get(k))
            .map(|(a, b, c)| format!("dml={a} bfs={b} ual={c}"))
            .unwrap_or_default();
        s.push_str(&format!(
            "  {} {} [{}] {}\n",
            docs[p.first].doc_id, docs[p.second].doc_id, p.subset, losses
        ));
    }
    s
}

/// Pairs for `epoch` (0-based) in training order.
pub fn epoch_pairs(docs: &[Document], cfg: &TrainConfig, epoch: usize) -> Vec<IndexPair> {
    let sampler_cfg = SamplerConfig {
        seed: rng::derive_seed(cfg.seed, rng::tag::EPOCH_PAIRS, epoch as u64),
        ..cfg.sampler
    };
    let mut pairs = sampler::resample_epoch_indexed(docs, &sampler_cfg).pairs;
    pairs.shuffle(&mut rng::rng_for(
        cfg.seed,
        rng::tag::EPOCH_ORDER,
        epoch as u64,
    ));
    pairs
}

fn check_inputs(
    state: &TrainState,
    docs: &[Document],
    encoded: &[EncodedDocument],
) -> Result<(), TrainError> {
    if docs.len() != encoded.len() {
        return Err(TrainError::LengthMismatch {
            docs: docs.len(),
            encoded: encoded.len(),
        });
    }
    for (d, e) in docs.iter().zip(encoded) {
        state
            .model
            .tables
            .check_ids(e)
            .map_err(|source| TrainError::Encoding {
                doc_id: d.doc_id.clone(),
                source,
            })?;
    }
    Ok(())
}

/// Runs the next epoch and appends its telemetry.
pub fn train_epoch(
    state: &mut TrainState,
    docs: &[Document],
    encoded: &[EncodedDocument],
    cfg: &TrainConfig,
) -> Result<EpochTelemetry, TrainError> {
    cfg.validate()?;
    check_inputs(state, docs, encoded)?;
    let epoch = state.epochs_done;
    let pairs = epoch_pairs(docs, cfg, epoch);
    if pairs.is_empty() {
        return Err(TrainError::NoPairs);
    }
    let (mut s_dml, mut s_bfs, mut s_ual) = (0.0, 0.0, 0.0);
    for (b, chunk) in pairs.chunks(cfg.batch_size).enumerate() {
        let batch: Vec<(&EncodedDocument, &EncodedDocument, bool)> = chunk
            .iter()
            .map(|p| {
                (
                    &encoded[p.first],
                    &encoded[p.second],
                    p.subset.same_author(),
                )
            })
            .collect();
        let grads = batch_gradients(&state.model, &batch).map_err(|source| TrainError::Bfs {
            epoch: epoch + 1,
            batch: b,
            source,
        })?;
        let l = grads.losses;
        let what = if !(l.dml.is_finite() && l.bfs.is_finite() && l.ual.is_finite()) {
            Some("loss")
        } else if !finite_grads(&grads) {
            Some("gradient")
        } else {
            None
        };
        if let Some(what) = what {
            return Err(TrainError::NonFinite {
                what,
                epoch: epoch + 1,
                batch: b,
                dump: dump_batch(docs, chunk, Some(&grads)),
            });
        }
        apply_gradients(state, &grads, cfg, StepGroups::ALL);
        let w = l.pairs as f64;
        s_dml += l.dml * w;
        s_bfs += l.bfs * w;
        s_ual += l.ual * w;
    }
    let n = pairs.len() as f64;
    let (h_within, h_between) = state.model.entropies();
    let t = EpochTelemetry {
        epoch: epoch + 1,
        loss_dml: s_dml / n,
        loss_bfs: s_bfs / n,
        loss_ual: s_ual / n,
        h_within,
        h_between,
    };
    state.epochs_done += 1;
    state.telemetry.push(t);
    Ok(t)
}

/// Trains until `cfg.epochs` epochs are done, calling `on_epoch` after each
/// one. Resuming a restored state continues with the same per-epoch draws.
pub fn train(
    state: &mut TrainState,
    docs: &[Document],
    encoded: &[EncodedDocument],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&TrainState, &EpochTelemetry),
) -> Result<(), TrainError> {
    while state.epochs_done < cfg.epochs {
        let t = train_epoch(state, docs, encoded, cfg)?;
        on_epoch(state, &t);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stage {
    Dml,
    Bfs,
    Ual,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Dml, Stage::Bfs, Stage::Ual];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Dml => "dml",
            Stage::Bfs => "bfs",
            Stage::Ual => "ual",
        }
    }
}

impl core::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dml" => Ok(Stage::Dml),
            "bfs" => Ok(Stage::Bfs),
            "ual" => Ok(Stage::Ual),
            _ => Err(format!("unknown stage `{s}` (expected dml, bfs or ual)")),
        }
    }
}

/// Posteriors of one evaluated pair at every stage.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairScores {
    pub pair_id: String,
    pub doc_1: String,
    pub doc_2: String,
    pub subset: SubsetTag,
    pub distance: f64,
    pub p_dml: f64,
    pub score: f64,
    pub p_bfs: f64,
    pub p_ual: f64,
}

impl PairScores {
    pub fn posterior(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Dml => self.p_dml,
            Stage::Bfs => self.p_bfs,
            Stage::Ual => self.p_ual,
        }
    }

    pub fn trial(&self, stage: Stage) -> TrialResult {
        TrialResult::new(self.pair_id.clone(), self.subset, self.posterior(stage))
    }

    /// Final decision, from the UAL posterior.
    pub fn predicted_same_author(&self) -> bool {
        self.p_ual > 0.5
    }
}

pub fn stage_trials(scores: &[PairScores], stage: Stage) -> Vec<TrialResult> {
    scores.iter().map(|s| s.trial(stage)).collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("pair references unknown document `{0}`")]
    UnknownDocument(String),
    #[error("{docs} documents but {encoded} encodings")]
    LengthMismatch { docs: usize, encoded: usize },
    #[error("document {doc_id}: {source}")]
    Encoding {
        doc_id: String,
        #[source]
        source: EncoderError,
    },
    #[error(transparent)]
    Bfs(#[from] BfsError),
}

/// Scores fixed pairs with a trained model. Each document is encoded once.
pub fn evaluate_pairs(
    model: &Model,
    docs: &[Document],
    encoded: &[EncodedDocument],
    pairs: &[DocumentPair],
) -> Result<Vec<PairScores>, EvalError> {
    if docs.len() != encoded.len() {
        return Err(EvalError::LengthMismatch {
            docs: docs.len(),
            encoded: encoded.len(),
        });
    }
    let index: BTreeMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.doc_id.as_str(), i))
        .collect();
    let gaussian = GaussianModel::prepare(&model.bfs, model.config.bfs.prior)?;
    let mut levs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut lev = |id: &str| -> Result<Vec<f64>, EvalError> {
        let i = *index
            .get(id)
            .ok_or_else(|| EvalError::UnknownDocument(id.to_string()))?;
        if let Some(y) = levs.get(&i) {
            return Ok(y.clone());
        }
        model
            .tables
            .check_ids(&encoded[i])
            .map_err(|source| EvalError::Encoding {
                doc_id: id.to_string(),
                source,
            })?;
        let y = dml::project_lev(&model.encode(&encoded[i]), &model.dml);
        levs.insert(i, y.clone());
        Ok(y)
    };
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        let y_1 = lev(&p.doc_1)?;
        let y_2 = lev(&p.doc_2)?;
        let (distance, p_dml) = dml::kernel_posterior(&y_1, &y_2, &model.dml);
        let b = bfs::bfs_pair_forward(&y_1, &y_2, &model.bfs, &gaussian);
        let u = ual::ual_pair_forward(&y_1, &y_2, b.p_bfs, &model.ual);
        out.push(PairScores {
            pair_id: format!("{}|{}", p.doc_1, p.doc_2),
            doc_1: p.doc_1.clone(),
            doc_2: p.doc_2.clone(),
            subset: p.subset(),
            distance,
            p_dml,
            score: b.score,
            p_bfs: b.p_bfs,
            p_ual: u.p_ual[1],
        });
    }
    Ok(out)
}
