//! Run configuration: one JSON file covering every command, with command
//! line flags applied on top.

use std::path::Path;

use calav_core::data::WindowConfig;
use calav_core::trainer::Stage;
use calav_core::{SubsetTag, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_json, CorpusFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Hold out fandoms; authors shared with the train side are dropped
    /// from the test side.
    Fandom,
    /// Hold out authors; fandoms are shared.
    Author,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepConfig {
    pub format: CorpusFormat,
    pub v_tok: usize,
    pub v_chr: usize,
    pub split: SplitMode,
    pub test_fraction: f64,
    pub window: WindowConfig,
    pub seed: u64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            format: CorpusFormat::DocsJsonl,
            v_tok: 5000,
            v_chr: 300,
            split: SplitMode::Fandom,
            test_fraction: 0.2,
            window: WindowConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    /// Subsets kept in the fixed pair file.
    pub keep: Vec<SubsetTag>,
    /// Every SA_DF pair plus as many DA_SF pairs instead of one sampler
    /// epoch.
    pub balanced: bool,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            keep: vec![SubsetTag::SaDf, SubsetTag::DaSf],
            balanced: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub stages: Vec<Stage>,
    pub subset: Option<SubsetTag>,
    /// Reliability bins over confidence in [0.5, 1].
    pub n_bins: usize,
    /// Histogram bins over the posterior in [0, 1].
    pub histogram_bins: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            stages: Stage::ALL.to_vec(),
            subset: None,
            n_bins: 10,
            histogram_bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub prep: PrepConfig,
    pub sample: SampleConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Use one seed for splitting, pair sampling and training.
    pub fn set_seed(&mut self, seed: u64) {
        self.prep.seed = seed;
        self.sample.seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(m));
        let p = &self.prep;
        if !(p.test_fraction > 0.0 && p.test_fraction < 1.0) {
            return bad(format!(
                "prep.test_fraction = {} must lie in (0, 1)",
                p.test_fraction
            ));
        }
        if p.v_tok == 0 || p.v_chr == 0 {
            return bad("prep.v_tok and prep.v_chr must be positive".into());
        }
        let w = &p.window;
        if w.tokens_per_unit == 0
            || w.hop == 0
            || w.hop > w.tokens_per_unit
            || w.max_units == 0
            || w.chars_per_token == 0
        {
            return bad(format!(
                "invalid prep.window {w:?} (need 0 < hop <= tokens_per_unit and positive sizes)"
            ));
        }
        if self.sample.keep.is_empty() {
            return bad("sample.keep must list at least one subset".into());
        }
        self.train
            .validate()
            .map_err(|e| Error::Input(format!("train: {e}")))?;
        let e = &self.eval;
        if e.stages.is_empty() {
            return bad("eval.stages must list at least one stage".into());
        }
        if e.n_bins == 0 || e.histogram_bins == 0 {
            return bad("eval bin counts must be positive".into());
        }
        Ok(())
    }
}
