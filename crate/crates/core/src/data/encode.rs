use alloc::vec;
use alloc::vec::Vec;

use super::{sliding_window, tokenize, Document, Vocabulary, PAD_ID};

/// Segmentation settings. Defaults: 30 tokens per unit, hop 26, at most
/// 210 units, 12 characters per token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct WindowConfig {
    pub tokens_per_unit: usize,
    pub hop: usize,
    pub max_units: usize,
    pub chars_per_token: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            tokens_per_unit: 30,
            hop: 26,
            max_units: 210,
            chars_per_token: 12,
        }
    }
}

/// Numeric form of one document: `n_units × T_w` token ids and
/// `n_units × T_w × T_c` character ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EncodedDocument {
    pub tokens_per_unit: usize,
    pub chars_per_token: usize,
    pub n_units: usize,
    pub tokens: Vec<u32>,
    pub chars: Vec<u32>,
}

impl EncodedDocument {
    pub fn token(&self, unit: usize, pos: usize) -> u32 {
        self.tokens[unit * self.tokens_per_unit + pos]
    }

    pub fn unit_tokens(&self, unit: usize) -> &[u32] {
        &self.tokens[unit * self.tokens_per_unit..(unit + 1) * self.tokens_per_unit]
    }

    pub fn token_chars(&self, unit: usize, pos: usize) -> &[u32] {
        let start = (unit * self.tokens_per_unit + pos) * self.chars_per_token;
        &self.chars[start..start + self.chars_per_token]
    }

    /// Append an all-PAD unit.
    pub fn push_pad_unit(&mut self) {
        self.n_units += 1;
        self.tokens
            .extend(std::iter::repeat_n(PAD_ID, self.tokens_per_unit));
        self.chars.extend(std::iter::repeat_n(
            PAD_ID,
            self.tokens_per_unit * self.chars_per_token,
        ));
    }

    pub fn max_token_id(&self) -> u32 {
        self.tokens.iter().copied().max().unwrap_or(0)
    }

    pub fn max_char_id(&self) -> u32 {
        self.chars.iter().copied().max().unwrap_or(0)
    }
}

/// Tokenize, window and map `doc` through `vocab`. Characters of each token
/// are truncated or PAD-filled to `chars_per_token`; PAD tokens get PAD
/// characters only.
pub fn encode_document(doc: &Document, vocab: &Vocabulary, cfg: &WindowConfig) -> EncodedDocument {
    let toks = tokenize(&doc.text);
    // index into `toks`, `usize::MAX` for padding
    let idx: Vec<usize> = (0..toks.len()).collect();
    let units = sliding_window(
        &idx,
        usize::MAX,
        cfg.tokens_per_unit,
        cfg.hop,
        cfg.max_units,
    );
    let n_units = units.len();
    let t_c = cfg.chars_per_token;
    let mut tokens = Vec::with_capacity(n_units * cfg.tokens_per_unit);
    let mut chars = vec![PAD_ID; n_units * cfg.tokens_per_unit * t_c];
    for (slot, &i) in units.iter().flatten().enumerate() {
        if i == usize::MAX {
            tokens.push(PAD_ID);
            continue;
        }
        tokens.push(vocab.token_id(&toks[i]));
        for (k, c) in toks[i].chars().take(t_c).enumerate() {
            chars[slot * t_c + k] = vocab.char_id(c);
        }
    }
    EncodedDocument {
        tokens_per_unit: cfg.tokens_per_unit,
        chars_per_token: t_c,
        n_units,
        tokens,
        chars,
    }
}
