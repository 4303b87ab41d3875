use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{tokenize, Document};

pub const UNK_ID: u32 = 0;
pub const PAD_ID: u32 = 1;
pub const UNK_SYMBOL: &str = "<UNK>";
pub const PAD_SYMBOL: &str = "<PAD>";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("{kind} list must start with {UNK_SYMBOL} and {PAD_SYMBOL}")]
    Reserved { kind: &'static str },
    #[error("duplicate {kind} entry `{entry}`")]
    Duplicate { kind: &'static str, entry: String },
    #[error("character entry `{0}` is not a single character")]
    NotAChar(String),
}

/// Token and character vocabularies with `<UNK>` = 0 and `<PAD>` = 1.
/// Every other symbol maps to `<UNK>`, which is what masks rare
/// (mostly topical) vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    chars: Vec<char>,
    token_to_id: BTreeMap<String, u32>,
    char_to_id: BTreeMap<char, u32>,
}

fn top_k<K: Ord + Clone>(counts: BTreeMap<K, u64>, k: usize) -> Vec<K> {
    let mut ranked: Vec<(K, u64)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic and the sort is stable, so ties keep
    // the smaller key first.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked.truncate(k);
    ranked.into_iter().map(|(key, _)| key).collect()
}

/// Keep the `v_tok` most frequent tokens and `v_chr` most frequent
/// characters of `train_docs`; frequency ties go to the lexicographically
/// smaller symbol.
pub fn build_vocabulary(train_docs: &[Document], v_tok: usize, v_chr: usize) -> Vocabulary {
    let mut tok_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut chr_counts: BTreeMap<char, u64> = BTreeMap::new();
    for doc in train_docs {
        for tok in tokenize(&doc.text) {
            for c in tok.chars() {
                *chr_counts.entry(c).or_default() += 1;
            }
            *tok_counts.entry(tok).or_default() += 1;
        }
    }
    tok_counts.remove(UNK_SYMBOL);
    tok_counts.remove(PAD_SYMBOL);
    Vocabulary::from_parts(top_k(tok_counts, v_tok), top_k(chr_counts, v_chr))
}

impl Vocabulary {
    /// Build from non-reserved entries in id order (ids start at 2).
    pub fn from_parts(tokens: Vec<String>, chars: Vec<char>) -> Self {
        let mut all_tokens = Vec::with_capacity(tokens.len() + 2);
        all_tokens.push(UNK_SYMBOL.to_string());
        all_tokens.push(PAD_SYMBOL.to_string());
        all_tokens.extend(tokens);
        let token_to_id = all_tokens
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let char_to_id = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32 + 2))
            .collect();
        Self {
            tokens: all_tokens,
            chars,
            token_to_id,
            char_to_id,
        }
    }

    /// Rebuild from the serialized lists, which include the two reserved
    /// entries at the front.
    pub fn from_serialized(
        tokens: Vec<String>,
        chars: Vec<String>,
    ) -> Result<Self, VocabularyError> {
        let reserved_ok = |v: &[String]| v.len() >= 2 && v[0] == UNK_SYMBOL && v[1] == PAD_SYMBOL;
        if !reserved_ok(&tokens) {
            return Err(VocabularyError::Reserved { kind: "token" });
        }
        if !reserved_ok(&chars) {
            return Err(VocabularyError::Reserved { kind: "char" });
        }
        let mut char_list = Vec::with_capacity(chars.len() - 2);
        for s in &chars[2..] {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => char_list.push(c),
                _ => return Err(VocabularyError::NotAChar(s.clone())),
            }
        }
        let vocab = Self::from_parts(tokens[2..].to_vec(), char_list);
        if vocab.token_to_id.len() + 2 != vocab.tokens.len() {
            let entry = first_duplicate(&vocab.tokens[2..]);
            return Err(VocabularyError::Duplicate {
                kind: "token",
                entry,
            });
        }
        if vocab.char_to_id.len() != vocab.chars.len() {
            let strs: Vec<String> = vocab.chars.iter().map(|c| c.to_string()).collect();
            return Err(VocabularyError::Duplicate {
                kind: "char",
                entry: first_duplicate(&strs),
            });
        }
        Ok(vocab)
    }

    /// Token list in id order, reserved entries included.
    pub fn token_list(&self) -> &[String] {
        &self.tokens
    }

    /// Character list in id order, reserved entries included.
    pub fn char_list(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.chars.len() + 2);
        out.push(UNK_SYMBOL.to_string());
        out.push(PAD_SYMBOL.to_string());
        out.extend(self.chars.iter().map(|c| c.to_string()));
        out
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn char_count(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn token_id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn char_id(&self, c: char) -> u32 {
        self.char_to_id.get(&c).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Fraction of tokens in `docs` mapped to `<UNK>`.
    pub fn unk_rate(&self, docs: &[Document]) -> f64 {
        let (mut unk, mut total) = (0usize, 0usize);
        for d in docs {
            for t in tokenize(&d.text) {
                total += 1;
                unk += (self.token_id(&t) == UNK_ID) as usize;
            }
        }
        if total == 0 {
            0.0
        } else {
            unk as f64 / total as f64
        }
    }
}

fn first_duplicate(items: &[String]) -> String {
    let mut seen = alloc::collections::BTreeSet::new();
    items
        .iter()
        .find(|s| !seen.insert(s.as_str()))
        .cloned()
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(alloc::format!("{i}"), "a", "f", *t))
            .collect()
    }

    #[test]
    fn reserved_ids() {
        let v = build_vocabulary(&docs(&["x y"]), 10, 10);
        assert_eq!(v.token(UNK_ID), Some(UNK_SYMBOL));
        assert_eq!(v.token(PAD_ID), Some(PAD_SYMBOL));
        assert_eq!(v.token_id("never-seen"), UNK_ID);
        assert_eq!(v.char_id('€'), UNK_ID);
    }

    #[test]
    fn cutoff_drops_least_frequent() {
        let v = build_vocabulary(&docs(&["a a a b b c"]), 2, 10);
        assert_eq!(v.token_count(), 4);
        assert_eq!(v.token_id("a"), 2);
        assert_eq!(v.token_id("b"), 3);
        assert_eq!(v.token_id("c"), UNK_ID);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = build_vocabulary(&docs(&["zeta alpha mid"]), 2, 10);
        assert_ne!(v.token_id("alpha"), UNK_ID);
        assert_ne!(v.token_id("mid"), UNK_ID);
        assert_eq!(v.token_id("zeta"), UNK_ID);
    }

    #[test]
    fn ids_are_dense() {
        let v = build_vocabulary(&docs(&["the cat, the hat."]), 100, 100);
        for (i, t) in v.token_list().iter().enumerate().skip(2) {
            assert_eq!(v.token_id(t), i as u32);
        }
        for (i, c) in v.char_list().iter().enumerate().skip(2) {
            assert_eq!(v.char_id(c.chars().next().unwrap()), i as u32);
        }
    }

    #[test]
    fn serialized_round_trip_and_validation() {
        let v = build_vocabulary(&docs(&["one two two three"]), 5, 5);
        let back = Vocabulary::from_serialized(v.token_list().to_vec(), v.char_list()).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::from_serialized(vec!["x".into()], v.char_list()).is_err());
        let mut dup = v.token_list().to_vec();
        dup.push(dup[2].clone());
        assert!(matches!(
            Vocabulary::from_serialized(dup, v.char_list()),
            Err(VocabularyError::Duplicate { .. })
        ));
    }
}
