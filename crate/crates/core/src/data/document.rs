use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::{num, rng};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Document {
    pub doc_id: String,
    pub author_id: String,
    pub fandom_id: String,
    pub text: String,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        author_id: impl Into<String>,
        fandom_id: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            doc_id: doc_id.into(),
            author_id: author_id.into(),
            fandom_id: fandom_id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataError {
    #[error("duplicate doc_id `{0}`")]
    DuplicateId(String),
    #[error("document `{0}` has no text")]
    EmptyText(String),
    #[error("cannot split: {0}")]
    Split(&'static str),
    #[error("test fraction must lie in (0, 1)")]
    Fraction,
}

/// Drop exact-duplicate texts (first occurrence wins), then reject empty
/// texts and repeated ids.
pub fn dedup_documents(docs: Vec<Document>) -> Result<Vec<Document>, DataError> {
    let mut seen_text = BTreeSet::new();
    let mut seen_id = BTreeSet::new();
    let mut out = Vec::with_capacity(docs.len());
    for doc in docs {
        if doc.text.trim().is_empty() {
            return Err(DataError::EmptyText(doc.doc_id));
        }
        if !seen_text.insert(doc.text.clone()) {
            continue;
        }
        if !seen_id.insert(doc.doc_id.clone()) {
            return Err(DataError::DuplicateId(doc.doc_id));
        }
        out.push(doc);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<Document>,
    pub test: Vec<Document>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitStats {
    pub docs: usize,
    pub authors: usize,
    pub fandoms: usize,
}

impl SplitStats {
    pub fn of(docs: &[Document]) -> Self {
        let authors: BTreeSet<&str> = docs.iter().map(|d| d.author_id.as_str()).collect();
        let fandoms: BTreeSet<&str> = docs.iter().map(|d| d.fandom_id.as_str()).collect();
        Self {
            docs: docs.len(),
            authors: authors.len(),
            fandoms: fandoms.len(),
        }
    }
}

impl CorpusSplit {
    pub fn train_stats(&self) -> SplitStats {
        SplitStats::of(&self.train)
    }

    pub fn test_stats(&self) -> SplitStats {
        SplitStats::of(&self.test)
    }

    pub fn shared_authors(&self) -> BTreeSet<&str> {
        let train: BTreeSet<&str> = self.train.iter().map(|d| d.author_id.as_str()).collect();
        self.test
            .iter()
            .map(|d| d.author_id.as_str())
            .filter(|a| train.contains(a))
            .collect()
    }

    pub fn shared_fandoms(&self) -> BTreeSet<&str> {
        let train: BTreeSet<&str> = self.train.iter().map(|d| d.fandom_id.as_str()).collect();
        self.test
            .iter()
            .map(|d| d.fandom_id.as_str())
            .filter(|f| train.contains(f))
            .collect()
    }
}

fn check_fraction(fraction: f64) -> Result<(), DataError> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(DataError::Fraction)
    }
}

/// Number of groups sent to the test side: `round(fraction · n)`, kept in
/// `[1, n - 1]`.
fn test_group_count(n: usize, fraction: f64) -> usize {
    let k = num::round(fraction * n as f64) as usize;
    k.clamp(1, n - 1)
}

fn shuffled_groups<'a>(
    docs: &'a [Document],
    key: impl Fn(&'a Document) -> &'a str,
    seed: u64,
) -> Vec<&'a str> {
    let set: BTreeSet<&str> = docs.iter().map(key).collect();
    let mut groups: Vec<&str> = set.into_iter().collect();
    groups.shuffle(&mut rng::rng_for(seed, rng::tag::SPLIT, 0));
    groups
}

/// Partition fandoms into train/test sides and drop from the test side
/// every document whose author also writes on the train side. Author and
/// fandom sets of the result are disjoint.
pub fn split_disjoint(
    docs: &[Document],
    test_fandom_fraction: f64,
    seed: u64,
) -> Result<CorpusSplit, DataError> {
    check_fraction(test_fandom_fraction)?;
    if docs.is_empty() {
        return Err(DataError::Split("no documents"));
    }
    let fandoms = shuffled_groups(docs, |d| d.fandom_id.as_str(), seed);
    if fandoms.len() < 2 {
        return Err(DataError::Split("need at least two fandoms"));
    }
    let n_test = test_group_count(fandoms.len(), test_fandom_fraction);
    let test_fandoms: BTreeSet<&str> = fandoms[..n_test].iter().copied().collect();

    let (test, train): (Vec<&Document>, Vec<&Document>) = docs
        .iter()
        .partition(|d| test_fandoms.contains(d.fandom_id.as_str()));
    let train_authors: BTreeSet<&str> = train.iter().map(|d| d.author_id.as_str()).collect();
    let test: Vec<Document> = test
        .into_iter()
        .filter(|d| !train_authors.contains(d.author_id.as_str()))
        .cloned()
        .collect();
    let train: Vec<Document> = train.into_iter().cloned().collect();

    if train.is_empty() {
        return Err(DataError::Split("train side is empty"));
    }
    if test.is_empty() {
        return Err(DataError::Split(
            "test side is empty after removing shared authors",
        ));
    }
    Ok(CorpusSplit { train, test })
}

/// Author-disjoint split that keeps fandoms shared between both sides.
/// Used for open-author, closed-topic experiments where the test side must
/// still contain cross-topic pairs.
pub fn split_by_author(
    docs: &[Document],
    test_author_fraction: f64,
    seed: u64,
) -> Result<CorpusSplit, DataError> {
    check_fraction(test_author_fraction)?;
    let authors = shuffled_groups(docs, |d| d.author_id.as_str(), seed);
    if authors.len() < 2 {
        return Err(DataError::Split("need at least two authors"));
    }
    let n_test = test_group_count(authors.len(), test_author_fraction);
    let test_authors: BTreeSet<&str> = authors[..n_test].iter().copied().collect();
    let (test, train): (Vec<Document>, Vec<Document>) = docs
        .iter()
        .cloned()
        .partition(|d| test_authors.contains(d.author_id.as_str()));
    Ok(CorpusSplit { train, test })
}
