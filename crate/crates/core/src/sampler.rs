//! Epoch-wise re-sampling of training pairs into the subsets SA_SF, SA_DF,
//! DA_SF and DA_DF.
//!
//! The first loop walks over authors (in a fresh random order each round)
//! and either forms a same-author pair or hands one document to the
//! different-author candidate pool; authors leave the loop once all their
//! documents are used. The second loop pairs up the candidates. Each
//! document is used at most once per epoch.
//!
//! Failed attempts fall through instead of retrying: SA_SF → SA_DF → DA
//! candidate, DA_SF → DA_DF, DA_DF → DA_SF, and a candidate with no
//! different-author partner left is dropped.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::Document;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SubsetTag {
    #[cfg_attr(feature = "serde", serde(rename = "SA_SF"))]
    SaSf,
    #[cfg_attr(feature = "serde", serde(rename = "SA_DF"))]
    SaDf,
    #[cfg_attr(feature = "serde", serde(rename = "DA_SF"))]
    DaSf,
    #[cfg_attr(feature = "serde", serde(rename = "DA_DF"))]
    DaDf,
}

impl SubsetTag {
    pub const ALL: [SubsetTag; 4] = [Self::SaSf, Self::SaDf, Self::DaSf, Self::DaDf];

    pub fn from_labels(same_author: bool, same_fandom: bool) -> Self {
        match (same_author, same_fandom) {
            (true, true) => Self::SaSf,
            (true, false) => Self::SaDf,
            (false, true) => Self::DaSf,
            (false, false) => Self::DaDf,
        }
    }

    pub fn same_author(self) -> bool {
        matches!(self, Self::SaSf | Self::SaDf)
    }

    pub fn same_fandom(self) -> bool {
        matches!(self, Self::SaSf | Self::DaSf)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SaSf => "SA_SF",
            Self::SaDf => "SA_DF",
            Self::DaSf => "DA_SF",
            Self::DaDf => "DA_DF",
        }
    }
}

impl fmt::Display for SubsetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown subset tag `{0}` (expected SA_SF, SA_DF, DA_SF or DA_DF)")]
pub struct ParseSubsetError(pub String);

impl FromStr for SubsetTag {
    type Err = ParseSubsetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseSubsetError(s.into()))
    }
}

/// An unordered document pair with its `(a, f)` labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DocumentPair {
    pub doc_1: String,
    pub doc_2: String,
    pub same_author: bool,
    pub same_fandom: bool,
}

impl DocumentPair {
    pub fn a(&self) -> u8 {
        self.same_author as u8
    }

    pub fn f(&self) -> u8 {
        self.same_fandom as u8
    }

    pub fn subset(&self) -> SubsetTag {
        SubsetTag::from_labels(self.same_author, self.same_fandom)
    }

    /// Ids in sorted order, identifying the pair regardless of orientation.
    pub fn key(&self) -> (&str, &str) {
        if self.doc_1 <= self.doc_2 {
            (&self.doc_1, &self.doc_2)
        } else {
            (&self.doc_2, &self.doc_1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct SamplerConfig {
    /// Probability of attempting a same-author pair for an author visit.
    pub delta_1: f64,
    /// Probability that a same-author attempt targets the same fandom.
    pub delta_2: f64,
    /// Probability that a different-author attempt targets the same fandom.
    pub delta_3: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            delta_1: 0.7,
            delta_2: 0.6,
            delta_3: 0.6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{name} = {value} is not a probability in [0, 1]")]
pub struct SamplerConfigError {
    pub name: &'static str,
    pub value: f64,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerConfigError> {
        for (name, value) in [
            ("delta_1", self.delta_1),
            ("delta_2", self.delta_2),
            ("delta_3", self.delta_3),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SamplerConfigError { name, value });
            }
        }
        Ok(())
    }
}

/// A pair by position in the document slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexPair {
    pub first: usize,
    pub second: usize,
    pub subset: SubsetTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochPairs {
    pub pairs: Vec<IndexPair>,
    /// Documents that ended up in no pair.
    pub unpaired: Vec<usize>,
}

struct Metadata {
    author: Vec<usize>,
    fandom: Vec<usize>,
    n_authors: usize,
}

fn intern<'a>(keys: impl Iterator<Item = &'a str>) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<&str, usize> = BTreeMap::new();
    let ids = keys
        .map(|k| {
            let next = map.len();
            *map.entry(k).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

impl Metadata {
    fn new(docs: &[Document]) -> Self {
        let (author, n_authors) = intern(docs.iter().map(|d| d.author_id.as_str()));
        let (fandom, _) = intern(docs.iter().map(|d| d.fandom_id.as_str()));
        Self {
            author,
            fandom,
            n_authors,
        }
    }

    fn pair(&self, rng: &mut Rng, x: usize, y: usize) -> IndexPair {
        let (first, second) = if rng.gen::<bool>() { (x, y) } else { (y, x) };
        IndexPair {
            first,
            second,
            subset: SubsetTag::from_labels(
                self.author[x] == self.author[y],
                self.fandom[x] == self.fandom[y],
            ),
        }
    }
}

/// One epoch of pairs, by document index.
pub fn resample_epoch_indexed(docs: &[Document], cfg: &SamplerConfig) -> EpochPairs {
    let meta = Metadata::new(docs);
    let mut rng = rng::rng_from(cfg.seed);
    let mut pairs = Vec::new();

    // loop 1: same-author pairs and DA candidates
    let mut pools: Vec<Vec<usize>> = alloc::vec![Vec::new(); meta.n_authors];
    for (i, &a) in meta.author.iter().enumerate() {
        pools[a].push(i);
    }
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }
    let mut active: Vec<usize> = (0..meta.n_authors)
        .filter(|&a| !pools[a].is_empty())
        .collect();
    let mut candidates = Vec::new();
    while !active.is_empty() {
        active.shuffle(&mut rng);
        for &a in &active {
            let pool = &mut pools[a];
            let Some(d1) = pool.pop() else { continue };
            if rng.gen::<f64>() < cfg.delta_1 {
                let f1 = meta.fandom[d1];
                let same = |d: &usize| meta.fandom[*d] == f1;
                let partner = if rng.gen::<f64>() < cfg.delta_2 {
                    pool.iter()
                        .position(same)
                        .or_else(|| pool.iter().position(|d| !same(d)))
                } else {
                    pool.iter().position(|d| !same(d))
                };
                match partner {
                    Some(pos) => {
                        let d2 = pool.swap_remove(pos);
                        pairs.push(meta.pair(&mut rng, d1, d2));
                    }
                    None => candidates.push(d1),
                }
            } else {
                candidates.push(d1);
            }
        }
        active.retain(|&a| !pools[a].is_empty());
    }

    // loop 2: different-author pairs
    candidates.shuffle(&mut rng);
    let n = candidates.len();
    let mut alive = alloc::vec![true; n];
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, &d) in candidates.iter().enumerate() {
        buckets.entry(meta.fandom[d]).or_default().push(pos);
    }
    let mut bucket_head: BTreeMap<usize, usize> = buckets.keys().map(|&f| (f, 0)).collect();
    let mut remaining = n;
    let mut unpaired = Vec::new();

    let find_same_fandom = |pos: usize, alive: &[bool], heads: &mut BTreeMap<usize, usize>| {
        let d = candidates[pos];
        let f = meta.fandom[d];
        let bucket = &buckets[&f];
        let head = heads.get_mut(&f).expect("bucket exists");
        while *head < bucket.len() && !alive[bucket[*head]] {
            *head += 1;
        }
        bucket[*head..]
            .iter()
            .copied()
            .find(|&q| alive[q] && meta.author[candidates[q]] != meta.author[d])
    };
    let find_diff_fandom = |pos: usize, alive: &[bool]| {
        let d = candidates[pos];
        (pos + 1..n).find(|&q| {
            alive[q]
                && meta.fandom[candidates[q]] != meta.fandom[d]
                && meta.author[candidates[q]] != meta.author[d]
        })
    };

    for pos in 0..n {
        if !alive[pos] {
            continue;
        }
        alive[pos] = false;
        remaining -= 1;
        if remaining == 0 {
            unpaired.push(candidates[pos]);
            break;
        }
        let partner = if rng.gen::<f64>() < cfg.delta_3 {
            find_same_fandom(pos, &alive, &mut bucket_head)
                .or_else(|| find_diff_fandom(pos, &alive))
        } else {
            find_diff_fandom(pos, &alive)
                .or_else(|| find_same_fandom(pos, &alive, &mut bucket_head))
        };
        match partner {
            Some(q) => {
                alive[q] = false;
                remaining -= 1;
                pairs.push(meta.pair(&mut rng, candidates[pos], candidates[q]));
            }
            None => unpaired.push(candidates[pos]),
        }
    }
    EpochPairs { pairs, unpaired }
}

fn to_document_pairs(docs: &[Document], pairs: &[IndexPair]) -> Vec<DocumentPair> {
    pairs
        .iter()
        .map(|p| DocumentPair {
            doc_1: docs[p.first].doc_id.clone(),
            doc_2: docs[p.second].doc_id.clone(),
            same_author: p.subset.same_author(),
            same_fandom: p.subset.same_fandom(),
        })
        .collect()
}

/// One epoch of training pairs.
pub fn resample_epoch(docs: &[Document], cfg: &SamplerConfig) -> Vec<DocumentPair> {
    to_document_pairs(docs, &resample_epoch_indexed(docs, cfg).pairs)
}

/// Draw the evaluation pairs once. Only subsets listed in `keep` survive;
/// `keep = [SaDf, DaSf]` gives the cross-topic benchmark.
pub fn sample_fixed_test_pairs(
    docs: &[Document],
    seed: u64,
    keep: &[SubsetTag],
) -> Vec<DocumentPair> {
    let cfg = SamplerConfig {
        seed: rng::derive_seed(seed, rng::tag::TEST_PAIRS, 0),
        ..SamplerConfig::default()
    };
    let epoch = resample_epoch_indexed(docs, &cfg);
    let kept: Vec<IndexPair> = epoch
        .pairs
        .into_iter()
        .filter(|p| keep.contains(&p.subset))
        .collect();
    to_document_pairs(docs, &kept)
}

/// Every same-author cross-fandom pair in `docs`, plus as many randomly
/// drawn different-author same-fandom pairs (without repetition). Gives a
/// balanced, exhaustive cross-topic evaluation set for small corpora.
pub fn balanced_cross_topic_pairs(docs: &[Document], seed: u64) -> Vec<DocumentPair> {
    let mut sa_df = Vec::new();
    let mut da_sf = Vec::new();
    for i in 0..docs.len() {
        for j in i + 1..docs.len() {
            let (a, b) = (&docs[i], &docs[j]);
            let same_author = a.author_id == b.author_id;
            let same_fandom = a.fandom_id == b.fandom_id;
            match (same_author, same_fandom) {
                (true, false) => sa_df.push((i, j)),
                (false, true) => da_sf.push((i, j)),
                _ => {}
            }
        }
    }
    let mut r = rng::rng_for(seed, rng::tag::TEST_PAIRS, 1);
    da_sf.shuffle(&mut r);
    da_sf.truncate(sa_df.len());
    da_sf.sort_unstable();
    sa_df
        .into_iter()
        .map(|p| (p, true))
        .chain(da_sf.into_iter().map(|p| (p, false)))
        .map(|((i, j), same_author)| DocumentPair {
            doc_1: docs[i].doc_id.clone(),
            doc_2: docs[j].doc_id.clone(),
            same_author,
            same_fandom: !same_author,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCount {
    pub doc_1: String,
    pub doc_2: String,
    pub subset: SubsetTag,
    pub count: usize,
}

/// How often each unordered pair was drawn across epochs, most frequent
/// first (ties by id), for a Zipf plot.
pub fn pair_count_histogram(epochs: &[Vec<DocumentPair>]) -> Vec<PairCount> {
    let mut counts: BTreeMap<(&str, &str), (SubsetTag, usize)> = BTreeMap::new();
    for pair in epochs.iter().flatten() {
        counts.entry(pair.key()).or_insert((pair.subset(), 0)).1 += 1;
    }
    let mut out: Vec<PairCount> = counts
        .into_iter()
        .map(|((a, b), (subset, count))| PairCount {
            doc_1: a.into(),
            doc_2: b.into(),
            subset,
            count,
        })
        .collect();
    out.sort_by(|x, y| y.count.cmp(&x.count));
    out
}
