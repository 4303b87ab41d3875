//! Synthetic corpora for benchmarks and tests.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::LogNormal;

use crate::data::Document;
use crate::num;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct SamplerCorpusConfig {
    pub n_docs: usize,
    pub n_fandoms: usize,
    pub max_docs_per_author: usize,
    /// Target mean of the truncated Zipf docs-per-author law.
    pub mean_docs_per_author: f64,
    /// Probability that a document is written in its author's home fandom.
    pub home_fandom_prob: f64,
}

impl Default for SamplerCorpusConfig {
    fn default() -> Self {
        Self {
            n_docs: 10_000,
            n_fandoms: 50,
            max_docs_per_author: 20,
            mean_docs_per_author: 303_142.0 / 200_732.0,
            home_fandom_prob: 0.5,
        }
    }
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|k| num::powf(k as f64, -exponent)).collect()
}

fn zipf_mean(n: usize, exponent: f64) -> f64 {
    let w = zipf_weights(n, exponent);
    let z: f64 = w.iter().sum();
    w.iter()
        .enumerate()
        .map(|(k, w)| (k + 1) as f64 * w)
        .sum::<f64>()
        / z
}

/// Exponent of a Zipf law on `1..=n` whose mean is `mean`.
pub fn fit_zipf_exponent(n: usize, mean: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 50.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if zipf_mean(n, mid) > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Documents with heavy-tailed docs-per-author counts spread over fandoms.
/// Texts are placeholders; only ids and labels matter to the sampler.
pub fn sampler_corpus(cfg: &SamplerCorpusConfig, seed: u64) -> Vec<Document> {
    let mut r = rng::rng_for(seed, rng::tag::SYNTHETIC, 0);
    let exponent = fit_zipf_exponent(cfg.max_docs_per_author, cfg.mean_docs_per_author);
    let counts = WeightedIndex::new(zipf_weights(cfg.max_docs_per_author, exponent))
        .expect("positive weights");
    let mut docs = Vec::with_capacity(cfg.n_docs);
    let mut author = 0usize;
    while docs.len() < cfg.n_docs {
        let n = (counts.sample(&mut r) + 1).min(cfg.n_docs - docs.len());
        let home = r.gen_range(0..cfg.n_fandoms);
        for k in 0..n {
            let fandom = if r.gen_bool(cfg.home_fandom_prob) {
                home
            } else {
                r.gen_range(0..cfg.n_fandoms)
            };
            let id = format!("a{author}_d{k}");
            docs.push(Document::new(
                &id,
                format!("a{author}"),
                format!("f{fandom}"),
                format!("text of {id}"),
            ));
        }
        author += 1;
    }
    docs
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct StyleCorpusConfig {
    pub n_authors: usize,
    pub n_fandoms: usize,
    /// Documents each author writes per fandom.
    pub docs_per_fandom: usize,
    /// Shared stylistic vocabulary size.
    pub style_vocab: usize,
    /// Topic vocabulary size per fandom.
    pub topic_vocab: usize,
    /// Probability that a token is a topic word of the document's fandom.
    pub topic_prob: f64,
    /// Log-normal spread of each author's perturbation of the shared style
    /// distribution.
    pub style_sigma: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
}

impl Default for StyleCorpusConfig {
    fn default() -> Self {
        Self {
            n_authors: 200,
            n_fandoms: 2,
            docs_per_fandom: 2,
            style_vocab: 120,
            topic_vocab: 60,
            topic_prob: 0.3,
            style_sigma: 3.0,
            min_tokens: 100,
            max_tokens: 140,
        }
    }
}

fn style_word(k: usize) -> String {
    format!("w{k}")
}

fn topic_word(fandom: usize, k: usize) -> String {
    format!("f{fandom}t{k}")
}

/// Authors draw tokens from their own perturbation of a shared Zipf style
/// law; fandoms inject their topic words into every document written in
/// them, acting as a confounder between authors.
pub fn style_corpus(cfg: &StyleCorpusConfig, seed: u64) -> Vec<Document> {
    let mut r = rng::rng_for(seed, rng::tag::SYNTHETIC, 1);
    let spread = LogNormal::new(0.0, cfg.style_sigma).expect("valid sigma");
    let base = zipf_weights(cfg.style_vocab, 1.0);
    let topics: Vec<WeightedIndex<f64>> = (0..cfg.n_fandoms)
        .map(|_| {
            let mut w = zipf_weights(cfg.topic_vocab, 1.0);
            w.shuffle(&mut r);
            WeightedIndex::new(w).expect("positive weights")
        })
        .collect();
    let mut docs = Vec::new();
    for a in 0..cfg.n_authors {
        let weights: Vec<f64> = base.iter().map(|w| w * spread.sample(&mut r)).collect();
        let style = WeightedIndex::new(weights).expect("positive weights");
        for f in 0..cfg.n_fandoms {
            for k in 0..cfg.docs_per_fandom {
                let len = r.gen_range(cfg.min_tokens..=cfg.max_tokens);
                let words: Vec<String> = (0..len)
                    .map(|_| {
                        if r.gen_bool(cfg.topic_prob) {
                            topic_word(f, topics[f].sample(&mut r))
                        } else {
                            style_word(style.sample(&mut r))
                        }
                    })
                    .collect();
                docs.push(Document::new(
                    format!("a{a:03}_f{f}_{k}"),
                    format!("a{a:03}"),
                    format!("f{f}"),
                    words.join(" "),
                ));
            }
        }
    }
    docs
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    #[test]
    fn fitted_exponent_hits_mean() {
        let e = fit_zipf_exponent(20, 1.51);
        assert!((zipf_mean(20, e) - 1.51).abs() < 1e-9);
    }

    #[test]
    fn sampler_corpus_shape() {
        let cfg = SamplerCorpusConfig {
            n_docs: 2000,
            ..Default::default()
        };
        let docs = sampler_corpus(&cfg, 1);
        assert_eq!(docs.len(), 2000);
        let mut per_author: BTreeMap<&str, usize> = BTreeMap::new();
        for d in &docs {
            *per_author.entry(&d.author_id).or_default() += 1;
        }
        let mean = docs.len() as f64 / per_author.len() as f64;
        assert!((mean - cfg.mean_docs_per_author).abs() < 0.15, "{mean}");
        assert!(per_author.values().all(|&n| n <= 20));
    }

    #[test]
    fn style_corpus_shape_and_determinism() {
        let cfg = StyleCorpusConfig {
            n_authors: 5,
            ..Default::default()
        };
        let docs = style_corpus(&cfg, 3);
        assert_eq!(docs.len(), 20);
        assert_eq!(docs, style_corpus(&cfg, 3));
        assert_ne!(docs, style_corpus(&cfg, 4));
        for d in &docs {
            let n = d.text.split(' ').count();
            assert!((100..=140).contains(&n));
        }
    }
}
