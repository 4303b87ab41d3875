//! Verification and calibration metrics over per-trial posteriors.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::sampler::SubsetTag;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialResult {
    pub pair_id: String,
    pub subset: SubsetTag,
    /// Posterior of the same-author hypothesis.
    pub s: f64,
    pub a_true: bool,
    pub a_hat: bool,
    /// `max(s, 1 − s)`
    pub confidence: f64,
    /// `s` was exactly 0.5 and `a_hat` fell back to 0.
    pub tie: bool,
}

impl TrialResult {
    pub fn new(pair_id: impl Into<String>, subset: SubsetTag, s: f64) -> Self {
        Self {
            pair_id: pair_id.into(),
            subset,
            s,
            a_true: subset.same_author(),
            a_hat: s > 0.5,
            confidence: s.max(1.0 - s),
            tie: s == 0.5,
        }
    }

    pub fn correct(&self) -> bool {
        self.a_hat == self.a_true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("AUC is undefined when only one class is present")]
    SingleClass,
    #[error("at least one calibration bin is required")]
    NoBins,
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(results: &[TrialResult]) -> Result<f64, MetricsError> {
    let n_pos = results.iter().filter(|r| r.a_true).count();
    let n_neg = results.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| results[a].s.total_cmp(&results[b].s));
    let mut pos_rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && results[order[end]].s == results[order[k]].s {
            end += 1;
        }
        // 1-based ranks k+1..=end share their mean
        let rank = (k + 1 + end) as f64 / 2.0;
        pos_rank_sum += rank * order[k..end].iter().filter(|&&i| results[i].a_true).count() as f64;
        k = end;
    }
    let np = n_pos as f64;
    Ok((pos_rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// `(n_correct + n_nonresponse · n_correct / n) / n`
pub fn c_at_1_counts(n: usize, n_correct: usize, n_nonresponse: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let c = n_correct as f64;
    (c + n_nonresponse as f64 * c / n) / n
}

/// Every trial here is answered, so this is plain accuracy.
pub fn c_at_1(results: &[TrialResult]) -> f64 {
    c_at_1_counts(
        results.len(),
        results.iter().filter(|r| r.correct()).count(),
        0,
    )
}

pub fn accuracy(results: &[TrialResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.correct()).count() as f64 / results.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

pub fn confusion_counts(results: &[TrialResult]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for r in results {
        match (r.a_true, r.a_hat) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// `(F1, F0.5u)` on the same-author class, with no non-responses.
pub fn f1_and_f05u(results: &[TrialResult]) -> (f64, f64) {
    let c = confusion_counts(results);
    let (tp, fp, fn_) = (c.tp as f64, c.fp as f64, c.fn_ as f64);
    let f1_den = 2.0 * tp + fp + fn_;
    let f1 = if f1_den == 0.0 || tp == 0.0 {
        if f1_den == 0.0 {
            log::warn!("F1 undefined (no positives predicted or present), reporting 0");
        }
        0.0
    } else {
        2.0 * tp / f1_den
    };
    let u = 0.0;
    let f05_den = 1.25 * tp + 0.25 * (fn_ + u) + fp;
    let f05u = if f05_den == 0.0 {
        log::warn!("F0.5u undefined (no positives predicted or present), reporting 0");
        0.0
    } else {
        1.25 * tp / f05_den
    };
    (f1, f05u)
}

/// `1 − mean((s − a)²)`
pub fn brier_complement(results: &[TrialResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let sse: f64 = results
        .iter()
        .map(|r| {
            let e = r.s - if r.a_true { 1.0 } else { 0.0 };
            e * e
        })
        .sum();
    1.0 - sse / results.len() as f64
}

pub fn mean_confidence(results: &[TrialResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().map(|r| r.confidence).sum::<f64>() / results.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean confidence, `None` when empty.
    pub confidence: Option<f64>,
    /// Fraction of correct predictions, `None` when empty.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Calibration {
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
    pub mce: f64,
}

/// Edges of `n` equal-width bins over `[lo, hi]`.
pub fn bin_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|b| lo + (hi - lo) * b as f64 / n as f64)
        .collect()
}

/// Index of the bin holding `x`: `[e_b, e_{b+1})`, last bin closed. Values
/// outside the range go to the nearest end bin.
pub fn bin_index(edges: &[f64], x: f64) -> usize {
    let n = edges.len() - 1;
    (1..n).take_while(|&b| x >= edges[b]).count()
}

/// Equal-width reliability bins over `[0.5, 1]`, with expected and maximum
/// calibration error over non-empty bins.
pub fn calibration(results: &[TrialResult], n_bins: usize) -> Result<Calibration, MetricsError> {
    if n_bins == 0 {
        return Err(MetricsError::NoBins);
    }
    let edges = bin_edges(0.5, 1.0, n_bins);
    let mut count = vec![0usize; n_bins];
    let mut conf = vec![0.0; n_bins];
    let mut correct = vec![0usize; n_bins];
    for r in results {
        let b = bin_index(&edges, r.confidence);
        count[b] += 1;
        conf[b] += r.confidence;
        correct[b] += r.correct() as usize;
    }
    let n = results.len() as f64;
    let (mut ece, mut mce) = (0.0f64, 0.0f64);
    let bins = (0..n_bins)
        .map(|b| {
            let (confidence, accuracy) = if count[b] == 0 {
                (None, None)
            } else {
                let c = conf[b] / count[b] as f64;
                let a = correct[b] as f64 / count[b] as f64;
                let gap = (a - c).abs();
                ece += count[b] as f64 / n * gap;
                mce = mce.max(gap);
                (Some(c), Some(a))
            };
            CalibrationBin {
                lo: edges[b],
                hi: edges[b + 1],
                count: count[b],
                confidence,
                accuracy,
            }
        })
        .collect();
    Ok(Calibration { bins, ece, mce })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    /// `None` when the trials hold a single class.
    pub auc: Option<f64>,
    pub c_at_1: f64,
    pub f_05_u: f64,
    pub f1: f64,
    pub brier: f64,
    /// Mean of the five metrics above; `None` without an AUC.
    pub overall: Option<f64>,
    pub conf_mean: f64,
    pub ece: f64,
    pub mce: f64,
    pub n_trials: usize,
}

pub fn metrics_report(
    results: &[TrialResult],
    n_bins: usize,
) -> Result<MetricsReport, MetricsError> {
    let auc = auc(results).ok();
    let c_at_1 = c_at_1(results);
    let (f1, f_05_u) = f1_and_f05u(results);
    let brier = brier_complement(results);
    let cal = calibration(results, n_bins)?;
    Ok(MetricsReport {
        auc,
        c_at_1,
        f_05_u,
        f1,
        brier,
        overall: auc.map(|a| (a + c_at_1 + f_05_u + f1 + brier) / 5.0),
        conf_mean: mean_confidence(results),
        ece: cal.ece,
        mce: cal.mce,
        n_trials: results.len(),
    })
}

/// One line of a reliability or histogram table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinRow {
    pub bin_center: f64,
    pub confidence: Option<f64>,
    pub accuracy: Option<f64>,
    pub count: usize,
}

pub fn reliability_rows(cal: &Calibration) -> Vec<BinRow> {
    cal.bins
        .iter()
        .map(|b| BinRow {
            bin_center: 0.5 * (b.lo + b.hi),
            confidence: b.confidence,
            accuracy: b.accuracy,
            count: b.count,
        })
        .collect()
}

/// Histogram of the posterior `s` over `[0, 1]` for one subset (or all
/// trials), with per-bin confidence/accuracy and subset-level annotations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorHistogram {
    pub subset: Option<SubsetTag>,
    pub rows: Vec<BinRow>,
    pub accuracy: f64,
    pub conf_mean: f64,
    pub n_trials: usize,
}

pub fn filter_subset(results: &[TrialResult], subset: Option<SubsetTag>) -> Vec<TrialResult> {
    results
        .iter()
        .filter(|r| subset.is_none_or(|t| r.subset == t))
        .cloned()
        .collect()
}

pub fn posterior_histogram(
    results: &[TrialResult],
    subset: Option<SubsetTag>,
    n_bins: usize,
) -> PosteriorHistogram {
    let kept = filter_subset(results, subset);
    let n_bins = n_bins.max(1);
    let edges = bin_edges(0.0, 1.0, n_bins);
    let mut groups: Vec<Vec<&TrialResult>> = vec![Vec::new(); n_bins];
    for r in &kept {
        groups[bin_index(&edges, r.s)].push(r);
    }
    let rows = groups
        .iter()
        .enumerate()
        .map(|(b, g)| {
            let n = g.len() as f64;
            let (confidence, accuracy) = if g.is_empty() {
                (None, None)
            } else {
                (
                    Some(g.iter().map(|r| r.confidence).sum::<f64>() / n),
                    Some(g.iter().filter(|r| r.correct()).count() as f64 / n),
                )
            };
            BinRow {
                bin_center: 0.5 * (edges[b] + edges[b + 1]),
                confidence,
                accuracy,
                count: g.len(),
            }
        })
        .collect();
    PosteriorHistogram {
        subset,
        rows,
        accuracy: accuracy(&kept),
        conf_mean: mean_confidence(&kept),
        n_trials: kept.len(),
    }
}
