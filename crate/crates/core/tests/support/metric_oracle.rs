//! Brute-force reimplementations of the verification and calibration
//! metrics.

#![allow(dead_code)]

use calav_core::metrics::*;
use calav_core::rng::rng_from;
use calav_core::SubsetTag;
use rand::Rng;

pub fn random_trials(rng: &mut impl Rng) -> Vec<TrialResult> {
    let n = rng.gen_range(1..=50);
    // coarse grids produce ties, including s = 0.5 exactly
    let grid = [0, 4, 10, 20][rng.gen_range(0..4)];
    (0..n)
        .map(|k| {
            let s = if grid == 0 {
                rng.gen::<f64>()
            } else {
                rng.gen_range(0..=grid) as f64 / grid as f64
            };
            let subset = SubsetTag::ALL[rng.gen_range(0..4)];
            TrialResult::new(format!("t{k}"), subset, s)
        })
        .collect()
}

pub fn brute_auc(t: &[TrialResult]) -> Option<f64> {
    let (mut wins, mut total) = (0.0, 0.0);
    for p in t.iter().filter(|r| r.a_true) {
        for q in t.iter().filter(|r| !r.a_true) {
            total += 1.0;
            if p.s > q.s {
                wins += 1.0;
            } else if p.s == q.s {
                wins += 0.5;
            }
        }
    }
    (total > 0.0).then(|| wins / total)
}

pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

pub fn brute_counts(t: &[TrialResult]) -> Counts {
    let pred = |r: &TrialResult| r.s > 0.5;
    let n = |f: &dyn Fn(&TrialResult) -> bool| t.iter().filter(|r| f(r)).count();
    Counts {
        tp: n(&|r| r.a_true && pred(r)),
        fp: n(&|r| !r.a_true && pred(r)),
        fn_: n(&|r| r.a_true && !pred(r)),
        tn: n(&|r| !r.a_true && !pred(r)),
    }
}

pub fn brute_calibration(t: &[TrialResult], n_bins: usize) -> (Vec<usize>, f64, f64) {
    let mut members: Vec<Vec<&TrialResult>> = vec![Vec::new(); n_bins];
    for r in t {
        let conf = if r.s >= 0.5 { r.s } else { 1.0 - r.s };
        let mut bin = n_bins - 1;
        for b in 0..n_bins {
            let lo = 0.5 + 0.5 * b as f64 / n_bins as f64;
            let hi = 0.5 + 0.5 * (b + 1) as f64 / n_bins as f64;
            if conf >= lo && conf < hi {
                bin = b;
                break;
            }
        }
        members[bin].push(r);
    }
    let (mut ece, mut mce) = (0.0f64, 0.0f64);
    for m in members.iter().filter(|m| !m.is_empty()) {
        let k = m.len() as f64;
        let conf = m.iter().map(|r| r.s.max(1.0 - r.s)).sum::<f64>() / k;
        let acc = m.iter().filter(|r| (r.s > 0.5) == r.a_true).count() as f64 / k;
        ece += k / t.len() as f64 * (acc - conf).abs();
        mce = mce.max((acc - conf).abs());
    }
    (members.iter().map(Vec::len).collect(), ece, mce)
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Compare every metric with its brute-force counterpart on `instances`
/// random trial lists of at most 50 trials.
pub fn check_metrics(seed: u64, instances: usize) -> Result<(), String> {
    let mut rng = rng_from(seed);
    for case in 0..instances {
        let t = random_trials(&mut rng);
        let n = t.len() as f64;

        match (auc(&t), brute_auc(&t)) {
            (Ok(a), Some(b)) => ensure(close(a, b), || format!("case {case}: auc {a} vs {b}"))?,
            (Err(MetricsError::SingleClass), None) => {}
            (a, b) => return Err(format!("case {case}: auc {a:?} vs {b:?}")),
        }

        let c = confusion_counts(&t);
        let o = brute_counts(&t);
        ensure(
            (c.tp, c.fp, c.fn_, c.tn) == (o.tp, o.fp, o.fn_, o.tn),
            || format!("case {case}: confusion counts"),
        )?;

        let correct = o.tp + o.tn;
        ensure(close(c_at_1(&t), correct as f64 / n), || {
            format!("case {case}: c@1")
        })?;
        ensure(c_at_1(&t) == accuracy(&t), || {
            format!("case {case}: c@1 differs from accuracy")
        })?;
        ensure(c_at_1_counts(t.len(), correct, 0) == accuracy(&t), || {
            format!("case {case}: c@1 counts")
        })?;

        let (f1, f05) = f1_and_f05u(&t);
        let (tp, fp, fn_) = (o.tp as f64, o.fp as f64, o.fn_ as f64);
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1_ref = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let f05_ref = if precision + recall > 0.0 {
            1.25 * precision * recall / (0.25 * precision + recall)
        } else {
            0.0
        };
        ensure(close(f1, f1_ref), || {
            format!("case {case}: f1 {f1} vs {f1_ref}")
        })?;
        ensure(close(f05, f05_ref), || {
            format!("case {case}: f05u {f05} vs {f05_ref}")
        })?;

        let brier_ref = 1.0
            - t.iter()
                .map(|r| (r.s - r.a_true as u8 as f64).powi(2))
                .sum::<f64>()
                / n;
        ensure(close(brier_complement(&t), brier_ref), || {
            format!("case {case}: brier")
        })?;

        let n_bins = rng.gen_range(1..=12);
        let cal = calibration(&t, n_bins).map_err(|e| e.to_string())?;
        let (counts, ece, mce) = brute_calibration(&t, n_bins);
        ensure(
            cal.bins.iter().map(|b| b.count).collect::<Vec<_>>() == counts,
            || format!("case {case}: bin counts"),
        )?;
        ensure(close(cal.ece, ece), || {
            format!("case {case}: ece {} vs {ece}", cal.ece)
        })?;
        ensure(close(cal.mce, mce), || {
            format!("case {case}: mce {} vs {mce}", cal.mce)
        })?;
    }
    Ok(())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}
