//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any of them fails.

#[allow(dead_code)]
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use calav::checkpoint::Checkpoint;
use calav::report::evaluate_report;
use calav_core::bfs::Activation;
use calav_core::data::{
    build_vocabulary, encode_document, split_by_author, unit_count, WindowConfig,
};
use calav_core::dml::DmlLoss;
use calav_core::metrics::metrics_report;
use calav_core::sampler::{balanced_cross_topic_pairs, resample_epoch_indexed, SamplerConfig};
use calav_core::synthetic::{sampler_corpus, style_corpus, SamplerCorpusConfig, StyleCorpusConfig};
use calav_core::trainer::{evaluate_pairs, stage_trials, train, Stage, TrainConfig, TrainState};

type Outcome = Result<String, String>;

fn closed_form() -> Outcome {
    let worst = support::quadrature::check_closed_form(7, 60)?;
    Ok(format!("120 instances, worst deviation {worst:.1e}"))
}

fn gradients() -> Outcome {
    let mut tensors = 0;
    for seed in 1..=5 {
        tensors +=
            support::gradcheck::check_all_groups(seed, Activation::Swish, DmlLoss::Probabilistic)?;
        tensors +=
            support::gradcheck::check_all_groups(seed + 10, Activation::Tanh, DmlLoss::Legacy)?;
    }
    Ok(format!("10 seeds, {tensors} tensors checked"))
}

fn metric_oracles() -> Outcome {
    support::metric_oracle::check_metrics(2021, 200)?;
    Ok("200 instances".into())
}

fn sampler_statistics() -> Outcome {
    let docs = sampler_corpus(&SamplerCorpusConfig::default(), 0);
    let (mut da, mut total) = (0usize, 0usize);
    for epoch in 0..20 {
        let cfg = SamplerConfig {
            seed: epoch,
            ..Default::default()
        };
        let ep = resample_epoch_indexed(&docs, &cfg);
        let mut seen = BTreeSet::new();
        for p in &ep.pairs {
            if !seen.insert(p.first) || !seen.insert(p.second) {
                return Err(format!("epoch {epoch}: a document appears twice"));
            }
        }
        da += ep.pairs.iter().filter(|p| !p.subset.same_author()).count();
        total += ep.pairs.len();
    }
    let frac = da as f64 / total as f64;
    let msg = format!("DA fraction {frac:.4} over {total} pairs");
    if (0.65..=0.75).contains(&frac) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn window_formula() -> Outcome {
    let settings = [(30, 26), (30, 30), (30, 1), (10, 3), (7, 7), (50, 25)];
    let mut checked = 0;
    for (t_w, hop) in settings {
        for n in 1..=500usize {
            let expected = if n < t_w {
                1
            } else {
                ((n - t_w + hop) as f64 / hop as f64).ceil() as usize
            };
            for cap in [1, 5, 210, usize::MAX] {
                let got = unit_count(n, t_w, hop, cap);
                if got != expected.min(cap) {
                    return Err(format!(
                        "N={n} T_w={t_w} h={hop} cap={cap}: {got} vs {}",
                        expected.min(cap)
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cases"))
}

struct Benchmark {
    /// UAL c@1 on the held-out pairs after each epoch.
    c_at_1: Vec<f64>,
    ece_dml: f64,
    ece_ual: f64,
    conf_ual: f64,
    entropies: [(f64, f64); 2],
    checkpoint: Vec<u8>,
    metrics: Vec<u8>,
}

fn benchmark(seed: u64, beta: f64) -> Benchmark {
    let docs = style_corpus(&StyleCorpusConfig::default(), seed);
    let split = split_by_author(&docs, 0.2, seed).unwrap();
    let vocab = build_vocabulary(&split.train, 5000, 300);
    let w = WindowConfig::default();
    let train_enc: Vec<_> = split
        .train
        .iter()
        .map(|d| encode_document(d, &vocab, &w))
        .collect();
    let test_enc: Vec<_> = split
        .test
        .iter()
        .map(|d| encode_document(d, &vocab, &w))
        .collect();
    let pairs = balanced_cross_topic_pairs(&split.test, seed);

    let mut cfg = TrainConfig {
        epochs: 30,
        seed,
        ..Default::default()
    };
    cfg.model.ual.beta = beta;
    let mut state = TrainState::init(&cfg, vocab.token_count(), vocab.char_count());
    let initial = state.model.entropies();
    let mut c_at_1 = Vec::new();
    train(&mut state, &split.train, &train_enc, &cfg, |s, _| {
        let scores = evaluate_pairs(&s.model, &split.test, &test_enc, &pairs).unwrap();
        c_at_1.push(
            metrics_report(&stage_trials(&scores, Stage::Ual), 10)
                .unwrap()
                .c_at_1,
        );
    })
    .unwrap();
    let fin = state.model.entropies();

    let scores = evaluate_pairs(&state.model, &split.test, &test_enc, &pairs).unwrap();
    let stage = |s| metrics_report(&stage_trials(&scores, s), 10).unwrap();
    let (dml, ual) = (stage(Stage::Dml), stage(Stage::Ual));
    let report = evaluate_report(
        &scores,
        &Stage::ALL,
        None,
        10,
        "synthetic",
        state.epochs_done,
    )
    .unwrap();
    let checkpoint = Checkpoint {
        vocab_sha256: "synthetic".into(),
        config: cfg,
        state,
    }
    .to_bytes();
    Benchmark {
        c_at_1,
        ece_dml: dml.ece,
        ece_ual: ual.ece,
        conf_ual: ual.conf_mean,
        entropies: [initial, fin],
        checkpoint,
        metrics: serde_json::to_vec_pretty(&report).unwrap(),
    }
}

fn end_to_end(b: &Benchmark) -> Outcome {
    let reached = b.c_at_1.iter().position(|&c| c >= 0.90);
    let best = b.c_at_1.iter().copied().fold(0.0, f64::max);
    let last = b.c_at_1.last().copied().unwrap_or(0.0);
    let when = reached.map_or("never".to_string(), |e| format!("at epoch {}", e + 1));
    let msg = format!(
        "UAL c@1 reaches 0.90 {when} (best {best:.4}, final {last:.4}), final ECE DML {:.4} UAL {:.4}",
        b.ece_dml, b.ece_ual
    );
    if reached.is_some() && b.ece_ual < b.ece_dml {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn beta_trend(reference: &Benchmark) -> Outcome {
    let betas = [0.0, 0.05, 0.1, 0.2];
    let mut means = Vec::new();
    for beta in betas {
        let confs: Vec<f64> = (1..=3)
            .map(|seed| {
                if seed == 1 && beta == 0.1 {
                    reference.conf_ual
                } else {
                    benchmark(seed, beta).conf_ual
                }
            })
            .collect();
        means.push(confs.iter().sum::<f64>() / 3.0);
    }
    let msg = betas
        .iter()
        .zip(&means)
        .map(|(b, m)| format!("beta {b}: {m:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    if means.windows(2).all(|w| w[1] <= w[0]) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn entropy_trend(b: &Benchmark) -> Outcome {
    let [(w0, b0), (w1, b1)] = b.entropies;
    let msg = format!("H_within {w0:.3} -> {w1:.3}, H_between {b0:.3} -> {b1:.3}");
    if w1 < w0 && b1 > b0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism(a: &Benchmark, b: &Benchmark) -> Outcome {
    if a.checkpoint != b.checkpoint {
        return Err("checkpoints differ".into());
    }
    if a.metrics != b.metrics {
        return Err("metrics differ".into());
    }
    Ok(format!("{} checkpoint bytes identical", a.checkpoint.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report =
        |n: usize, name: &str, budget: Option<Duration>, run: &mut dyn FnMut() -> Outcome| {
            let start = Instant::now();
            let mut outcome = run();
            let took = start.elapsed();
            if let (Some(limit), Ok(msg)) = (budget, &outcome) {
                if took > limit {
                    outcome = Err(format!("{msg}; over the {}s budget", limit.as_secs()));
                }
            }
            let (tag, msg) = match outcome {
                Ok(m) => ("PASS", m),
                Err(m) => {
                    failed += 1;
                    ("FAIL", m)
                }
            };
            println!("{tag} {n} {name} ({:.1}s): {msg}", took.as_secs_f64());
        };
    let secs = |s| Some(Duration::from_secs(s));

    report(1, "closed-form likelihoods", secs(30), &mut closed_form);
    report(2, "gradient checks", secs(60), &mut gradients);
    report(3, "metric oracles", secs(10), &mut metric_oracles);
    report(4, "sampler statistics", secs(20), &mut sampler_statistics);
    report(5, "sliding-window count", secs(1), &mut window_formula);

    let start = Instant::now();
    let first = benchmark(1, 0.1);
    let bench_time = start.elapsed();
    report(6, "end-to-end benchmark", None, &mut || {
        let msg = end_to_end(&first)?;
        let msg = format!("{msg}; training {:.1}s", bench_time.as_secs_f64());
        if bench_time > Duration::from_secs(600) {
            return Err(format!("{msg}; over the 600s budget"));
        }
        Ok(msg)
    });
    report(7, "beta trend", secs(2400), &mut || beta_trend(&first));
    report(8, "entropy trend", None, &mut || entropy_trend(&first));
    report(9, "determinism", None, &mut || {
        determinism(&first, &benchmark(1, 0.1))
    });

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
