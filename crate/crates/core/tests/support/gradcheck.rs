//! Central finite-difference checks of every trainable group.

#![allow(dead_code)]

use calav_core::bfs::{Activation, BfsConfig};
use calav_core::data::{build_vocabulary, encode_document, EncodedDocument, WindowConfig, PAD_ID};
use calav_core::dml::{DmlConfig, DmlLoss};
use calav_core::encoder::EncoderConfig;
use calav_core::params::Parameters;
use calav_core::rng;
use calav_core::synthetic::{style_corpus, StyleCorpusConfig};
use calav_core::trainer::{batch_gradients, Model, ModelConfig};
use calav_core::ual::UalConfig;
use calav_core::Document;
use rand::Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

struct Fixture {
    docs: Vec<EncodedDocument>,
    labels: Vec<(usize, usize, bool)>,
    model: Model,
}

fn config(activation: Activation, loss: DmlLoss) -> ModelConfig {
    ModelConfig {
        encoder: EncoderConfig {
            word_dim: 4,
            char_dim: 3,
            char_repr_dim: 3,
            output_dim: 5,
        },
        dml: DmlConfig {
            lev_dim: 4,
            loss,
            ..Default::default()
        },
        bfs: BfsConfig {
            dim: 3,
            activation,
            prior: 0.5,
        },
        ual: UalConfig { dim: 3, beta: 0.15 },
    }
}

fn jitter(p: &mut dyn Parameters, r: &mut rng::Rng, scale: f64) {
    p.visit_mut(&mut |_, _, d| {
        for x in d.iter_mut() {
            *x += r.gen_range(-scale..scale);
        }
    });
}

fn fixture(seed: u64, activation: Activation, loss: DmlLoss) -> Fixture {
    let corpus: Vec<Document> = style_corpus(
        &StyleCorpusConfig {
            n_authors: 3,
            n_fandoms: 2,
            docs_per_fandom: 1,
            style_vocab: 12,
            topic_vocab: 6,
            min_tokens: 4,
            max_tokens: 14,
            topic_prob: 0.4,
            style_sigma: 1.0,
            ..Default::default()
        },
        seed,
    );
    let vocab = build_vocabulary(&corpus, 200, 40);
    let w = WindowConfig {
        tokens_per_unit: 8,
        hop: 6,
        max_units: 5,
        chars_per_token: 4,
    };
    let docs: Vec<EncodedDocument> = corpus
        .iter()
        .map(|d| encode_document(d, &vocab, &w))
        .collect();
    let labels = vec![
        (0, 2, false),
        (0, 1, true),
        (2, 3, true),
        (1, 4, false),
        (3, 5, false),
    ];
    let mut model = Model::init(
        &config(activation, loss),
        vocab.token_count(),
        vocab.char_count(),
        seed,
    );
    let mut r = rng::rng_from(seed ^ 0xfeed);
    jitter(&mut model.tables, &mut r, 1.5);
    model.tables.word.row_mut(PAD_ID as usize).fill(0.0);
    model.tables.chars.row_mut(PAD_ID as usize).fill(0.0);
    jitter(&mut model.encoder, &mut r, 1.0);
    jitter(&mut model.dml, &mut r, 2.0);
    jitter(&mut model.bfs, &mut r, 0.4);
    jitter(&mut model.ual, &mut r, 0.8);
    Fixture {
        docs,
        labels,
        model,
    }
}

fn losses(f: &Fixture, model: &Model) -> (f64, f64, f64) {
    let batch: Vec<_> = f
        .labels
        .iter()
        .map(|&(a, b, s)| (&f.docs[a], &f.docs[b], s))
        .collect();
    let l = batch_gradients(model, &batch).unwrap().losses;
    (l.dml, l.bfs, l.ual)
}

/// Relative error `‖a − n‖ / max(‖a‖, ‖n‖)` per tensor of one group.
fn check_group(
    f: &Fixture,
    name: &str,
    get: fn(&mut Model) -> &mut dyn Parameters,
    analytic: &dyn Parameters,
    pick: fn((f64, f64, f64)) -> f64,
    skip: &dyn Fn(&str, usize) -> bool,
) -> Result<usize, String> {
    let mut m = f.model.clone();
    let base = get(&mut m).flatten();
    let grads = analytic.flatten();
    let mut names = Vec::new();
    analytic.visit(&mut |n, _, d| names.push((n.to_string(), d.len())));
    let mut offset = 0;
    let mut checked = 0;
    for (tensor, len) in names {
        let mut num = vec![0.0; len];
        let mut ana = vec![0.0; len];
        for k in 0..len {
            if skip(&tensor, k) {
                continue;
            }
            let i = offset + k;
            let mut p = base.clone();
            p[i] = base[i] + H;
            get(&mut m).assign_flat(&p);
            let up = pick(losses(f, &m));
            p[i] = base[i] - H;
            get(&mut m).assign_flat(&p);
            let down = pick(losses(f, &m));
            num[k] = (up - down) / (2.0 * H);
            ana[k] = grads[i];
        }
        get(&mut m).assign_flat(&base);
        let diff: f64 = num
            .iter()
            .zip(&ana)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = num
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(ana.iter().map(|x| x * x).sum::<f64>().sqrt());
        if scale > 1e-9 {
            let rel = diff / scale;
            if rel >= TOL {
                return Err(format!(
                    "{name}.{tensor}: relative error {rel:e} (|num| = {scale:e})"
                ));
            }
            checked += 1;
        } else if diff >= 1e-9 {
            return Err(format!(
                "{name}.{tensor}: analytic {ana:?} vs numeric {num:?}"
            ));
        }
        offset += len;
    }
    Ok(checked)
}

/// Check every group on one random instance; returns the number of tensors
/// with a non-trivial gradient.
pub fn check_all_groups(seed: u64, activation: Activation, loss: DmlLoss) -> Result<usize, String> {
    let f = fixture(seed, activation, loss);
    let batch: Vec<_> = f
        .labels
        .iter()
        .map(|&(a, b, s)| (&f.docs[a], &f.docs[b], s))
        .collect();
    let g = batch_gradients(&f.model, &batch).unwrap();
    let pad_row = |tensor: &str, k: usize| {
        let width = if tensor == "word" {
            f.model.tables.word.cols()
        } else {
            f.model.tables.chars.cols()
        };
        (tensor == "word" || tensor == "char") && k / width == PAD_ID as usize
    };
    let never = |_: &str, _: usize| false;
    let mut checked = 0;
    checked += check_group(
        &f,
        "tables",
        |m| &mut m.tables,
        &g.tables,
        |l| l.0,
        &pad_row,
    )?;
    checked += check_group(
        &f,
        "encoder",
        |m| &mut m.encoder,
        &g.encoder,
        |l| l.0,
        &never,
    )?;
    checked += check_group(&f, "dml", |m| &mut m.dml, &g.dml, |l| l.0, &never)?;
    checked += check_group(&f, "bfs", |m| &mut m.bfs, &g.bfs, |l| l.1, &never)?;
    checked += check_group(&f, "ual", |m| &mut m.ual, &g.ual, |l| l.2, &never)?;
    if checked < 15 {
        return Err(format!("only {checked} tensors had non-trivial gradients"));
    }
    Ok(checked)
}
