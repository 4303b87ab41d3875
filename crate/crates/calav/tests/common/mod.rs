#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use calav::formats::write_docs_jsonl;
use calav_core::synthetic::{style_corpus, StyleCorpusConfig};
use calav_core::Document;

pub fn calav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calav"))
        .args(args)
        .env_remove("CALAV_SEED")
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = calav(args);
    assert!(
        out.status.success(),
        "calav {args:?} failed with {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn code(args: &[&str]) -> i32 {
    calav(args).status.code().expect("exit code")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn small_style(n_authors: usize) -> Vec<Document> {
    style_corpus(
        &StyleCorpusConfig {
            n_authors,
            min_tokens: 30,
            max_tokens: 40,
            ..Default::default()
        },
        3,
    )
}

/// Authors confined to one of four fandoms, so a fandom split is possible.
pub fn homed_corpus(n_authors: usize) -> Vec<Document> {
    small_style(n_authors)
        .into_iter()
        .map(|mut d| {
            let a: usize = d
                .author_id
                .trim_start_matches(|c: char| !c.is_ascii_digit())
                .parse()
                .unwrap();
            d.fandom_id = format!("f{}", a % 4);
            d
        })
        .collect()
}

pub fn write_corpus(dir: &Path, docs: &[Document]) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    write_docs_jsonl(&path, docs).unwrap();
    path
}

/// Author-split data with a balanced cross-topic pair file.
pub fn prepared(dir: &Path, n_authors: usize) -> (PathBuf, PathBuf) {
    let corpus = write_corpus(dir, &small_style(n_authors));
    let data = dir.join("data");
    ok(&[
        "prep",
        "--corpus",
        s(&corpus),
        "--out",
        s(&data),
        "--split",
        "author",
        "--v-tok",
        "300",
        "--v-chr",
        "60",
    ]);
    let pairs = dir.join("pairs.jsonl");
    ok(&[
        "sample",
        "--data",
        s(&data),
        "--out",
        s(&pairs),
        "--balanced",
    ]);
    (data, pairs)
}
