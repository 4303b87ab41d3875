mod common;

use std::fs;
use std::process::Command;

use calav::checkpoint::Checkpoint;
use calav::cli::{Manifest, MultiReport};
use calav::config::RunConfig;
use calav::formats::{read_pairs, read_vocabulary};
use calav::report::{read_telemetry, EvalReport};
use calav_core::bfs::Activation;
use calav_core::trainer::Stage;
use calav_core::SubsetTag;
use common::{calav, code, ok, prepared, s, write_corpus};
use tempfile::tempdir;

#[test]
fn prep_reports_disjoint_fandom_split() {
    let dir = tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &common::homed_corpus(24));
    let data = dir.path().join("data");
    let out = ok(&[
        "prep",
        "--corpus",
        s(&corpus),
        "--out",
        s(&data),
        "--test-fraction",
        "0.25",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("shared authors: 0, shared fandoms: 0"),
        "{stdout}"
    );
    let m: Manifest =
        serde_json::from_slice(&fs::read(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!((m.shared_authors, m.shared_fandoms), (0, 0));
    assert_eq!(m.test.fandoms, 1);
    assert_eq!(m.train.fandoms, 3);
    assert_eq!(m.train.docs + m.test.docs, 96);
}

#[test]
fn prep_is_byte_identical_on_rerun_and_honors_vocabulary_size() {
    let dir = tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &common::small_style(12));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&[
            "prep",
            "--corpus",
            s(&corpus),
            "--out",
            s(out),
            "--split",
            "author",
            "--v-tok",
            "25",
            "--v-chr",
            "8",
        ]);
    }
    for f in ["vocab.json", "encoded.jsonl", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let vocab = read_vocabulary(&a.join("vocab.json")).unwrap();
    assert_eq!(vocab.token_count(), 25 + 2);
    assert_eq!(vocab.char_count(), 8 + 2);
    assert_eq!(RunConfig::default().prep.v_tok, 5000);
}

#[test]
fn seed_comes_from_flag_or_environment() {
    let dir = tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &common::small_style(12));
    let run = |out: &str, seed_env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_calav"));
        cmd.args(["prep", "--corpus", s(&corpus), "--split", "author", "--out"]);
        cmd.arg(dir.path().join(out));
        cmd.env_remove("CALAV_SEED");
        if let Some(v) = seed_env {
            cmd.env("CALAV_SEED", v);
        }
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read(dir.path().join(out).join("manifest.json")).unwrap()
    };
    let env = run("env", Some("7"), None);
    let flag = run("flag", None, Some("7"));
    let both = run("both", Some("8"), Some("7"));
    assert_eq!(env, flag);
    assert_eq!(env, both);
    let m: Manifest = serde_json::from_slice(&env).unwrap();
    assert_eq!(m.seed, 7);
    assert_ne!(run("other", Some("8"), None), env);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        code(&["prep", "--corpus", "/nonexistent.jsonl", "--out", s(&out)]),
        2
    );
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{not json}\n").unwrap();
    assert_eq!(code(&["prep", "--corpus", s(&bad), "--out", s(&out)]), 2);
    assert_eq!(code(&["train"]), 2);
    assert_eq!(
        code(&[
            "eval",
            "--data",
            s(&out),
            "--pairs",
            "/none",
            "--checkpoint",
            "/none",
            "--out",
            s(&out)
        ]),
        2
    );

    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"train": {"epochz": 3}}"#).unwrap();
    let corpus = write_corpus(dir.path(), &common::small_style(6));
    let args = [
        "--config",
        s(&cfg),
        "prep",
        "--corpus",
        s(&corpus),
        "--out",
        s(&out),
    ];
    let res = calav(&args);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("epochz"));
}

#[test]
fn train_flags_reach_the_model_configuration() {
    let dir = tempdir().unwrap();
    let (data, _) = prepared(dir.path(), 8);
    let run = dir.path().join("run");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--run",
        s(&run),
        "--epochs",
        "1",
        "--beta",
        "0.125",
        "--activation",
        "tanh",
    ]);
    let ckpt = Checkpoint::load(&run.join("checkpoint.calav")).unwrap();
    assert_eq!(ckpt.config.model.ual.beta, 0.125);
    assert_eq!(ckpt.config.model.bfs.activation, Activation::Tanh);
    assert_eq!(ckpt.state.epochs_done, 1);
    let saved: RunConfig =
        serde_json::from_slice(&fs::read(run.join("config.json")).unwrap()).unwrap();
    assert_eq!(saved.train, ckpt.config);
    let header = fs::read_to_string(run.join("telemetry.csv")).unwrap();
    assert!(
        header.starts_with("epoch,loss_dml,loss_bfs,loss_ual,h_within,h_between\n"),
        "{header}"
    );
}

#[test]
fn interrupted_run_resumes_to_the_same_result() {
    let dir = tempdir().unwrap();
    let (data, _) = prepared(dir.path(), 8);
    let (full, part) = (dir.path().join("full"), dir.path().join("part"));
    ok(&[
        "train",
        "--data",
        s(&data),
        "--run",
        s(&full),
        "--epochs",
        "3",
        "--every-epoch",
    ]);
    ok(&[
        "train",
        "--data",
        s(&data),
        "--run",
        s(&part),
        "--epochs",
        "1",
        "--every-epoch",
    ]);
    ok(&[
        "train",
        "--data",
        s(&data),
        "--run",
        s(&part),
        "--epochs",
        "3",
        "--every-epoch",
        "--resume",
    ]);
    for f in [
        "checkpoint.calav",
        "epoch-0002.calav",
        "epoch-0003.calav",
        "telemetry.csv",
    ] {
        assert_eq!(
            fs::read(full.join(f)).unwrap(),
            fs::read(part.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        read_telemetry(&part.join("telemetry.csv")).unwrap().len(),
        3
    );

    // a different batch size is a different run
    let res = calav(&[
        "train",
        "--data",
        s(&data),
        "--run",
        s(&part),
        "--epochs",
        "4",
        "--batch-size",
        "5",
        "--resume",
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn numerical_blow_up_exits_with_four() {
    let dir = tempdir().unwrap();
    let (data, _) = prepared(dir.path(), 6);
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"train": {"lr_encoder": 1e200, "lr_bfs": 1e200, "lr_ual": 1e200}}"#,
    )
    .unwrap();
    let run = dir.path().join("run");
    let res = calav(&[
        "--config",
        s(&cfg),
        "train",
        "--data",
        s(&data),
        "--run",
        s(&run),
        "--epochs",
        "3",
    ]);
    assert_eq!(
        res.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
}

#[test]
fn eval_writes_stage_reports_and_tables() {
    let dir = tempdir().unwrap();
    let (data, pairs) = prepared(dir.path(), 10);
    let run = dir.path().join("run");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--run",
        s(&run),
        "--epochs",
        "2",
    ]);
    let ckpt = run.join("checkpoint.calav");
    let out = dir.path().join("eval");
    ok(&[
        "eval",
        "--data",
        s(&data),
        "--pairs",
        s(&pairs),
        "--checkpoint",
        s(&ckpt),
        "--stages",
        "dml,bfs,ual",
        "--out",
        s(&out),
    ]);
    let report: EvalReport =
        serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(
        report.stages.keys().copied().collect::<Vec<_>>(),
        Stage::ALL
    );
    let n_pairs = read_pairs(&pairs).unwrap().len();
    assert_eq!(report.n_pairs, n_pairs);
    let rel = fs::read_to_string(out.join("reliability_ual.csv")).unwrap();
    assert!(rel.starts_with("bin_center,confidence,accuracy,count\n"));
    assert_eq!(rel.lines().count(), 11);
    for tag in ["all", "SA_SF", "SA_DF", "DA_SF", "DA_DF"] {
        assert!(out.join(format!("histogram_bfs_{tag}.csv")).is_file());
    }
    assert_eq!(
        fs::read_to_string(out.join("scores.csv"))
            .unwrap()
            .lines()
            .count(),
        n_pairs + 1
    );

    let again = dir.path().join("again");
    ok(&[
        "eval",
        "--data",
        s(&data),
        "--pairs",
        s(&pairs),
        "--checkpoint",
        s(&ckpt),
        "--out",
        s(&again),
    ]);
    assert_eq!(
        fs::read(out.join("metrics.json")).unwrap(),
        fs::read(again.join("metrics.json")).unwrap()
    );

    let sub = dir.path().join("sub");
    ok(&[
        "eval",
        "--data",
        s(&data),
        "--pairs",
        s(&pairs),
        "--checkpoint",
        s(&ckpt),
        "--subset",
        "SA_DF",
        "--stages",
        "ual",
        "--out",
        s(&sub),
    ]);
    let r: EvalReport =
        serde_json::from_slice(&fs::read(sub.join("metrics.json")).unwrap()).unwrap();
    let sa_df = read_pairs(&pairs)
        .unwrap()
        .iter()
        .filter(|p| p.subset() == SubsetTag::SaDf)
        .count();
    assert_eq!(r.subset, Some(SubsetTag::SaDf));
    assert_eq!(r.n_pairs, sa_df);
    assert_eq!(r.stages.len(), 1);
}

#[test]
fn eval_refuses_a_checkpoint_from_other_data() {
    let dir = tempdir().unwrap();
    let (data, pairs) = prepared(dir.path(), 8);
    let run = dir.path().join("run");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--run",
        s(&run),
        "--epochs",
        "1",
    ]);
    let corpus = dir.path().join("corpus.jsonl");
    let other = dir.path().join("other");
    ok(&[
        "prep",
        "--corpus",
        s(&corpus),
        "--out",
        s(&other),
        "--split",
        "author",
        "--v-tok",
        "100",
        "--v-chr",
        "60",
    ]);
    let res = calav(&[
        "eval",
        "--data",
        s(&other),
        "--pairs",
        s(&pairs),
        "--checkpoint",
        s(&run.join("checkpoint.calav")),
        "--out",
        s(&dir.path().join("e")),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("vocabulary"));

    let unknown = dir.path().join("unknown.jsonl");
    fs::write(
        &unknown,
        "{\"doc_id_1\":\"nope\",\"doc_id_2\":\"nada\",\"a\":0,\"f\":0}\n",
    )
    .unwrap();
    let res = calav(&[
        "eval",
        "--data",
        s(&data),
        "--pairs",
        s(&unknown),
        "--checkpoint",
        s(&run.join("checkpoint.calav")),
        "--out",
        s(&dir.path().join("e")),
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn averaging_over_runs_reports_mean_and_spread() {
    let dir = tempdir().unwrap();
    let (data, pairs) = prepared(dir.path(), 8);
    let mut args: Vec<String> = [
        "eval",
        "--data",
        s(&data),
        "--pairs",
        s(&pairs),
        "--epoch-range",
        "2-3",
    ]
    .map(String::from)
    .to_vec();
    for k in 0..4 {
        let run = dir.path().join(format!("run{k}"));
        let seed = k.to_string();
        ok(&[
            "--seed",
            &seed,
            "train",
            "--data",
            s(&data),
            "--run",
            s(&run),
            "--epochs",
            "3",
            "--every-epoch",
        ]);
        args.extend(["--average".into(), s(&run).into()]);
    }
    let out = dir.path().join("avg");
    args.extend(["--out".into(), s(&out).into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&refs);
    let m: MultiReport =
        serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m.average.n_checkpoints, 8);
    assert_eq!(m.runs.len(), 8);
    let c = m.average.stages[&Stage::Ual]["c_at_1"];
    let xs: Vec<f64> = m
        .runs
        .iter()
        .map(|r| r.stages[&Stage::Ual].c_at_1)
        .collect();
    let mean = xs.iter().sum::<f64>() / 8.0;
    assert!((c.mean - mean).abs() < 1e-12);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("stage,metric,mean,std\n"));
    assert!(summary.lines().any(|l| l.starts_with("ual,ece,")));

    let none = calav(&[
        "eval",
        "--data",
        s(&data),
        "--pairs",
        s(&pairs),
        "--average",
        s(&dir.path().join("run0")),
        "--epoch-range",
        "10-12",
        "--out",
        s(&out),
    ]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn sample_writes_requested_subsets_and_pair_counts() {
    let dir = tempdir().unwrap();
    let (data, _) = prepared(dir.path(), 12);
    let p = dir.path().join("p.jsonl");
    let hist = dir.path().join("zipf.csv");
    ok(&[
        "sample",
        "--data",
        s(&data),
        "--out",
        s(&p),
        "--side",
        "train",
        "--keep",
        "SA_SF,DA_DF",
        "--epochs",
        "3",
        "--histogram",
        s(&hist),
    ]);
    let pairs = read_pairs(&p).unwrap();
    assert!(!pairs.is_empty());
    assert!(pairs
        .iter()
        .all(|x| matches!(x.subset(), SubsetTag::SaSf | SubsetTag::DaDf)));
    let table = fs::read_to_string(&hist).unwrap();
    let counts: Vec<usize> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    assert!(counts.iter().all(|&c| (1..=3).contains(&c)));
}
