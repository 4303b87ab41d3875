//! Command-line driver.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use calav_core::bfs::Activation;
use calav_core::data::{
    build_vocabulary, encode_document, split_by_author, split_disjoint, SplitStats,
};
use calav_core::rng;
use calav_core::sampler::{
    balanced_cross_topic_pairs, pair_count_histogram, resample_epoch, sample_fixed_test_pairs,
};
use calav_core::synthetic::{sampler_corpus, style_corpus, SamplerCorpusConfig, StyleCorpusConfig};
use calav_core::trainer::{self, evaluate_pairs, EvalError, Stage, TrainError, TrainState};
use calav_core::{Document, SamplerConfig, SubsetTag, Vocabulary};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::{RunConfig, SplitMode};
use crate::error::{Error, Result};
use crate::formats::{
    import_embeddings, ingest_corpus, read_json, read_jsonl, read_pairs, read_vocabulary,
    vocabulary_hash, write_docs_jsonl, write_json, write_jsonl, write_pairs, write_vocabulary,
    CorpusFormat, EncodedRecord, Side,
};
use crate::report::{
    append_telemetry, average_reports, evaluate_report, histogram_table, reliability_table,
    write_bin_rows, write_scores, write_summary, write_telemetry, AveragedReport, EvalReport,
};

pub const VOCAB_FILE: &str = "vocab.json";
pub const ENCODED_FILE: &str = "encoded.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.calav";
pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const RUN_CONFIG_FILE: &str = "config.json";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Parser)]
#[command(name = "calav", version, about = "Calibrated authorship verification")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for splitting, pair sampling and training.
    #[arg(long, global = true, env = "CALAV_SEED")]
    pub seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a corpus, build the vocabulary and encode every document.
    Prep(PrepArgs),
    /// Draw a fixed pair file from prepared data.
    Sample(SampleArgs),
    /// Train a model on the train side of prepared data.
    Train(TrainArgs),
    /// Score a fixed pair file and write metrics and plot tables.
    Eval(EvalArgs),
    /// Write a synthetic docs-jsonl corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    DocsJsonl,
    PanJsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Fandom,
    Author,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ActivationArg {
    Swish,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthKind {
    /// Authors with distinct token distributions over two fandoms.
    Style,
    /// Large corpus with a Zipf docs-per-author law, for sampler studies.
    Sampler,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Truth file for pan-jsonl.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub v_tok: Option<usize>,
    #[arg(long)]
    pub v_chr: Option<usize>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub side: SideArg,
    /// Subsets to keep, e.g. SA_DF,DA_SF.
    #[arg(long, value_delimiter = ',')]
    pub keep: Vec<SubsetTag>,
    #[arg(long)]
    pub balanced: bool,
    /// Also write pair counts over this many training epochs (Zipf data).
    #[arg(long, requires = "histogram")]
    pub epochs: Option<usize>,
    #[arg(long, requires = "epochs")]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub activation: Option<ActivationArg>,
    /// Pretrained word vectors (`token v_1 ... v_D` per line).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Save a checkpoint after every epoch, also as `epoch-NNNN.calav`.
    #[arg(long)]
    pub every_epoch: bool,
    /// Continue from the run directory's checkpoint.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    /// Checkpoint to score (repeatable; several are averaged).
    #[arg(long)]
    pub checkpoint: Vec<PathBuf>,
    /// Run directory whose per-epoch checkpoints in `--epoch-range` are
    /// averaged (repeatable).
    #[arg(long)]
    pub average: Vec<PathBuf>,
    /// Inclusive epoch range for `--average`, e.g. 29-33.
    #[arg(long, value_parser = parse_range, default_value = "29-33")]
    pub epoch_range: (usize, usize),
    #[arg(long, value_delimiter = ',')]
    pub stages: Vec<Stage>,
    #[arg(long)]
    pub subset: Option<SubsetTag>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "style")]
    pub kind: SynthKind,
    /// Number of authors (style) or documents (sampler).
    #[arg(long)]
    pub size: Option<usize>,
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or("expected FIRST-LAST")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == 0 || a > b {
        return Err("need 1 <= FIRST <= LAST".into());
    }
    Ok((a, b))
}

/// What `prep` records about its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: CorpusFormat,
    pub split: SplitMode,
    pub seed: u64,
    pub vocab_sha256: String,
    pub token_count: usize,
    pub char_count: usize,
    pub train: SplitStats,
    pub test: SplitStats,
    pub shared_authors: usize,
    pub shared_fandoms: usize,
    pub train_unk_rate: f64,
    pub test_unk_rate: f64,
}

impl Cli {
    /// Defaults, then the config file, then flags, then the seed.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        match &self.command {
            Command::Prep(a) => {
                if let Some(f) = a.format {
                    cfg.prep.format = match f {
                        FormatArg::DocsJsonl => CorpusFormat::DocsJsonl,
                        FormatArg::PanJsonl => CorpusFormat::PanJsonl,
                    };
                }
                if let Some(s) = a.split {
                    cfg.prep.split = match s {
                        SplitArg::Fandom => SplitMode::Fandom,
                        SplitArg::Author => SplitMode::Author,
                    };
                }
                cfg.prep.v_tok = a.v_tok.unwrap_or(cfg.prep.v_tok);
                cfg.prep.v_chr = a.v_chr.unwrap_or(cfg.prep.v_chr);
                cfg.prep.test_fraction = a.test_fraction.unwrap_or(cfg.prep.test_fraction);
            }
            Command::Sample(a) => {
                if !a.keep.is_empty() {
                    cfg.sample.keep = a.keep.clone();
                }
                cfg.sample.balanced |= a.balanced;
            }
            Command::Train(a) => {
                let t = &mut cfg.train;
                t.epochs = a.epochs.unwrap_or(t.epochs);
                t.batch_size = a.batch_size.unwrap_or(t.batch_size);
                t.model.ual.beta = a.beta.unwrap_or(t.model.ual.beta);
                if let Some(act) = a.activation {
                    t.model.bfs.activation = match act {
                        ActivationArg::Swish => Activation::Swish,
                        ActivationArg::Tanh => Activation::Tanh,
                    };
                }
            }
            Command::Eval(a) => {
                if !a.stages.is_empty() {
                    cfg.eval.stages = a.stages.clone();
                }
                cfg.eval.subset = a.subset.or(cfg.eval.subset);
                cfg.eval.n_bins = a.bins.unwrap_or(cfg.eval.n_bins);
            }
            Command::Synth(_) => {}
        }
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve()?;
    match &cli.command {
        Command::Prep(a) => cmd_prep(a, &cfg),
        Command::Sample(a) => cmd_sample(a, &cfg),
        Command::Train(a) => cmd_train(a, &cfg),
        Command::Eval(a) => cmd_eval(a, &cfg),
        Command::Synth(a) => cmd_synth(a, cli.seed.unwrap_or(0)),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(Error::io(path))
}

pub fn cmd_prep(a: &PrepArgs, cfg: &RunConfig) -> Result<()> {
    let p = &cfg.prep;
    let docs = ingest_corpus(&a.corpus, p.format, a.truth.as_deref())?;
    let split = match p.split {
        SplitMode::Fandom => split_disjoint(&docs, p.test_fraction, p.seed),
        SplitMode::Author => split_by_author(&docs, p.test_fraction, p.seed),
    }
    .map_err(|e| Error::Input(e.to_string()))?;
    let vocab = build_vocabulary(&split.train, p.v_tok, p.v_chr);
    let hash = vocabulary_hash(&vocab);
    let records = [(Side::Train, &split.train), (Side::Test, &split.test)]
        .into_iter()
        .flat_map(|(side, docs)| docs.iter().map(move |d| (side, d)))
        .map(|(side, d)| EncodedRecord {
            doc_id: d.doc_id.clone(),
            author_id: d.author_id.clone(),
            fandom_id: d.fandom_id.clone(),
            side,
            encoded: encode_document(d, &vocab, &p.window),
        });
    let manifest = Manifest {
        format: p.format,
        split: p.split,
        seed: p.seed,
        vocab_sha256: hash,
        token_count: vocab.token_count(),
        char_count: vocab.char_count(),
        train: split.train_stats(),
        test: split.test_stats(),
        shared_authors: split.shared_authors().len(),
        shared_fandoms: split.shared_fandoms().len(),
        train_unk_rate: vocab.unk_rate(&split.train),
        test_unk_rate: vocab.unk_rate(&split.test),
    };
    create_dir(&a.out)?;
    write_vocabulary(&a.out.join(VOCAB_FILE), &vocab)?;
    write_jsonl(&a.out.join(ENCODED_FILE), records)?;
    write_json(&a.out.join(MANIFEST_FILE), &manifest)?;
    let (tr, te) = (manifest.train, manifest.test);
    println!(
        "train: {} docs, {} authors, {} fandoms",
        tr.docs, tr.authors, tr.fandoms
    );
    println!(
        "test:  {} docs, {} authors, {} fandoms",
        te.docs, te.authors, te.fandoms
    );
    println!(
        "shared authors: {}, shared fandoms: {}, vocabulary: {} tokens, {} chars",
        manifest.shared_authors, manifest.shared_fandoms, manifest.token_count, manifest.char_count
    );
    Ok(())
}

/// Prepared data, checked against its manifest.
pub struct Prepared {
    pub manifest: Manifest,
    pub vocab: Vocabulary,
    pub records: Vec<EncodedRecord>,
}

impl Prepared {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
        let vocab = read_vocabulary(&dir.join(VOCAB_FILE))?;
        if vocabulary_hash(&vocab) != manifest.vocab_sha256 {
            return Err(Error::Consistency(format!(
                "{}: vocabulary does not match the manifest hash",
                dir.display()
            )));
        }
        let records = read_jsonl::<EncodedRecord>(&dir.join(ENCODED_FILE))?
            .into_iter()
            .map(|(_, r)| r)
            .collect();
        Ok(Self {
            manifest,
            vocab,
            records,
        })
    }

    pub fn side(&self, side: Side) -> (Vec<Document>, Vec<calav_core::EncodedDocument>) {
        self.records
            .iter()
            .filter(|r| r.side == side)
            .map(|r| (r.document(), r.encoded.clone()))
            .unzip()
    }

    pub fn all(&self) -> (Vec<Document>, Vec<calav_core::EncodedDocument>) {
        self.records
            .iter()
            .map(|r| (r.document(), r.encoded.clone()))
            .unzip()
    }
}

pub fn cmd_sample(a: &SampleArgs, cfg: &RunConfig) -> Result<()> {
    let data = Prepared::load(&a.data)?;
    let side = if a.side == SideArg::Test {
        Side::Test
    } else {
        Side::Train
    };
    let (docs, _) = data.side(side);
    let s = &cfg.sample;
    let pairs = if s.balanced {
        balanced_cross_topic_pairs(&docs, s.seed)
    } else {
        sample_fixed_test_pairs(&docs, s.seed, &s.keep)
    };
    if pairs.is_empty() {
        return Err(Error::Input("no pairs could be drawn".into()));
    }
    write_pairs(&a.out, &pairs)?;
    let counts: Vec<String> = SubsetTag::ALL
        .iter()
        .map(|&t| format!("{t} {}", pairs.iter().filter(|p| p.subset() == t).count()))
        .collect();
    println!("{} pairs ({})", pairs.len(), counts.join(", "));
    if let (Some(n), Some(path)) = (a.epochs, &a.histogram) {
        let (train, _) = data.side(Side::Train);
        let epochs: Vec<_> = (0..n)
            .map(|e| {
                let sc = SamplerConfig {
                    seed: rng::derive_seed(cfg.train.seed, rng::tag::EPOCH_PAIRS, e as u64),
                    ..cfg.train.sampler
                };
                resample_epoch(&train, &sc)
            })
            .collect();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Input(e.to_string()))?;
        w.write_record(["rank", "count", "subset", "doc_1", "doc_2"])
            .map_err(|e| Error::Input(e.to_string()))?;
        for (rank, c) in pair_count_histogram(&epochs).iter().enumerate() {
            w.write_record([
                &(rank + 1).to_string(),
                &c.count.to_string(),
                c.subset.as_str(),
                &c.doc_1,
                &c.doc_2,
            ])
            .map_err(|e| Error::Input(e.to_string()))?;
        }
        w.flush().map_err(Error::io(path))?;
    }
    Ok(())
}

fn train_error(e: TrainError) -> Error {
    match e {
        TrainError::NonFinite { .. } | TrainError::Bfs { .. } => Error::Numerical(e.to_string()),
        TrainError::Config(_) | TrainError::NoPairs => Error::Input(e.to_string()),
        TrainError::LengthMismatch { .. } | TrainError::Encoding { .. } => {
            Error::Consistency(e.to_string())
        }
    }
}

pub fn epoch_checkpoint_name(epoch: usize) -> String {
    format!("epoch-{epoch:04}.calav")
}

pub fn cmd_train(a: &TrainArgs, cfg: &RunConfig) -> Result<()> {
    let data = Prepared::load(&a.data)?;
    let (docs, encoded) = data.side(Side::Train);
    let hash = data.manifest.vocab_sha256.clone();
    let tc = cfg.train;
    create_dir(&a.run)?;
    let ckpt_path = a.run.join(CHECKPOINT_FILE);
    let telemetry_path = a.run.join(TELEMETRY_FILE);

    let mut state = if a.resume {
        let ckpt = Checkpoint::load(&ckpt_path)?;
        if ckpt.vocab_sha256 != hash {
            return Err(Error::Consistency(
                "checkpoint was trained with a different vocabulary".into(),
            ));
        }
        let same_setup = trainer::TrainConfig {
            epochs: tc.epochs,
            ..ckpt.config
        } == tc;
        if !same_setup {
            return Err(Error::Consistency(
                "checkpoint configuration differs from the requested one".into(),
            ));
        }
        log::info!("resuming after epoch {}", ckpt.state.epochs_done);
        ckpt.state
    } else {
        let mut st = TrainState::init(&tc, data.vocab.token_count(), data.vocab.char_count());
        if let Some(path) = &a.embeddings {
            let n = import_embeddings(path, &data.vocab, &mut st.model.tables.word)?;
            log::info!("imported {n} word vectors");
        }
        st
    };
    write_json(&a.run.join(RUN_CONFIG_FILE), cfg)?;
    write_telemetry(&telemetry_path, &state.telemetry)?;

    let mut io_result = Ok(());
    let outcome = trainer::train(&mut state, &docs, &encoded, &tc, |st, t| {
        if io_result.is_err() {
            return;
        }
        log::info!(
            "epoch {}: dml {:.4} bfs {:.4} ual {:.4} H_w {:.3} H_b {:.3}",
            t.epoch,
            t.loss_dml,
            t.loss_bfs,
            t.loss_ual,
            t.h_within,
            t.h_between
        );
        io_result = append_telemetry(&telemetry_path, t).and_then(|()| {
            if a.every_epoch {
                let ckpt = Checkpoint {
                    vocab_sha256: hash.clone(),
                    config: tc,
                    state: st.clone(),
                };
                ckpt.save(&a.run.join(epoch_checkpoint_name(t.epoch)))?;
                ckpt.save(&ckpt_path)?;
            }
            Ok(())
        });
    });
    io_result?;
    outcome.map_err(train_error)?;
    Checkpoint {
        vocab_sha256: hash,
        config: tc,
        state,
    }
    .save(&ckpt_path)?;
    Ok(())
}

fn eval_error(e: EvalError) -> Error {
    match e {
        EvalError::Bfs(_) => Error::Numerical(e.to_string()),
        _ => Error::Consistency(e.to_string()),
    }
}

/// Checkpoints named by `--checkpoint` plus those selected by `--average`.
fn checkpoint_paths(a: &EvalArgs) -> Result<Vec<PathBuf>> {
    let mut paths = a.checkpoint.clone();
    let (first, last) = a.epoch_range;
    for dir in &a.average {
        let found: Vec<PathBuf> = (first..=last)
            .map(|e| dir.join(epoch_checkpoint_name(e)))
            .filter(|p| p.is_file())
            .collect();
        if found.is_empty() {
            return Err(Error::Input(format!(
                "{}: no checkpoints for epochs {first}-{last}",
                dir.display()
            )));
        }
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(Error::Input("give --checkpoint or --average".into()));
    }
    let unique: BTreeSet<&PathBuf> = paths.iter().collect();
    if unique.len() != paths.len() {
        return Err(Error::Input("a checkpoint is listed twice".into()));
    }
    Ok(paths)
}

/// Metrics of several checkpoints with their mean and spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiReport {
    pub average: AveragedReport,
    pub runs: Vec<EvalReport>,
}

pub fn cmd_eval(a: &EvalArgs, cfg: &RunConfig) -> Result<()> {
    let data = Prepared::load(&a.data)?;
    let pairs = read_pairs(&a.pairs)?;
    if pairs.is_empty() {
        return Err(Error::Input(format!("{}: no pairs", a.pairs.display())));
    }
    let paths = checkpoint_paths(a)?;
    let (docs, encoded) = data.all();
    let e = &cfg.eval;
    create_dir(&a.out)?;
    let mut reports = Vec::new();
    for path in &paths {
        let ckpt = Checkpoint::load(path)?;
        if ckpt.vocab_sha256 != data.manifest.vocab_sha256 {
            return Err(Error::Consistency(format!(
                "{}: vocabulary hash {} does not match the data ({})",
                path.display(),
                ckpt.vocab_sha256,
                data.manifest.vocab_sha256
            )));
        }
        let scores =
            evaluate_pairs(&ckpt.state.model, &docs, &encoded, &pairs).map_err(eval_error)?;
        let report = evaluate_report(
            &scores,
            &e.stages,
            e.subset,
            e.n_bins,
            &ckpt.vocab_sha256,
            ckpt.state.epochs_done,
        )?;
        if paths.len() == 1 {
            write_scores(&a.out.join("scores.csv"), &scores)?;
            for &stage in &e.stages {
                let name = stage.as_str();
                write_bin_rows(
                    &a.out.join(format!("reliability_{name}.csv")),
                    &reliability_table(&scores, stage, e.subset, e.n_bins)?,
                )?;
                let subsets = std::iter::once(None).chain(SubsetTag::ALL.into_iter().map(Some));
                for subset in subsets {
                    let label = subset.map_or("all", |t| t.as_str());
                    write_bin_rows(
                        &a.out.join(format!("histogram_{name}_{label}.csv")),
                        &histogram_table(&scores, stage, subset, e.histogram_bins),
                    )?;
                }
            }
        }
        reports.push(report);
    }
    if let [report] = reports.as_slice() {
        write_json(&a.out.join(METRICS_FILE), report)?;
        for (stage, r) in &report.stages {
            println!(
                "{:>3}: c@1 {:.4} auc {} ece {:.4} conf {:.4} ({} pairs)",
                stage.as_str(),
                r.c_at_1,
                r.auc.map_or("-".into(), |v| format!("{v:.4}")),
                r.ece,
                r.conf_mean,
                r.n_trials
            );
        }
    } else {
        let average = average_reports(&reports)?;
        write_summary(&a.out.join("summary.csv"), &average)?;
        for (stage, m) in &average.stages {
            let c = m["c_at_1"];
            let ece = m["ece"];
            println!(
                "{:>3}: c@1 {:.4} ± {:.4}, ece {:.4} ± {:.4} over {} checkpoints",
                stage.as_str(),
                c.mean,
                c.std,
                ece.mean,
                ece.std,
                average.n_checkpoints
            );
        }
        write_json(
            &a.out.join(METRICS_FILE),
            &MultiReport {
                average,
                runs: reports,
            },
        )?;
    }
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let docs = match a.kind {
        SynthKind::Style => {
            let mut c = StyleCorpusConfig::default();
            c.n_authors = a.size.unwrap_or(c.n_authors);
            style_corpus(&c, seed)
        }
        SynthKind::Sampler => {
            let mut c = SamplerCorpusConfig::default();
            c.n_docs = a.size.unwrap_or(c.n_docs);
            sampler_corpus(&c, seed)
        }
    };
    write_docs_jsonl(&a.out, &docs)?;
    println!("{} documents", docs.len());
    Ok(())
}
