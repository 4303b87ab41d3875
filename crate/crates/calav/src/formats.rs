//! Corpus, vocabulary, pair and embedding file formats.
//!
//! * `docs-jsonl`: `{"doc_id", "author_id", "fandom_id", "text"}` per line.
//! * `pan-jsonl`: `{"id", "fandoms": [f, f], "pair": [text, text]}` per line,
//!   with a truth file of `{"id", "same", "authors": [a, a]}`.
//! * vocabulary: `{"tokens": [...], "chars": [...]}` in id order.
//! * fixed pairs: `{"doc_id_1", "doc_id_2", "a": 0|1, "f": 0|1}` per line.
//! * embeddings: `token v_1 ... v_D` per line, optionally preceded by a
//!   `count dim` header.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use calav_core::data::{dedup_documents, EncodedDocument, PAD_ID};
use calav_core::linalg::Matrix;
use calav_core::{Document, DocumentPair, Vocabulary};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    DocsJsonl,
    PanJsonl,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "docs-jsonl" => Ok(Self::DocsJsonl),
            "pan-jsonl" => Ok(Self::PanJsonl),
            _ => Err(format!(
                "unknown corpus format `{s}` (expected docs-jsonl or pan-jsonl)"
            )),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DocsJsonl => "docs-jsonl",
            Self::PanJsonl => "pan-jsonl",
        })
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(Error::io(path))
}

/// Non-blank lines of a JSONL file, each with its 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(Error::io(path))?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| Error::Input(e.to_string()))?;
        w.write_all(b"\n").map_err(Error::io(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(Error::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.line(), e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocRecord {
    doc_id: String,
    author_id: String,
    fandom_id: String,
    text: String,
}

#[derive(Debug, Deserialize)]
struct PanRecord {
    id: String,
    fandoms: [String; 2],
    pair: [String; 2],
}

#[derive(Debug, Deserialize)]
struct PanTruth {
    id: String,
    same: bool,
    authors: [String; 2],
}

/// Load a corpus, dropping exact-duplicate texts. `truth` is required for
/// `pan-jsonl`.
pub fn ingest_corpus(
    path: &Path,
    format: CorpusFormat,
    truth: Option<&Path>,
) -> Result<Vec<Document>> {
    let docs = match format {
        CorpusFormat::DocsJsonl => read_jsonl::<DocRecord>(path)?
            .into_iter()
            .map(|(_, r)| Document::new(r.doc_id, r.author_id, r.fandom_id, r.text))
            .collect(),
        CorpusFormat::PanJsonl => {
            let truth = truth.ok_or_else(|| Error::Input("pan-jsonl needs a truth file".into()))?;
            read_pan(path, truth)?
        }
    };
    if docs.is_empty() {
        return Err(Error::Input(format!("{}: no documents", path.display())));
    }
    dedup_documents(docs).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read_pan(path: &Path, truth_path: &Path) -> Result<Vec<Document>> {
    let mut truth = BTreeMap::new();
    for (line, t) in read_jsonl::<PanTruth>(truth_path)? {
        if t.same != (t.authors[0] == t.authors[1]) {
            return Err(Error::parse(
                truth_path,
                line,
                format!("`same` disagrees with `authors` for {}", t.id),
            ));
        }
        if truth.insert(t.id.clone(), t).is_some() {
            return Err(Error::parse(truth_path, line, "duplicate id"));
        }
    }
    let mut docs = Vec::new();
    for (line, r) in read_jsonl::<PanRecord>(path)? {
        let t = truth
            .get(&r.id)
            .ok_or_else(|| Error::parse(path, line, format!("no truth entry for {}", r.id)))?;
        for k in 0..2 {
            docs.push(Document::new(
                format!("{}:{k}", r.id),
                t.authors[k].clone(),
                r.fandoms[k].clone(),
                r.pair[k].clone(),
            ));
        }
    }
    Ok(docs)
}

pub fn write_docs_jsonl(path: &Path, docs: &[Document]) -> Result<()> {
    write_jsonl(
        path,
        docs.iter().map(|d| DocRecord {
            doc_id: d.doc_id.clone(),
            author_id: d.author_id.clone(),
            fandom_id: d.fandom_id.clone(),
            text: d.text.clone(),
        }),
    )
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    tokens: Vec<String>,
    chars: Vec<String>,
}

fn vocab_file(vocab: &Vocabulary) -> VocabFile {
    VocabFile {
        tokens: vocab.token_list().to_vec(),
        chars: vocab.char_list(),
    }
}

/// SHA-256 of the compact JSON form, hex encoded.
pub fn vocabulary_hash(vocab: &Vocabulary) -> String {
    let bytes = serde_json::to_vec(&vocab_file(vocab)).expect("string lists serialize");
    hex::encode(Sha256::digest(&bytes))
}

pub fn write_vocabulary(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_json(path, &vocab_file(vocab))
}

pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    let f: VocabFile = read_json(path)?;
    Vocabulary::from_serialized(f.tokens, f.chars).map_err(|e| Error::parse(path, 1, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    doc_id_1: String,
    doc_id_2: String,
    a: u8,
    f: u8,
}

pub fn write_pairs(path: &Path, pairs: &[DocumentPair]) -> Result<()> {
    write_jsonl(
        path,
        pairs.iter().map(|p| PairRecord {
            doc_id_1: p.doc_1.clone(),
            doc_id_2: p.doc_2.clone(),
            a: p.a(),
            f: p.f(),
        }),
    )
}

pub fn read_pairs(path: &Path) -> Result<Vec<DocumentPair>> {
    read_jsonl::<PairRecord>(path)?
        .into_iter()
        .map(|(line, r)| {
            if r.a > 1 || r.f > 1 {
                return Err(Error::parse(path, line, "`a` and `f` must be 0 or 1"));
            }
            Ok(DocumentPair {
                doc_1: r.doc_id_1,
                doc_2: r.doc_id_2,
                same_author: r.a == 1,
                same_fandom: r.f == 1,
            })
        })
        .collect()
}

/// Which side of the split a prepared document belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    Test,
}

/// One line of the encoded-corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodedRecord {
    pub doc_id: String,
    pub author_id: String,
    pub fandom_id: String,
    pub side: Side,
    pub encoded: EncodedDocument,
}

impl EncodedRecord {
    /// The document without its text, which training does not need.
    pub fn document(&self) -> Document {
        Document::new(
            &self.doc_id,
            &self.author_id,
            &self.fandom_id,
            String::new(),
        )
    }
}

/// Copy vectors of known tokens into `word` (rows indexed by token id).
/// Reserved ids are never touched. Returns the number of rows replaced.
pub fn import_embeddings(path: &Path, vocab: &Vocabulary, word: &mut Matrix) -> Result<usize> {
    let dim = word.cols();
    let mut replaced = 0;
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if i == 0
            && values.len() == 1
            && token.parse::<usize>().is_ok()
            && values[0].parse::<usize>().is_ok()
        {
            continue;
        }
        if values.len() != dim {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        let id = vocab.token_id(token);
        if id < 2 || vocab.token(id) != Some(token) {
            continue;
        }
        let row = word.row_mut(id as usize);
        for (slot, v) in row.iter_mut().zip(&values) {
            *slot = v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(path, i + 1, format!("bad value `{v}`")))?;
        }
        replaced += 1;
    }
    debug_assert!(word.row(PAD_ID as usize).iter().all(|&x| x == 0.0));
    Ok(replaced)
}
