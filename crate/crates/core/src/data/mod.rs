//! Corpus handling: documents, disjoint splits, tokenization, sliding-window
//! segmentation, vocabulary pruning and numeric encoding.

mod document;
mod encode;
mod tokenize;
mod vocab;
mod window;

pub use document::{
    dedup_documents, split_by_author, split_disjoint, CorpusSplit, DataError, Document, SplitStats,
};
pub use encode::{encode_document, EncodedDocument, WindowConfig};
pub use tokenize::tokenize;
pub use vocab::{
    build_vocabulary, Vocabulary, VocabularyError, PAD_ID, PAD_SYMBOL, UNK_ID, UNK_SYMBOL,
};
pub use window::{sliding_window, unit_count};
