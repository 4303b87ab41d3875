//! Core of the calibrated authorship-verification pipeline.
//!
//! A pair of documents is encoded into two linguistic embedding vectors
//! (LEVs) by a Siamese encoder trained with a probabilistic contrastive
//! loss ([`dml`]). The LEVs are scored under a two-covariance Gaussian model
//! ([`bfs`]), and the resulting posterior is passed through an
//! input-dependent 2×2 noise channel ([`ual`]) that produces the final,
//! calibrated posterior. Each component is optimized on its own loss with
//! its inputs detached ([`trainer`]).
//!
//! The crate is `no_std` (it needs `alloc`). File formats, IO and the
//! command-line driver live in the `calav` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod bfs;
pub mod data;
pub mod dml;
pub mod encoder;
pub mod linalg;
pub mod metrics;
pub mod num;
pub mod optim;
pub mod params;
pub mod rng;
pub mod sampler;
pub mod synthetic;
pub mod trainer;
pub mod ual;

pub use data::{CorpusSplit, Document, EncodedDocument, Vocabulary};
pub use sampler::{DocumentPair, SamplerConfig, SubsetTag};
pub use trainer::{Model, ModelConfig, TrainConfig};
