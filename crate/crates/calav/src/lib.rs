//! File formats, checkpoints and the `calav` command-line driver on top of
//! [`calav_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{Error, Result};
