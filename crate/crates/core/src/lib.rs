//! Sequence tagging from a small clean corpus plus a large distantly
//! supervised corpus, with confusion-matrix noise layers that can depend
//! on word clusters.

pub mod benchmark;
pub mod clustering;
pub mod corpus;
pub mod distant;
pub mod embeddings;
mod error;
pub mod eval;
pub mod noise;
pub mod tagger;
pub mod variant;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    pub mod data {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    pub mod clustering {}
    #[doc = include_str!("../../../book/src/noise.md")]
    pub mod noise {}
    #[doc = include_str!("../../../book/src/training.md")]
    pub mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/benchmark.md")]
    pub mod benchmark {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
