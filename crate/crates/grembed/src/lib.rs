//! Social recommendation from graph embeddings.
//!
//! The pipeline: build an implicit weighted friendship graph from review
//! overlap, embed it with node2vec, Laplacian eigenmaps, and Katz-proximity
//! factorization, recommend items by cluster-restricted neighbor voting,
//! fuse the three recommenders with a small neural network, and score
//! everything with MAE and Coverage.

pub mod cluster;
pub mod config;
pub mod embed;
pub mod error;
pub mod eval;
pub mod hybrid;
pub mod ingest;
pub mod numerics;
pub mod pipeline;
pub mod recommend;
pub mod socialgraph;
pub mod synth;
pub mod types;

pub use error::{Error, Result};

// Every code block in the guide compiles and runs under `cargo test`, so
// the book cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/social-graph.md")]
    mod social_graph {}
    #[doc = include_str!("../../../book/src/embeddings.md")]
    mod embeddings {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/recommend.md")]
    mod recommend {}
    #[doc = include_str!("../../../book/src/hybrid.md")]
    mod hybrid {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
}
