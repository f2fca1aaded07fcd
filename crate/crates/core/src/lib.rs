//! Community detection by low-cardinality embeddings.
//!
//! The crate generalizes the greedy local-move step of Louvain/Leiden: every
//! node carries a nonnegative unit vector with at most `k` nonzeros over a
//! shared community space, and block coordinate ascent updates one vector at
//! a time in closed form. With `k = 1` the update is exactly the classic
//! local move. Embeddings are rounded back to a partition by rerunning the
//! ascent with `k = 1`, and the whole step is plugged into a Leiden-style
//! multi-level driver.
//!
//! Module map:
//! - [`graph`]: CSR graph storage, edge-list/partition I/O, modularity, aggregation.
//! - [`embedding`]: sparse unit vectors, the top-k⁺ operator, the `z` accumulator.
//! - [`locale`]: the block coordinate ascent, rounding, and ascent diagnostics.
//! - [`leiden`]: greedy baseline, refinement/aggregation, and the multi-level driver.
//! - [`oracle`]: exhaustive ground truth for small graphs.

pub mod embedding;
pub mod error;
pub mod graph;
pub mod leiden;
pub mod locale;
pub mod oracle;

mod queue;

pub use embedding::{basis, dot, topk_plus, Embedding, SparseVec};
pub use error::{Error, Result};
pub use graph::{Graph, Partition};
pub use leiden::{
    leiden_locale, Algorithm, InnerRounds, LevelRecord, LevelTrace, RunConfig, RunResult,
};
pub use locale::{embedding_objective, locale_embeddings, locale_rounding, LocaleOptions};
pub use oracle::brute_force_max_modularity;
