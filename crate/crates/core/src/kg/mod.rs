//! Knowledge-graph storage, dataset loading, and the small helpers that the
//! training and evaluation loops need (adjacency, negatives, filter masks).

mod adjacency;
mod filter;
mod graph;
mod sampling;
mod split;
pub mod synthetic;
mod vocab;

pub use adjacency::{build_normalized_adjacency, DENSE_ADJACENCY_CAP};
pub use filter::FilterIndex;
pub use graph::{KnowledgeGraph, Query, Triple, INVERSE_SUFFIX};
pub use sampling::{sample_negatives, sample_negatives_excluding};
pub use split::{load_split, read_tsv, DatasetSplit, Mode, RawTriple};
pub use vocab::{Interner, Vocab};
