pub mod canonical;
pub mod checkpoint;
pub mod cli;
pub mod coarse;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod inference;
pub mod kg;
pub mod numerics;
pub mod pathways;
pub mod spectral;

pub use error::{CheckpointError, Error, Result};
