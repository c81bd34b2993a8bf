//! Input encoding and the two parallel pathways over entity states: local
//! query-aware message passing and global all-pairs attention.

mod context;
mod encoder;
mod global;
mod local;

pub use context::GraphContext;
pub use encoder::{Encoder, EncoderState};
pub use global::{AttentionKernel, GlobalLayer, GlobalOutput, GlobalPathway, DIAGNOSTIC_CAP};
pub use local::{Activation, LocalLayer, LocalPathway};
