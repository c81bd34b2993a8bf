//! Dense kernels, reverse-mode differentiation, Adam, and spectral norms.

mod adam;
pub mod gradcheck;
mod params;
mod sparse;
mod spectral_norm;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use params::{ParamId, ParamStore, Parameter};
pub use sparse::SparseMatrix;
pub use spectral_norm::{sigma_max, spectral_norm, SpectralEstimate};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::{
    matmul, matmul_nt, matmul_tn, matrix_power, sigmoid, softmax_rows, softplus, Tensor,
};
