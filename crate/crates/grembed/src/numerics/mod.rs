//! Self-contained numeric kernels: matrices, symmetric eigensolver,
//! truncated SVD, Adam, and a seeded RNG. Everything here is deterministic
//! given its inputs (and a seed where randomness is involved).

pub mod adam;
pub mod eigen;
pub mod matrix;
pub mod rng;
pub mod svd;

pub use adam::{adam_step, AdamState};
pub use eigen::{jacobi_eigh, symmetric_eigs_smallest};
pub use matrix::{DenseMatrix, SparseMatrix};
pub use rng::Rng;
pub use svd::truncated_svd;
