//! Deterministic numerical kernels: a Jacobi symmetric eigensolver, a
//! splitmix64 random source and the handful of dense-matrix helpers the
//! pipeline needs.

mod eig;
mod matrix;
mod rng;

pub use eig::{symmetric_eig, Eigen, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use matrix::{covariance, mean_vector, Matrix, SymmetricMatrix};
pub use rng::{split_seed, splitmix64_next, RandomSource};
