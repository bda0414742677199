//! Dense row-major `f64` matrices and the seeded random stream used by every
//! stochastic step in the crate.

mod matrix;
mod rng;

pub use matrix::{matmul, matmul_nt, matmul_tn, reduce_sum, sigmoid, sigmoid_scalar, Axis, Matrix};
pub use rng::{splitmix64, StreamRng};
