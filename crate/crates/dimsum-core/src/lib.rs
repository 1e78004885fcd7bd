//! Column-similarity and Gram-matrix estimation for tall sparse matrices,
//! built on a small deterministic map/shuffle/reduce simulator.
//!
//! The crate provides:
//!
//! - [`matrix`]: sparse row storage, entry scaling and column statistics;
//! - [`generate`]: seeded dataset generators, including the worst-case
//!   duplicated-group construction;
//! - [`engine`]: the instrumented map/shuffle/reduce executor (shuffle
//!   size, reduce-key cardinalities);
//! - [`pipelines`]: the exact all-pairs pipeline and the sampled cosine
//!   pipelines with their scaling reducers;
//! - [`spectral`]: dense symmetric oracles, spectral norm, Jacobi
//!   eigendecomposition and singular-value recovery;
//! - [`verify`]: seeded statistical suites checking the estimator's
//!   moment bounds, tail bounds, shuffle-size and reduce-key behavior.
//!
//! With the default `parallel` feature, map, reduce and trial loops run
//! on rayon; sequential execution is always available and bit-exactly
//! reproducible for a fixed seed.

pub mod engine;
pub mod error;
pub mod generate;
pub mod io;
pub mod matrix;
pub mod pipelines;
pub mod rng;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
