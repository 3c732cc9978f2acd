//! Sketching-based compression of feed-forward nets and hashed weight
//! sharing, with the machinery to verify their approximation, spectral, and
//! recovery properties empirically.
//!
//! What lives where:
//!
//! - [`linalg`]: dense column-major matrices, one-sided Jacobi SVD, cyclic
//!   Jacobi symmetric eigenvalues, Gaussian sampling.
//! - [`rng`]: counter-based deterministic random streams keyed by
//!   (seed, stream id).
//! - [`hashing`]: t-wise independent polynomial hashes over 2^61 - 1,
//!   bucket-load statistics, and the moment tail bound.
//! - [`sketch`]: Count-Sketch and sparse-embedding matrices, subspace bases,
//!   and empirical subspace-embedding distortion.
//! - [`sketchnet`]: exact vs sketched feed-forward passes, output-gap
//!   measurement, and the analytic gap bound.
//! - [`hashednet`]: one-hidden-layer hashed nets - teachers, risk, gradient,
//!   Gauss-Newton Hessian, the lifting reduction, spectral bound formulas,
//!   and gradient-descent recovery.
//! - [`spectra`]: singular-value diagnostics (condition number, stable rank,
//!   full-rank flag).
//! - [`harness`]: dataset I/O (IDX, CSV), the synthetic digit task, the
//!   hashed/small/thin classifier comparison, and the CLI verification
//!   suites.
//!
//! The `examples/` directory holds one runnable walkthrough per capability;
//! the `hashnets` binary exposes the same suites as subcommands with CSV
//! output.

pub mod activation;
pub mod error;
pub mod harness;
pub mod hashednet;
pub mod hashing;
pub mod linalg;
pub mod rng;
pub mod sketch;
pub mod sketchnet;
pub mod spectra;

#[cfg(test)]
pub(crate) mod oracles;

pub use activation::Activation;
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Svd};
pub use rng::Rng;
