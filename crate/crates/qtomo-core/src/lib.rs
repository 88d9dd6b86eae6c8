//! Quantum state tomography from projective count data.
//!
//! The crate reconstructs density matrices from measured counts by
//! maximum-likelihood convex optimisation and grades each reconstruction
//! with rank-aware chi-squared goodness-of-fit statistics, separating
//! fundamental Poissonian counting noise from systematic technical noise
//! such as source-brightness drift.
//!
//! Modules follow the data flow:
//!
//! * [`linalg`] — dense complex linear algebra for small dimensions,
//! * [`states`] — density matrices and random-state ensembles,
//! * [`sets`] — informationally complete projector sets,
//! * [`sim`] — synthetic count data with Poissonian noise and drift,
//! * [`recon`] — linear inversion and positivity-constrained fitting,
//! * [`diag`] — chi-squared statistics, degrees of freedom, p-values.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature for embedded or wasm targets. All operations are pure
//! functions of their inputs plus an explicitly passed random stream.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diag;
pub mod error;
pub mod linalg;
pub mod recon;
pub mod rng;
pub mod sets;
pub mod sim;
pub mod states;
pub mod stats;

pub use error::Error;

/// Crate version, embedded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
