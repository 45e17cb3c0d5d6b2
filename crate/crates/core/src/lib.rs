//! Numerical laboratory for the objects used in the transference proof of
//! long arithmetic progressions in the primes.
//!
//! The crate is organised bottom-up:
//!
//! * [`sieve`]: primes, Möbius, von Mangoldt and totient tables, the W-trick.
//! * [`cutoff`]: smooth cutoffs χ, the normaliser c_χ and the truncated
//!   divisor sums Λ_R, Λ_{χ,R}.
//! * [`cyclic`]: dense functions on Z_N and their serialisations.
//! * [`majorant`]: the pseudorandom majorant ν and the windowed weight f.
//! * [`forms`]: linear forms, the 2-blow-up systems, exact and Monte-Carlo
//!   linear-forms expectations, and the divisor-sum moment experiment.
//! * [`graphs`]: tripartite graphs and hypergraphs built from sets and
//!   measures, homomorphism densities, densification.
//! * [`norms`]: cut norms, the U² bound, generalized convolutions.
//! * [`dense_model`]: a cutting-plane search for bounded dense models.
//! * [`analytic`]: Fourier profile of eˣχ(x), Euler factors, ζ near s = 1.
//! * [`primes_ap`]: progressions of primes and sums of two squares.

pub mod analytic;
pub mod contract;
pub mod cutoff;
pub mod cyclic;
pub mod dense_model;
pub mod error;
pub mod forms;
pub mod graphs;
pub mod majorant;
pub mod norms;
pub mod primes_ap;
pub mod quadrature;
pub mod sieve;

pub use cutoff::CutoffFunction;
pub use cyclic::CyclicFunction;
pub use error::{Error, Result};
pub use sieve::{SieveTables, WTrick};

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
