//! Vandermonde, Gram and Bergman machinery of weighted pluripotential theory,
//! and the tooling to check numerically that asymptotically Fekete arrays
//! equidistribute even when their points leave the compact set `K` and only
//! lie in shrinking neighborhoods `K_n`.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, configuration
//! and the command line driver live in the `fekete-workbench` crate.
//!
//! Module map:
//!
//! * [`basis`]: graded monomial bases and the counts `m_n`, `l_n`.
//! * [`domains`]: meshes for `K` and `K_n`, admissible weights.
//! * [`vandermonde`]: log-domain (weighted) Vandermonde determinants.
//! * [`fekete`]: approximate Fekete extraction and AAWF arrays.
//! * [`gram`]: Gram matrices, Bergman functions, optimal measures.
//! * [`perturbation`]: the functional `f_n(t)` and its derivative identities.
//! * [`convergence`]: reference equilibrium measures, moments, energies and
//!   diameter scans.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod basis;
pub mod convergence;
pub(crate) mod dd;
pub mod domains;
mod error;
pub mod fekete;
pub mod gram;
pub(crate) mod linalg;
pub mod perturbation;
#[cfg(feature = "serde")]
mod serde_ext;
pub mod vandermonde;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// A point of `C^d`, one complex coordinate per variable.
pub type Point = alloc::vec::Vec<Complex64>;

pub use linalg::PIVOT_RTOL;
