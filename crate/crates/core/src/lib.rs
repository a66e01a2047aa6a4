//! Bayesian structure learning for sparse Gaussian graphical models.
//!
//! Each candidate graph is scored by a Laplace approximation of its marginal
//! posterior mass, expanded around the support-constrained graphical lasso
//! solution. Scores are normalized over the regular models that a search
//! visits, giving model probabilities, edge-inclusion probabilities and the
//! median probability model.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the command-line
//! interface and thread-parallel drivers live in the `ggmsel` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod glasso;
pub mod graph;
pub mod matrix;
pub mod oracle;
pub mod prior;
pub mod score;
pub mod search;
pub mod simulate;

pub use error::{Error, Result};
pub use graph::{Edge, FreeIndexSet, GraphStructure};
pub use matrix::{CholeskyFactor, SymMatrix};
