//! Laboratory for killed random spanning forests on the complete graph.
//!
//! Spanning trees of `K_n` plus an absorbing root, weighted by
//! `kappa^(root degree)`, are sampled through Wilson's algorithm with
//! killing; the minimal subtree connecting a marked set to the root is
//! reduced to its combinatorial class, whose law is computed exactly at
//! small `n` and compared against the limiting regimes: uniform binary
//! shapes with `sqrt(n)`-rescaled branch lengths at fixed `kappa`, and a
//! Gibbs(1/2) partition of the marked set at `kappa = c sqrt(n)`.

pub mod combinatorics;
pub mod dyck;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod gibbs;
pub mod limits;
pub mod reduced;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
