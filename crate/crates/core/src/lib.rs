//! Graph-directed iterated function systems of similarities.
//!
//! The crate computes dimensions of graph-directed attractors, certifies
//! separation of cylinder sets with ball enclosures, and extracts
//! self-similar subsystems satisfying the strong separation condition whose
//! dimension comes within a requested `ε` of the attractor's, optionally with
//! prescribed orthogonal parts and a single common ratio. Every extraction
//! returns a certificate that [`verify::verify`] re-checks from scratch.

pub mod approx;
pub mod config;
pub mod dimension;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod graph;
pub mod logratio;
pub mod par;
pub mod rational;
pub mod render;
pub mod separation;
pub mod sft;
pub mod verify;

pub use error::{Error, Result};
