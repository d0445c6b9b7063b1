//! Near-field (P2P) operator laboratory for a 2D quadtree fast multipole method.
//!
//! The crate builds uniform quadtrees over random point sets, lays the
//! near-field interaction data out in two competing formats, evaluates the
//! potential with three interchangeable executors, and models the speedup of
//! the redundant per-target layout over the shared indexed one:
//!
//! * [`geometry`]: point generation, Morton indexing, tree construction.
//! * [`kernel`]: the pairwise `q ln(1/r)` potential.
//! * [`layouts`]: the indexed structure-of-arrays layout and the
//!   fixed-stride repetition layout, with byte accounting and dumps.
//! * [`executors`]: baseline, indexing and repetition evaluators plus
//!   read-trace replay.
//! * [`locality`]: the bank-run miss-ratio metric over read traces.
//! * [`model`]: closed-form cost, memory, miss-ratio and speedup models.
//! * [`calibration`]: coefficient fitting from experiment records.

#![forbid(unsafe_code)]

pub mod calibration;
pub mod error;
pub mod executors;
pub mod geometry;
pub mod kernel;
pub mod layouts;
pub mod locality;
pub mod model;

pub use error::{Error, Result};
