//! Near-field evaluators.
//!
//! [`run_baseline`] walks the tree directly, [`run_indexing`] runs one work
//! item per box over an [`IndexingLayout`], and [`run_repetition`] one work
//! item per target over a [`RepetitionLayout`]. All three accumulate each
//! target's sum in the same order (neighbor boxes by ascending Morton code,
//! sources in box order), so their outputs agree bit for bit.
//!
//! [`IndexingLayout`]: crate::layouts::IndexingLayout
//! [`RepetitionLayout`]: crate::layouts::RepetitionLayout

mod backend;
mod baseline;
mod indexing;
mod repetition;
mod trace;

use std::time::Duration;

pub use backend::Backend;
pub use baseline::run_baseline;
pub use indexing::run_indexing;
pub use repetition::run_repetition;
pub use trace::{replay_reads, trace_run, AccessTrace, LayoutRef, Method, ReadEvent, TraceSink};

#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldResult {
    /// Potential at each target, indexed like the point set's targets.
    pub tgt_potentials: Vec<f64>,
    /// Time spent inside the evaluation loop.
    pub wall_time: Duration,
    /// Logical work items launched.
    pub work_items: usize,
}
