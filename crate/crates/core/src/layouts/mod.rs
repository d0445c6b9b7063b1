//! The two near-field data layouts.
//!
//! [`IndexingLayout`] shares one copy of every coordinate and potential among
//! all boxes and reaches them through two levels of index arrays; one work
//! item per box. [`RepetitionLayout`] gives every target a self-contained,
//! fixed-stride record holding copies of all its neighbor sources; one work
//! item per target, located by `j * stride` alone.

mod dump;
mod indexing;
mod repetition;

pub use dump::{read_dump, Layout, DUMP_MAGIC, KIND_INDEXING, KIND_REPETITION};
pub use indexing::{build_indexing, IndexingLayout, IndexingRegion};
pub use repetition::{build_repetition, decode_count, encode_count, RepetitionLayout, HEADER_SLOTS};
pub(crate) use indexing::indexing_formula_bytes;
pub(crate) use repetition::repetition_formula_bytes;

/// Bytes per stored floating-point value.
pub const DOUBLE_BYTES: u64 = 8;
/// Bytes per stored index.
pub const INTEGER_BYTES: u64 = 4;

/// A contiguous array inside a layout's flat address space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub name: &'static str,
    pub base: u64,
    pub len: u64,
}

impl Region {
    pub fn end(&self) -> u64 {
        self.base + self.len
    }
}
