use std::time::{Duration, Instant};

use crate::geometry::{PointSet, QuadTree};

use super::{Region, DOUBLE_BYTES, INTEGER_BYTES};

/// Shared structure-of-arrays layout: seven arrays stored back to back.
///
/// Box `k` owns `tgt_idx[tgt_offsets[k]..tgt_offsets[k+1]]` and
/// `nei_src_idx[nei_src_offsets[k]..nei_src_offsets[k+1]]`, the latter being
/// the sources of its whole E1 neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexingLayout {
    pub n: usize,
    pub level: u32,
    pub ct: usize,
    /// Largest box occupancy of the tree the layout was built from.
    pub t: usize,
    /// `x, y` per source.
    pub src_coords: Vec<f64>,
    /// `x, y` per target.
    pub tgt_coords: Vec<f64>,
    pub tgt_idx: Vec<i32>,
    pub tgt_offsets: Vec<i32>,
    pub nei_src_idx: Vec<i32>,
    pub nei_src_offsets: Vec<i32>,
    pub src_potentials: Vec<f64>,
    /// Size charged by the memory model, `40N + 4^L (2 + 10t)`.
    pub reported_bytes: u64,
    /// Wall time spent by [`build_indexing`].
    pub build_time: Duration,
}

/// The seven arrays in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum IndexingRegion {
    SrcCoords = 0,
    TgtCoords = 1,
    TgtIdx = 2,
    TgtOffsets = 3,
    NeiSrcIdx = 4,
    NeiSrcOffsets = 5,
    SrcPotentials = 6,
}

impl IndexingRegion {
    pub const ALL: [IndexingRegion; 7] = [
        Self::SrcCoords,
        Self::TgtCoords,
        Self::TgtIdx,
        Self::TgtOffsets,
        Self::NeiSrcIdx,
        Self::NeiSrcOffsets,
        Self::SrcPotentials,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SrcCoords => "src_coords",
            Self::TgtCoords => "tgt_coords",
            Self::TgtIdx => "tgt_idx",
            Self::TgtOffsets => "tgt_offsets",
            Self::NeiSrcIdx => "nei_src_idx",
            Self::NeiSrcOffsets => "nei_src_offsets",
            Self::SrcPotentials => "src_potentials",
        }
    }
}

/// `40N + 4^L (2 + 10t)`: five doubles per point plus, per box, two offsets,
/// `t` target indices and `9t` neighbor source indices.
pub(crate) fn indexing_formula_bytes(n: u64, level: u32, t: u64) -> u64 {
    5 * DOUBLE_BYTES * n + (1u64 << (2 * level)) * (2 + 10 * t)
}

impl IndexingLayout {
    pub fn box_count(&self) -> usize {
        self.tgt_offsets.len().saturating_sub(1)
    }

    /// Bytes actually held by the packed arrays.
    pub fn actual_bytes(&self) -> u64 {
        self.regions().iter().map(|r| r.len).sum()
    }

    /// The arrays' extents in a flat address space where they are stored
    /// consecutively in [`IndexingRegion`] order.
    pub fn regions(&self) -> [Region; 7] {
        let lens = [
            self.src_coords.len() as u64 * DOUBLE_BYTES,
            self.tgt_coords.len() as u64 * DOUBLE_BYTES,
            self.tgt_idx.len() as u64 * INTEGER_BYTES,
            self.tgt_offsets.len() as u64 * INTEGER_BYTES,
            self.nei_src_idx.len() as u64 * INTEGER_BYTES,
            self.nei_src_offsets.len() as u64 * INTEGER_BYTES,
            self.src_potentials.len() as u64 * DOUBLE_BYTES,
        ];
        let mut base = 0;
        IndexingRegion::ALL.map(|r| {
            let len = lens[r as usize];
            let region = Region { name: r.name(), base, len };
            base += len;
            region
        })
    }
}

/// Fill the seven arrays from a tree. The elapsed time is the indexing
/// method's collection time.
pub fn build_indexing(tree: &QuadTree, points: &PointSet) -> IndexingLayout {
    let start = Instant::now();
    let n = points.len();
    let boxes = tree.box_count();

    let src_coords: Vec<f64> = points.sources().iter().flatten().copied().collect();
    let tgt_coords: Vec<f64> = points.targets().iter().flatten().copied().collect();
    let src_potentials = points.potentials().to_vec();

    let tgt_idx: Vec<i32> = tree.target_members().iter().map(|&i| i as i32).collect();
    let tgt_offsets: Vec<i32> = tree.target_offsets().iter().map(|&o| o as i32).collect();

    let mut nei_src_idx = Vec::with_capacity(9 * n);
    let mut nei_src_offsets = Vec::with_capacity(boxes + 1);
    nei_src_offsets.push(0);
    for k in 0..boxes {
        for nb in tree.neighbors(k) {
            nei_src_idx.extend(tree.box_sources(nb as usize).iter().map(|&i| i as i32));
        }
        nei_src_offsets.push(nei_src_idx.len() as i32);
    }

    let t = tree.stats().t;
    let reported_bytes = indexing_formula_bytes(n as u64, tree.level(), t as u64);
    IndexingLayout {
        n,
        level: tree.level(),
        ct: tree.ct(),
        t,
        src_coords,
        tgt_coords,
        tgt_idx,
        tgt_offsets,
        nei_src_idx,
        nei_src_offsets,
        src_potentials,
        reported_bytes,
        build_time: start.elapsed(),
    }
}
