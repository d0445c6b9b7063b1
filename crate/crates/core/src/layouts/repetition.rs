use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, QuadTree};

use super::DOUBLE_BYTES;

/// Slots before the neighbor triples: target `x`, target `y`, source count.
pub const HEADER_SLOTS: usize = 3;

/// Redundant array-of-structures layout: one fixed-stride record per target.
///
/// Records are appended in traversal order (boxes by Morton code, targets in
/// box order). Record `j` is `records[j * stride..(j + 1) * stride]`, belongs
/// to target `record_targets[j]` and holds
/// `[x_t, y_t, count, (x_s, y_s, q_s) * count, 0...]`. The count slot carries
/// the integer in its low four bytes with the high four bytes zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionLayout {
    pub n: usize,
    pub level: u32,
    pub ct: usize,
    pub t: usize,
    /// Source slots reserved per neighbor box: CT, or the measured `t` when a
    /// height-adjusted tree overfills its boxes.
    pub capacity: usize,
    /// Record length in slots, `3 + 27 * capacity`.
    pub stride: usize,
    pub records: Vec<f64>,
    /// Target index of each record, used to return results in target order.
    /// Host-side bookkeeping; not part of the record data.
    pub record_targets: Vec<u32>,
    /// `8N (3 + 27 capacity)`; equals the allocated size.
    pub reported_bytes: u64,
    /// Wall time spent by [`build_repetition`].
    pub build_time: Duration,
}

#[inline]
pub fn encode_count(count: usize) -> f64 {
    f64::from_bits(count as u32 as u64)
}

/// Read a count slot, rejecting slots whose high four bytes are not zero.
#[inline]
pub fn decode_count(slot: f64) -> Result<usize> {
    let bits = slot.to_bits();
    if bits >> 32 != 0 {
        return Err(Error::LayoutCorrupt(format!("count slot {bits:#018x} has high bytes set")));
    }
    Ok(bits as usize)
}

pub(crate) fn repetition_formula_bytes(n: u64, capacity: u64) -> u64 {
    DOUBLE_BYTES * n * (HEADER_SLOTS as u64 + 27 * capacity)
}

impl RepetitionLayout {
    pub fn record(&self, j: usize) -> &[f64] {
        &self.records[j * self.stride..(j + 1) * self.stride]
    }

    /// Record index of every target, the inverse of `record_targets`.
    pub fn records_by_target(&self) -> Vec<usize> {
        let mut inv = vec![usize::MAX; self.n];
        for (j, &t) in self.record_targets.iter().enumerate() {
            inv[t as usize] = j;
        }
        inv
    }

    /// Number of neighbor sources stored in record `j`.
    pub fn count(&self, j: usize) -> Result<usize> {
        decode_count(self.records[j * self.stride + 2])
    }

    /// Largest legal count per record.
    pub fn max_count(&self) -> usize {
        9 * self.capacity
    }

    pub fn total_bytes(&self) -> u64 {
        self.records.len() as u64 * DOUBLE_BYTES
    }
}

/// Build one record per target holding copies of every source in the
/// target's E1 neighborhood (neighbor boxes in ascending Morton order,
/// sources in box order). The elapsed time is the repetition method's
/// collection time.
pub fn build_repetition(tree: &QuadTree, points: &PointSet) -> RepetitionLayout {
    let start = Instant::now();
    let n = points.len();
    let t = tree.stats().t;
    let capacity = tree.ct().max(t);
    let stride = HEADER_SLOTS + 27 * capacity;
    let mut records = vec![0.0; n * stride];

    let src = points.sources();
    let q = points.potentials();
    let tgt = points.targets();
    let mut triples: Vec<f64> = Vec::with_capacity(27 * capacity);
    let mut record_targets = Vec::with_capacity(n);
    for k in 0..tree.box_count() {
        let targets = tree.box_targets(k);
        if targets.is_empty() {
            continue;
        }
        triples.clear();
        for nb in tree.neighbors(k) {
            for &s in tree.box_sources(nb as usize) {
                let s = s as usize;
                triples.extend_from_slice(&[src[s][0], src[s][1], q[s]]);
            }
        }
        let count = encode_count(triples.len() / 3);
        for &j in targets {
            let r = record_targets.len();
            record_targets.push(j);
            let j = j as usize;
            let rec = &mut records[r * stride..(r + 1) * stride];
            rec[0] = tgt[j][0];
            rec[1] = tgt[j][1];
            rec[2] = count;
            rec[HEADER_SLOTS..HEADER_SLOTS + triples.len()].copy_from_slice(&triples);
        }
    }

    RepetitionLayout {
        n,
        level: tree.level(),
        ct: tree.ct(),
        t,
        capacity,
        stride,
        records,
        record_targets,
        reported_bytes: repetition_formula_bytes(n as u64, capacity as u64),
        build_time: start.elapsed(),
    }
}
