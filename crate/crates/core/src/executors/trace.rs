use crate::error::Result;
use crate::layouts::{IndexingLayout, IndexingRegion, Region, RepetitionLayout, DOUBLE_BYTES, HEADER_SLOTS, INTEGER_BYTES};

use super::{indexing, repetition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Indexing,
    Repetition,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Indexing => "indexing",
            Method::Repetition => "repetition",
        }
    }
}

/// A borrowed layout of either kind.
#[derive(Debug, Clone, Copy)]
pub enum LayoutRef<'a> {
    Indexing(&'a IndexingLayout),
    Repetition(&'a RepetitionLayout),
}

impl LayoutRef<'_> {
    pub fn method(&self) -> Method {
        match self {
            LayoutRef::Indexing(_) => Method::Indexing,
            LayoutRef::Repetition(_) => Method::Repetition,
        }
    }

    /// Arrays of the layout in its flat address space.
    pub fn regions(&self) -> Vec<Region> {
        match self {
            LayoutRef::Indexing(l) => l.regions().to_vec(),
            LayoutRef::Repetition(l) => vec![Region { name: "records", base: 0, len: l.total_bytes() }],
        }
    }

    pub fn total_bytes(&self) -> u64 {
        self.regions().last().map_or(0, Region::end)
    }

    pub fn work_items(&self) -> usize {
        match self {
            LayoutRef::Indexing(l) => l.box_count(),
            LayoutRef::Repetition(l) => l.n,
        }
    }
}

impl<'a> From<&'a IndexingLayout> for LayoutRef<'a> {
    fn from(l: &'a IndexingLayout) -> Self {
        LayoutRef::Indexing(l)
    }
}

impl<'a> From<&'a RepetitionLayout> for LayoutRef<'a> {
    fn from(l: &'a RepetitionLayout) -> Self {
        LayoutRef::Repetition(l)
    }
}

/// One layout read: `len` bytes at absolute `offset` inside region `region`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReadEvent {
    pub region: u8,
    pub offset: u64,
    pub len: u32,
}

impl ReadEvent {
    pub fn end(&self) -> u64 {
        self.offset + self.len as u64
    }
}

/// Receives the reads of a replayed executor, work item by work item.
pub trait TraceSink {
    fn begin_item(&mut self, item: usize);
    fn read(&mut self, event: ReadEvent);
}

/// A recorded trace. Events of item `i` are
/// `events[item_offsets[i]..item_offsets[i + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessTrace {
    pub method: Method,
    pub regions: Vec<Region>,
    pub total_bytes: u64,
    pub item_offsets: Vec<usize>,
    pub events: Vec<ReadEvent>,
}

impl AccessTrace {
    pub fn items(&self) -> usize {
        self.item_offsets.len().saturating_sub(1)
    }

    pub fn item(&self, i: usize) -> &[ReadEvent] {
        &self.events[self.item_offsets[i]..self.item_offsets[i + 1]]
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

struct Recorder {
    item_offsets: Vec<usize>,
    events: Vec<ReadEvent>,
}

impl TraceSink for Recorder {
    fn begin_item(&mut self, _item: usize) {
        self.item_offsets.push(self.events.len());
    }

    fn read(&mut self, event: ReadEvent) {
        self.events.push(event);
    }
}

/// Stream the reads the matching executor performs, in the same order,
/// after the same layout validation.
pub fn replay_reads(layout: LayoutRef<'_>, sink: &mut dyn TraceSink) -> Result<()> {
    match layout {
        LayoutRef::Indexing(l) => replay_indexing(l, sink),
        LayoutRef::Repetition(l) => replay_repetition(l, sink),
    }
}

fn replay_indexing(l: &IndexingLayout, sink: &mut dyn TraceSink) -> Result<()> {
    indexing::validate(l)?;
    let regions = l.regions();
    let at = |r: IndexingRegion, elem: usize, width: u64, count: u32| ReadEvent {
        region: r as u8,
        offset: regions[r as usize].base + elem as u64 * width,
        len: count * width as u32,
    };
    for k in 0..l.box_count() {
        sink.begin_item(k);
        sink.read(at(IndexingRegion::TgtOffsets, k, INTEGER_BYTES, 2));
        let (t0, t1) = (l.tgt_offsets[k] as usize, l.tgt_offsets[k + 1] as usize);
        if t0 == t1 {
            continue;
        }
        sink.read(at(IndexingRegion::NeiSrcOffsets, k, INTEGER_BYTES, 2));
        let (s0, s1) = (l.nei_src_offsets[k] as usize, l.nei_src_offsets[k + 1] as usize);
        for p in t0..t1 {
            sink.read(at(IndexingRegion::TgtIdx, p, INTEGER_BYTES, 1));
            sink.read(at(IndexingRegion::TgtCoords, l.tgt_idx[p] as usize, 2 * DOUBLE_BYTES, 1));
            for s in s0..s1 {
                let si = l.nei_src_idx[s] as usize;
                sink.read(at(IndexingRegion::NeiSrcIdx, s, INTEGER_BYTES, 1));
                sink.read(at(IndexingRegion::SrcCoords, si, 2 * DOUBLE_BYTES, 1));
                sink.read(at(IndexingRegion::SrcPotentials, si, DOUBLE_BYTES, 1));
            }
        }
    }
    Ok(())
}

fn replay_repetition(l: &RepetitionLayout, sink: &mut dyn TraceSink) -> Result<()> {
    repetition::validate(l)?;
    let record_bytes = l.stride as u64 * DOUBLE_BYTES;
    let slot3 = (3 * DOUBLE_BYTES) as u32;
    for j in 0..l.n {
        sink.begin_item(j);
        let base = j as u64 * record_bytes;
        sink.read(ReadEvent { region: 0, offset: base, len: HEADER_SLOTS as u32 * DOUBLE_BYTES as u32 });
        let count = repetition::record_count(l, l.record(j), j)?;
        let first = base + HEADER_SLOTS as u64 * DOUBLE_BYTES;
        for c in 0..count as u64 {
            sink.read(ReadEvent { region: 0, offset: first + c * slot3 as u64, len: slot3 });
        }
    }
    Ok(())
}

/// Record the full read trace of the executor matching `layout`.
pub fn trace_run(layout: LayoutRef<'_>) -> Result<AccessTrace> {
    let mut rec = Recorder { item_offsets: Vec::with_capacity(layout.work_items() + 1), events: Vec::new() };
    replay_reads(layout, &mut rec)?;
    rec.item_offsets.push(rec.events.len());
    Ok(AccessTrace {
        method: layout.method(),
        regions: layout.regions(),
        total_bytes: layout.total_bytes(),
        item_offsets: rec.item_offsets,
        events: rec.events,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use super::*;
    use crate::geometry::{build_tree, PointSet, QuadTree};
    use crate::layouts::{build_indexing, build_repetition};

    fn e1_pairs(tree: &QuadTree) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for k in 0..tree.box_count() {
            for &ti in tree.box_targets(k) {
                for nb in tree.neighbors(k) {
                    for &si in tree.box_sources(nb as usize) {
                        pairs.push((ti as usize, si as usize));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    fn instance() -> (PointSet, QuadTree) {
        let p = PointSet::generate(1500, 21).unwrap();
        let tree = build_tree(&p, 12, 3).unwrap();
        (p, tree)
    }

    #[test]
    fn events_stay_inside_their_regions() {
        let (p, tree) = instance();
        let idx = build_indexing(&tree, &p);
        let rep = build_repetition(&tree, &p);
        for layout in [LayoutRef::from(&idx), LayoutRef::from(&rep)] {
            let trace = trace_run(layout).unwrap();
            assert_eq!(trace.items(), layout.work_items());
            for e in &trace.events {
                let r = trace.regions[e.region as usize];
                assert!(e.offset >= r.base && e.end() <= r.end());
                assert!(e.end() <= trace.total_bytes);
            }
        }
    }

    #[test]
    fn indexing_trace_reconstructs_interactions() {
        let (p, tree) = instance();
        let l = build_indexing(&tree, &p);
        let trace = trace_run((&l).into()).unwrap();
        let regions = l.regions();
        let elem = |e: &ReadEvent, r: IndexingRegion| ((e.offset - regions[r as usize].base) / INTEGER_BYTES) as usize;
        let mut pairs = Vec::new();
        for k in 0..trace.items() {
            let mut target = None;
            for e in trace.item(k) {
                if e.region == IndexingRegion::TgtIdx as u8 {
                    target = Some(l.tgt_idx[elem(e, IndexingRegion::TgtIdx)] as usize);
                } else if e.region == IndexingRegion::NeiSrcIdx as u8 {
                    pairs.push((target.unwrap(), l.nei_src_idx[elem(e, IndexingRegion::NeiSrcIdx)] as usize));
                }
            }
        }
        pairs.sort_unstable();
        assert_eq!(pairs, e1_pairs(&tree));
    }

    #[test]
    fn repetition_trace_reconstructs_interactions() {
        let (p, tree) = instance();
        let l = build_repetition(&tree, &p);
        let trace = trace_run((&l).into()).unwrap();
        let by_coords: HashMap<(u64, u64), usize> =
            p.sources().iter().enumerate().map(|(i, s)| ((s[0].to_bits(), s[1].to_bits()), i)).collect();
        let mut pairs = Vec::new();
        for j in 0..trace.items() {
            for e in &trace.item(j)[1..] {
                let slot = (e.offset / DOUBLE_BYTES) as usize;
                let key = (l.records[slot].to_bits(), l.records[slot + 1].to_bits());
                pairs.push((l.record_targets[j] as usize, by_coords[&key]));
            }
        }
        pairs.sort_unstable();
        assert_eq!(pairs, e1_pairs(&tree));
    }

    #[test]
    fn repetition_items_are_contiguous_and_live_sized() {
        let (p, tree) = instance();
        let l = build_repetition(&tree, &p);
        let trace = trace_run((&l).into()).unwrap();
        let mut live = 0;
        for j in 0..trace.items() {
            let ev = trace.item(j);
            for w in ev.windows(2) {
                assert_eq!(w[0].end(), w[1].offset);
            }
            let span = ev.last().unwrap().end() - ev[0].offset;
            assert!(span <= l.stride as u64 * 8);
            assert_eq!(span, 24 + 24 * l.count(j).unwrap() as u64);
            live += span;
        }
        let traced: u64 = trace.events.iter().map(|e| e.len as u64).sum();
        assert_eq!(traced, live);
    }

    #[test]
    fn nonempty_indexing_items_touch_six_regions() {
        let (p, tree) = instance();
        let l = build_indexing(&tree, &p);
        let trace = trace_run((&l).into()).unwrap();
        for k in 0..trace.items() {
            let regions: BTreeSet<u8> = trace.item(k).iter().map(|e| e.region).collect();
            if tree.box_targets(k).is_empty() {
                assert_eq!(regions.len(), 1);
            } else {
                assert!(regions.len() >= 6, "box {k} touched {regions:?}");
            }
        }
    }

    #[test]
    fn corrupt_layouts_fail_the_same_way() {
        let (p, tree) = instance();
        let mut l = build_repetition(&tree, &p);
        l.records[2] = f64::from_bits(1 << 40);
        assert!(trace_run((&l).into()).is_err());
    }
}
