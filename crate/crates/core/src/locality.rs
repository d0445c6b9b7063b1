//! Bank-locality miss ratio measured from access traces.
//!
//! Each work item's reads are mapped to bank indices (`offset / b`); the
//! touched banks are merged into maximal runs of adjacent banks and the runs
//! are counted. That count, divided by the number of banks the layout
//! occupies, is the item's miss ratio.
//!
//! [`MissRatio::per_item`] averages the item ratios; [`MissRatio::summed`]
//! adds them up over all items.

use crate::error::{Error, Result};
use crate::executors::{replay_reads, AccessTrace, LayoutRef, ReadEvent, TraceSink};

pub use crate::model::DEFAULT_BANK_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MissRatio {
    pub bank_bytes: u64,
    pub items: usize,
    /// Non-adjacent bank runs over all items.
    pub runs: u64,
    /// `ceil(layout bytes / b)`.
    pub occupied_banks: u64,
}

impl MissRatio {
    /// Mean over work items of `runs_j / occupied_banks`.
    pub fn per_item(&self) -> f64 {
        self.runs as f64 / self.items as f64 / self.occupied_banks as f64
    }

    /// Sum over work items of `runs_j / occupied_banks`.
    pub fn summed(&self) -> f64 {
        self.runs as f64 / self.occupied_banks as f64
    }

    pub fn mean_runs(&self) -> f64 {
        self.runs as f64 / self.items as f64
    }
}

/// Streaming run counter; feed it a trace through [`TraceSink`].
#[derive(Debug, Clone)]
pub struct BankRunCounter {
    bank_bytes: u64,
    spans: Vec<(u64, u64)>,
    items: usize,
    runs: u64,
    events: u64,
}

impl BankRunCounter {
    pub fn new(bank_bytes: u64) -> Result<Self> {
        if bank_bytes == 0 {
            return Err(Error::InvalidArgument("bank size must be positive".into()));
        }
        Ok(Self { bank_bytes, spans: Vec::new(), items: 0, runs: 0, events: 0 })
    }

    fn close_item(&mut self) {
        if self.spans.is_empty() {
            return;
        }
        self.spans.sort_unstable();
        let mut runs = 1;
        let mut end = self.spans[0].1;
        for &(lo, hi) in &self.spans[1..] {
            if lo > end + 1 {
                runs += 1;
            }
            end = end.max(hi);
        }
        self.runs += runs;
        self.spans.clear();
    }

    pub fn finish(mut self, layout_bytes: u64) -> Result<MissRatio> {
        self.close_item();
        if self.events == 0 || self.items == 0 {
            return Err(Error::UndefinedMetric("trace holds no reads".into()));
        }
        if layout_bytes == 0 {
            return Err(Error::UndefinedMetric("layout occupies no banks".into()));
        }
        Ok(MissRatio {
            bank_bytes: self.bank_bytes,
            items: self.items,
            runs: self.runs,
            occupied_banks: layout_bytes.div_ceil(self.bank_bytes),
        })
    }
}

impl TraceSink for BankRunCounter {
    fn begin_item(&mut self, _item: usize) {
        self.close_item();
        self.items += 1;
    }

    fn read(&mut self, e: ReadEvent) {
        if e.len == 0 {
            return;
        }
        self.events += 1;
        self.spans.push((e.offset / self.bank_bytes, (e.end() - 1) / self.bank_bytes));
    }
}

/// Miss ratio of a recorded trace.
pub fn miss_ratio_exact(trace: &AccessTrace, bank_bytes: u64) -> Result<MissRatio> {
    let mut counter = BankRunCounter::new(bank_bytes)?;
    for i in 0..trace.items() {
        counter.begin_item(i);
        for &e in trace.item(i) {
            counter.read(e);
        }
    }
    counter.finish(trace.total_bytes)
}

/// Miss ratio of a layout's executor, computed while replaying its reads
/// without storing the trace.
pub fn miss_ratio_of(layout: LayoutRef<'_>, bank_bytes: u64) -> Result<MissRatio> {
    let mut counter = BankRunCounter::new(bank_bytes)?;
    replay_reads(layout, &mut counter)?;
    counter.finish(layout.total_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executors::{trace_run, Method};
    use crate::geometry::{build_tree, PointSet};
    use crate::layouts::{build_indexing, build_repetition, Region};

    fn synthetic(items: Vec<Vec<(u64, u32)>>, total: u64) -> AccessTrace {
        let mut item_offsets = vec![0];
        let mut events = Vec::new();
        for it in items {
            events.extend(it.into_iter().map(|(offset, len)| ReadEvent { region: 0, offset, len }));
            item_offsets.push(events.len());
        }
        AccessTrace {
            method: Method::Repetition,
            regions: vec![Region { name: "all", base: 0, len: total }],
            total_bytes: total,
            item_offsets,
            events,
        }
    }

    #[test]
    fn counts_runs_of_adjacent_banks() {
        // banks {0,1}, {3}, {7,8}: three runs; banks {2}: one run.
        let t = synthetic(vec![vec![(0, 600), (1600, 8), (3800, 400)], vec![(1100, 4)]], 4096);
        let m = miss_ratio_exact(&t, 512).unwrap();
        assert_eq!(m.runs, 4);
        assert_eq!(m.occupied_banks, 8);
        assert_eq!(m.summed(), 0.5);
        assert_eq!(m.per_item(), 0.25);
    }

    #[test]
    fn order_and_repeats_do_not_matter() {
        let a = synthetic(vec![vec![(0, 8), (2048, 8), (0, 8), (520, 8)]], 4096);
        let b = synthetic(vec![vec![(2048, 8), (520, 8), (0, 8)]], 4096);
        assert_eq!(miss_ratio_exact(&a, 512).unwrap(), miss_ratio_exact(&b, 512).unwrap());
        assert_eq!(miss_ratio_exact(&a, 512).unwrap().runs, 2);
    }

    #[test]
    fn empty_trace_is_undefined() {
        let t = synthetic(vec![], 4096);
        assert!(matches!(miss_ratio_exact(&t, 512), Err(Error::UndefinedMetric(_))));
        let t = synthetic(vec![vec![]], 4096);
        assert!(matches!(miss_ratio_exact(&t, 512), Err(Error::UndefinedMetric(_))));
        assert!(matches!(miss_ratio_exact(&synthetic(vec![vec![(0, 8)]], 8), 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn repetition_items_form_one_run() {
        let p = PointSet::generate(3000, 2).unwrap();
        let tree = build_tree(&p, 15, 3).unwrap();
        let rep = build_repetition(&tree, &p);
        let m = miss_ratio_of((&rep).into(), 512).unwrap();
        assert_eq!(m.runs, 3000);
        assert_eq!(m.mean_runs(), 1.0);
    }

    #[test]
    fn streamed_equals_recorded() {
        let p = PointSet::generate(3000, 3).unwrap();
        let tree = build_tree(&p, 15, 3).unwrap();
        let idx = build_indexing(&tree, &p);
        let rep = build_repetition(&tree, &p);
        for layout in [LayoutRef::from(&idx), LayoutRef::from(&rep)] {
            let recorded = miss_ratio_exact(&trace_run(layout).unwrap(), 512).unwrap();
            assert_eq!(recorded, miss_ratio_of(layout, 512).unwrap());
        }
    }

    #[test]
    fn indexing_is_less_local() {
        let p = PointSet::generate(5000, 4).unwrap();
        let tree = build_tree(&p, 15, 3).unwrap();
        let idx = miss_ratio_of((&build_indexing(&tree, &p)).into(), 512).unwrap();
        let rep = miss_ratio_of((&build_repetition(&tree, &p)).into(), 512).unwrap();
        assert!(idx.mean_runs() >= 6.0);
        assert!(idx.per_item() > rep.per_item());
        assert!(idx.summed() > rep.summed());
    }
}
