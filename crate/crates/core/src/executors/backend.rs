use std::ops::Range;
use std::thread;

use crate::error::Result;

/// Fork-join execution of work items: either inline, or split into `width`
/// static contiguous chunks each run on its own scoped OS thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Backend {
    width: usize,
}

impl Default for Backend {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Backend {
    pub fn sequential() -> Self {
        Self { width: 1 }
    }

    pub fn threads(width: usize) -> Self {
        Self { width: width.max(1) }
    }

    /// One worker per available hardware thread.
    pub fn available() -> Self {
        Self::threads(thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Split `items` into at most `width` contiguous, nearly equal ranges.
    pub fn chunks(&self, items: usize) -> Vec<Range<usize>> {
        let parts = self.width.min(items).max(1);
        let base = items / parts;
        let extra = items % parts;
        let mut start = 0;
        (0..parts)
            .map(|p| {
                let len = base + usize::from(p < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    }

    /// Run `work` over every chunk of `0..items`. Chunk `r` receives the
    /// output slice `out[out_start(r.start)..out_start(r.end)]`, so
    /// `out_start` must be nondecreasing with `out_start(items) == out.len()`.
    pub(crate) fn run<S, F>(&self, items: usize, out: &mut [f64], out_start: S, work: F) -> Result<()>
    where
        S: Fn(usize) -> usize,
        F: Fn(Range<usize>, &mut [f64]) -> Result<()> + Sync,
    {
        if self.width == 1 || items <= 1 {
            return work(0..items, out);
        }
        let chunks = self.chunks(items);
        let mut slices = Vec::with_capacity(chunks.len());
        let mut rest = out;
        let mut consumed = 0;
        for r in &chunks {
            let end = out_start(r.end);
            let (head, tail) = rest.split_at_mut(end - consumed);
            slices.push(head);
            rest = tail;
            consumed = end;
        }
        let work = &work;
        thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .zip(slices)
                .map(|(r, slice)| scope.spawn(move || work(r, slice)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("work item panicked"))
                .collect::<Result<Vec<()>>>()
        })?;
        Ok(())
    }
}
