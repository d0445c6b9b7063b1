use std::time::Instant;

use crate::error::{Error, Result};
use crate::kernel::{pair_potential, KernelConfig};
use crate::layouts::{decode_count, RepetitionLayout, HEADER_SLOTS};

use super::{Backend, NearFieldResult};

pub(crate) fn validate(layout: &RepetitionLayout) -> Result<()> {
    if layout.stride != HEADER_SLOTS + 27 * layout.capacity {
        return Err(Error::LayoutCorrupt(format!(
            "stride {} does not match capacity {}",
            layout.stride, layout.capacity
        )));
    }
    if layout.records.len() != layout.n * layout.stride {
        return Err(Error::LayoutCorrupt(format!(
            "{} slots for {} records of stride {}",
            layout.records.len(),
            layout.n,
            layout.stride
        )));
    }
    if layout.record_targets.len() != layout.n {
        return Err(Error::LayoutCorrupt(format!(
            "{} record targets for {} records",
            layout.record_targets.len(),
            layout.n
        )));
    }
    let mut seen = vec![false; layout.n];
    for &t in &layout.record_targets {
        match seen.get_mut(t as usize) {
            Some(s) if !*s => *s = true,
            _ => return Err(Error::LayoutCorrupt(format!("record target {t} out of range or repeated"))),
        }
    }
    Ok(())
}

/// Decode and bound-check the count slot of a record.
pub(crate) fn record_count(layout: &RepetitionLayout, record: &[f64], j: usize) -> Result<usize> {
    let count = decode_count(record[2])?;
    if count > layout.max_count() {
        return Err(Error::LayoutCorrupt(format!(
            "record {j} claims {count} sources, above the limit {}",
            layout.max_count()
        )));
    }
    Ok(count)
}

/// One work item per target. Item `j` finds its record at `j * stride`
/// with no index arrays and sums the kernel over the stored triples. Results
/// come out in record order and are scattered to target order.
pub fn run_repetition(layout: &RepetitionLayout, cfg: &KernelConfig, backend: &Backend) -> Result<NearFieldResult> {
    validate(layout)?;
    let stride = layout.stride;
    let mut staged = vec![0.0; layout.n];
    let mut out = vec![0.0; layout.n];
    let start = Instant::now();
    backend.run(layout.n, &mut staged, |j| j, |range, slice| {
        for (v, j) in slice.iter_mut().zip(range) {
            let record = &layout.records[j * stride..(j + 1) * stride];
            let count = record_count(layout, record, j)?;
            let x = [record[0], record[1]];
            let mut acc = 0.0;
            for s in record[HEADER_SLOTS..HEADER_SLOTS + 3 * count].chunks_exact(3) {
                acc += pair_potential(x, [s[0], s[1]], s[2], cfg);
            }
            *v = acc;
        }
        Ok(())
    })?;
    for (&t, &v) in layout.record_targets.iter().zip(&staged) {
        out[t as usize] = v;
    }
    Ok(NearFieldResult { tgt_potentials: out, wall_time: start.elapsed(), work_items: layout.n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executors::run_baseline;
    use crate::geometry::{build_tree, PointSet};
    use crate::layouts::{build_repetition, encode_count};

    #[test]
    fn matches_baseline_bitwise() {
        let p = PointSet::generate(2000, 5).unwrap();
        let tree = build_tree(&p, 15, 3).unwrap();
        let cfg = KernelConfig::default();
        let base = run_baseline(&tree, &p, &cfg);
        let layout = build_repetition(&tree, &p);
        for width in [1, 4] {
            let got = run_repetition(&layout, &cfg, &Backend::threads(width)).unwrap();
            assert_eq!(got.tgt_potentials, base.tgt_potentials);
            assert_eq!(got.work_items, 2000);
        }
    }

    #[test]
    fn zero_count_record_gives_zero() {
        let p = PointSet::generate(50, 1).unwrap();
        let tree = build_tree(&p, 15, 3).unwrap();
        let mut layout = build_repetition(&tree, &p);
        let s = layout.stride;
        let r = layout.records_by_target()[7];
        layout.records[r * s + 2] = encode_count(0);
        let out = run_repetition(&layout, &KernelConfig::default(), &Backend::sequential()).unwrap();
        assert_eq!(out.tgt_potentials[7], 0.0);
    }

    #[test]
    fn permuted_records_permute_output() {
        let p = PointSet::generate(300, 8).unwrap();
        let tree = build_tree(&p, 10, 3).unwrap();
        let layout = build_repetition(&tree, &p);
        let cfg = KernelConfig::default();
        let be = Backend::sequential();
        let original = run_repetition(&layout, &cfg, &be).unwrap().tgt_potentials;
        let s = layout.stride;
        let perm: Vec<usize> = (0..300).rev().collect();
        let mut shuffled = layout.clone();
        for (dst, &src) in perm.iter().enumerate() {
            shuffled.records[dst * s..(dst + 1) * s].copy_from_slice(layout.record(src));
            shuffled.record_targets[dst] = layout.record_targets[src];
        }
        let permuted = run_repetition(&shuffled, &cfg, &be).unwrap().tgt_potentials;
        assert_eq!(permuted, original);

        // Moving records without their targets moves the results with them.
        let mut relabeled = shuffled.clone();
        relabeled.record_targets = layout.record_targets.clone();
        let moved = run_repetition(&relabeled, &cfg, &be).unwrap().tgt_potentials;
        for (dst, &src) in perm.iter().enumerate() {
            let (a, b) = (layout.record_targets[dst] as usize, layout.record_targets[src] as usize);
            assert_eq!(moved[a].to_bits(), original[b].to_bits());
        }
    }

    #[test]
    fn oversized_count_is_corrupt() {
        let p = PointSet::generate(40, 1).unwrap();
        let tree = build_tree(&p, 15, 3).unwrap();
        let mut layout = build_repetition(&tree, &p);
        layout.records[2] = encode_count(136);
        let err = run_repetition(&layout, &KernelConfig::default(), &Backend::threads(2));
        assert!(matches!(err, Err(Error::LayoutCorrupt(_))));
        let mut dup = build_repetition(&tree, &p);
        dup.record_targets[1] = dup.record_targets[0];
        assert!(matches!(run_repetition(&dup, &KernelConfig::default(), &Backend::sequential()), Err(Error::LayoutCorrupt(_))));
        layout.records[2] = 1.5;
        assert!(run_repetition(&layout, &KernelConfig::default(), &Backend::sequential()).is_err());
    }
}
