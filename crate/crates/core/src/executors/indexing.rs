use std::time::Instant;

use crate::error::{Error, Result};
use crate::kernel::{pair_potential, KernelConfig};
use crate::layouts::IndexingLayout;

use super::{Backend, NearFieldResult};

fn corrupt(msg: String) -> Error {
    Error::LayoutCorrupt(msg)
}

fn check_offsets(name: &str, offsets: &[i32], boxes: usize, total: usize) -> Result<()> {
    if offsets.len() != boxes + 1 {
        return Err(corrupt(format!("{name} has {} entries, expected {}", offsets.len(), boxes + 1)));
    }
    if offsets[0] != 0 {
        return Err(corrupt(format!("{name}[0] = {}", offsets[0])));
    }
    if let Some(k) = offsets.windows(2).position(|w| w[1] < w[0]) {
        return Err(corrupt(format!("{name} decreases at box {k}")));
    }
    if offsets[boxes] as usize != total {
        return Err(corrupt(format!("{name} ends at {} but the index array holds {total}", offsets[boxes])));
    }
    Ok(())
}

/// Structural checks an executor needs before trusting the index arrays.
pub(crate) fn validate(layout: &IndexingLayout) -> Result<()> {
    let n = layout.n;
    if layout.src_coords.len() != 2 * n || layout.tgt_coords.len() != 2 * n || layout.src_potentials.len() != n {
        return Err(corrupt(format!("coordinate or potential arrays do not match N = {n}")));
    }
    if layout.tgt_offsets.is_empty() {
        return Err(corrupt("tgt_offsets is empty".into()));
    }
    let boxes = layout.tgt_offsets.len() - 1;
    check_offsets("tgt_offsets", &layout.tgt_offsets, boxes, layout.tgt_idx.len())?;
    check_offsets("nei_src_offsets", &layout.nei_src_offsets, boxes, layout.nei_src_idx.len())?;
    if layout.tgt_idx.len() != n {
        return Err(corrupt(format!("tgt_idx holds {} entries for N = {n}", layout.tgt_idx.len())));
    }
    let mut seen = vec![false; n];
    for &i in &layout.tgt_idx {
        let slot = usize::try_from(i).ok().and_then(|i| seen.get_mut(i));
        match slot {
            Some(s) if !*s => *s = true,
            _ => return Err(corrupt(format!("target index {i} out of range or repeated"))),
        }
    }
    if let Some(&i) = layout.nei_src_idx.iter().find(|&&i| i < 0 || i as usize >= n) {
        return Err(corrupt(format!("source index {i} out of range")));
    }
    Ok(())
}

/// One work item per box. Item `k` reads its target span from
/// `tgt_offsets[k..=k+1]`, its neighborhood span from
/// `nei_src_offsets[k..=k+1]`, and sums the kernel for each target.
///
/// Items write into a box-ordered buffer at their own target span; the
/// buffer is then scattered to target order.
pub fn run_indexing(layout: &IndexingLayout, cfg: &KernelConfig, backend: &Backend) -> Result<NearFieldResult> {
    validate(layout)?;
    let boxes = layout.box_count();
    let mut staged = vec![0.0; layout.n];
    let mut out = vec![0.0; layout.n];
    let tgt_offsets = &layout.tgt_offsets;

    let start = Instant::now();
    backend.run(
        boxes,
        &mut staged,
        |k| tgt_offsets[k] as usize,
        |range, slice| {
            let base = tgt_offsets[range.start] as usize;
            for k in range {
                let (t0, t1) = (tgt_offsets[k] as usize, tgt_offsets[k + 1] as usize);
                if t0 == t1 {
                    continue;
                }
                let (s0, s1) = (layout.nei_src_offsets[k] as usize, layout.nei_src_offsets[k + 1] as usize);
                for p in t0..t1 {
                    let ti = layout.tgt_idx[p] as usize;
                    let x = [layout.tgt_coords[2 * ti], layout.tgt_coords[2 * ti + 1]];
                    let mut acc = 0.0;
                    for &si in &layout.nei_src_idx[s0..s1] {
                        let si = si as usize;
                        let s = [layout.src_coords[2 * si], layout.src_coords[2 * si + 1]];
                        acc += pair_potential(x, s, layout.src_potentials[si], cfg);
                    }
                    slice[p - base] = acc;
                }
            }
            Ok(())
        },
    )?;
    for (&i, &v) in layout.tgt_idx.iter().zip(&staged) {
        out[i as usize] = v;
    }
    Ok(NearFieldResult { tgt_potentials: out, wall_time: start.elapsed(), work_items: boxes })
}
