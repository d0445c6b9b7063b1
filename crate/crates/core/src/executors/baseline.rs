use std::time::Instant;

use crate::geometry::{PointSet, QuadTree};
use crate::kernel::{pair_potential, KernelConfig};

use super::NearFieldResult;

/// Sequential reference: traverse boxes in Morton order and, for every
/// target in a box, sum the kernel over all sources of its E1 neighborhood.
pub fn run_baseline(tree: &QuadTree, points: &PointSet, cfg: &KernelConfig) -> NearFieldResult {
    let mut out = vec![0.0; points.len()];
    let src = points.sources();
    let q = points.potentials();
    let tgt = points.targets();
    let start = Instant::now();
    for k in 0..tree.box_count() {
        let targets = tree.box_targets(k);
        if targets.is_empty() {
            continue;
        }
        let neighbors = tree.neighbors(k);
        for &j in targets {
            let x = tgt[j as usize];
            let mut acc = 0.0;
            for &nb in &neighbors {
                for &s in tree.box_sources(nb as usize) {
                    acc += pair_potential(x, src[s as usize], q[s as usize], cfg);
                }
            }
            out[j as usize] = acc;
        }
    }
    NearFieldResult { tgt_potentials: out, wall_time: start.elapsed(), work_items: 1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_single_pair_is_zero() {
        let p = PointSet::from_parts(vec![[0.3, 0.3]], vec![[0.3, 0.3]], vec![1.0]).unwrap();
        let tree = QuadTree::at_level(&p, 15, 3).unwrap();
        assert_eq!(run_baseline(&tree, &p, &KernelConfig::default()).tgt_potentials, vec![0.0]);
    }

    #[test]
    fn single_pair_hand_value() {
        let r = (-1.0f64).exp();
        let p = PointSet::from_parts(vec![[0.5, 0.5 + r]], vec![[0.5, 0.5]], vec![1.0]).unwrap();
        let tree = QuadTree::at_level(&p, 15, 1).unwrap();
        let v = run_baseline(&tree, &p, &KernelConfig::default()).tgt_potentials[0];
        assert!((v - 1.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn far_sources_are_ignored() {
        // same box at level 1 but different, non-adjacent boxes at level 3
        let p = PointSet::from_parts(
            vec![[0.05, 0.05], [0.95, 0.95]],
            vec![[0.06, 0.05], [0.3, 0.6]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let tree = QuadTree::at_level(&p, 15, 3).unwrap();
        let out = run_baseline(&tree, &p, &KernelConfig::default()).tgt_potentials;
        assert!((out[0] - -(0.01f64.ln())).abs() < 1e-12);
        assert_eq!(out[1], 0.0);
    }
}
