use crate::error::{Error, Result};

use super::morton::{encode_unchecked, grid_side, neighbors_e1, Neighbors, MAX_LEVEL};
use super::points::PointSet;

/// Level at which the clustering-threshold loop starts by default.
pub const DEFAULT_L_START: u32 = 3;

/// Leaf level of a uniform quadtree: `4^(L-1)` boxes in Morton order, each
/// holding the indices of the sources and targets it contains.
///
/// Membership is stored as two compressed index lists (offsets plus members),
/// so box `k`'s sources are `src_members[src_offsets[k]..src_offsets[k+1]]`
/// in ascending point index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadTree {
    level: u32,
    ct: usize,
    src_offsets: Vec<u32>,
    src_members: Vec<u32>,
    tgt_offsets: Vec<u32>,
    tgt_members: Vec<u32>,
}

/// Occupancy statistics of a tree.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TreeStats {
    /// Largest per-box count, taken over sources and targets.
    pub t: usize,
    /// Average points per box, `N / 4^(L-1)`.
    pub d: f64,
    pub b_count: usize,
    pub l: u32,
    pub n: usize,
}

// Cell codes at the deepest level. A code at level L is this code shifted
// right by 2 (MAX_LEVEL - L), since the floors nest.
fn deepest_codes(points: &[[f64; 2]]) -> Vec<u64> {
    let side = grid_side(MAX_LEVEL);
    points
        .iter()
        .map(|&[x, y]| encode_unchecked(cell_index(x, side), cell_index(y, side)))
        .collect()
}

/// Half-open cells `[k/side, (k+1)/side)`, closed at the upper domain edge.
#[inline]
fn cell_index(c: f64, side: u32) -> u32 {
    ((c * f64::from(side)) as u32).min(side - 1)
}

#[inline]
fn shift_for(level: u32) -> u32 {
    2 * (MAX_LEVEL - level)
}

fn max_run(sorted_codes: &[u64], shift: u32) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev = None;
    for &c in sorted_codes {
        let c = c >> shift;
        if Some(c) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(c);
        }
        best = best.max(run);
    }
    best
}

// Stable counting sort of point indices into boxes.
fn bucket(codes: &[u64], level: u32) -> (Vec<u32>, Vec<u32>) {
    let boxes = 1usize << (2 * (level - 1));
    let shift = shift_for(level);
    let mut offsets = vec![0u32; boxes + 1];
    for &c in codes {
        offsets[(c >> shift) as usize + 1] += 1;
    }
    for k in 0..boxes {
        offsets[k + 1] += offsets[k];
    }
    let mut cursor = offsets.clone();
    let mut members = vec![0u32; codes.len()];
    for (i, &c) in codes.iter().enumerate() {
        let slot = &mut cursor[(c >> shift) as usize];
        members[*slot as usize] = i as u32;
        *slot += 1;
    }
    (offsets, members)
}

fn check_level(level: u32) -> Result<()> {
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "tree level {level} outside 1..={MAX_LEVEL}"
        )));
    }
    Ok(())
}

impl QuadTree {
    /// Assign points to the leaf boxes of a tree at exactly `level`, without
    /// checking the clustering threshold.
    pub fn at_level(points: &PointSet, ct: usize, level: u32) -> Result<Self> {
        check_level(level)?;
        let src = deepest_codes(points.sources());
        let tgt = deepest_codes(points.targets());
        Ok(Self::from_codes(&src, &tgt, ct, level))
    }

    fn from_codes(src: &[u64], tgt: &[u64], ct: usize, level: u32) -> Self {
        let (src_offsets, src_members) = bucket(src, level);
        let (tgt_offsets, tgt_members) = bucket(tgt, level);
        Self { level, ct, src_offsets, src_members, tgt_offsets, tgt_members }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Clustering threshold the tree was built for.
    pub fn ct(&self) -> usize {
        self.ct
    }

    pub fn n(&self) -> usize {
        self.src_members.len()
    }

    pub fn box_count(&self) -> usize {
        self.src_offsets.len() - 1
    }

    pub fn box_sources(&self, k: usize) -> &[u32] {
        &self.src_members[self.src_offsets[k] as usize..self.src_offsets[k + 1] as usize]
    }

    pub fn box_targets(&self, k: usize) -> &[u32] {
        &self.tgt_members[self.tgt_offsets[k] as usize..self.tgt_offsets[k + 1] as usize]
    }

    /// Per-box start offsets into the concatenated target list, `B + 1` entries.
    pub fn target_offsets(&self) -> &[u32] {
        &self.tgt_offsets
    }

    /// Target indices of all boxes, concatenated in Morton order.
    pub fn target_members(&self) -> &[u32] {
        &self.tgt_members
    }

    pub fn neighbors(&self, k: usize) -> Neighbors {
        neighbors_e1(k as u64, self.level)
    }

    /// True when no box holds more than CT sources or CT targets.
    pub fn satisfies_ct(&self) -> bool {
        self.stats().t <= self.ct
    }

    pub fn stats(&self) -> TreeStats {
        let widest = |offsets: &[u32]| {
            offsets.windows(2).map(|w| (w[1] - w[0]) as usize).max().unwrap_or(0)
        };
        let t = widest(&self.src_offsets).max(widest(&self.tgt_offsets));
        let b_count = self.box_count();
        TreeStats {
            t,
            d: self.n() as f64 / b_count as f64,
            b_count,
            l: self.level,
            n: self.n(),
        }
    }
}

/// Build the shallowest tree, starting at `l_start`, whose boxes all hold at
/// most `ct` sources and `ct` targets. Gives up past [`MAX_LEVEL`].
pub fn build_tree(points: &PointSet, ct: usize, l_start: u32) -> Result<QuadTree> {
    build_tree_capped(points, ct, l_start, MAX_LEVEL)
}

pub fn build_tree_capped(
    points: &PointSet,
    ct: usize,
    l_start: u32,
    level_cap: u32,
) -> Result<QuadTree> {
    if ct == 0 {
        return Err(Error::InvalidArgument("clustering threshold must be at least 1".into()));
    }
    check_level(l_start)?;
    check_level(level_cap)?;
    if l_start > level_cap {
        return Err(Error::InvalidArgument(format!(
            "start level {l_start} above the level cap {level_cap}"
        )));
    }
    let src = deepest_codes(points.sources());
    let tgt = deepest_codes(points.targets());
    let mut src_sorted = src.clone();
    let mut tgt_sorted = tgt.clone();
    src_sorted.sort_unstable();
    tgt_sorted.sort_unstable();

    let mut max_count = 0;
    for level in l_start..=level_cap {
        let shift = shift_for(level);
        max_count = max_run(&src_sorted, shift).max(max_run(&tgt_sorted, shift));
        if max_count <= ct {
            log::debug!("CT={ct} satisfied at level {level} (t = {max_count})");
            return Ok(QuadTree::from_codes(&src, &tgt, ct, level));
        }
    }
    Err(Error::ConstructionFailure { ct, level_cap, max_count })
}

/// Rebuild the leaf level at `L + delta` from the point set. The clustering
/// threshold is not re-checked, so lowering the level may overfill boxes.
pub fn adjust_height(tree: &QuadTree, points: &PointSet, delta: i32) -> Result<QuadTree> {
    if points.len() != tree.n() {
        return Err(Error::InvalidArgument(format!(
            "tree holds {} points but the point set has {}",
            tree.n(),
            points.len()
        )));
    }
    let level = i64::from(tree.level()) + i64::from(delta);
    if level < 1 {
        return Err(Error::InvalidArgument(format!(
            "adjusted level {} + ({delta}) is below 1",
            tree.level()
        )));
    }
    let level = u32::try_from(level).unwrap_or(u32::MAX);
    QuadTree::at_level(points, tree.ct(), level)
}
