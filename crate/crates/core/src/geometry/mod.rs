//! Point sets, Morton indexing and the uniform leaf-level quadtree.
//!
//! Boxes live on the unit square. A tree of level `L` has `4^(L-1)` leaf
//! boxes laid out on a `2^(L-1)` by `2^(L-1)` grid, and box `k` is the box
//! whose Morton code is `k`.

mod morton;
mod points;
mod tree;

pub use morton::{grid_side, morton_decode, morton_encode, neighbors_e1, Neighbors, MAX_LEVEL};
pub use points::PointSet;
pub use tree::{adjust_height, build_tree, build_tree_capped, QuadTree, TreeStats, DEFAULT_L_START};
