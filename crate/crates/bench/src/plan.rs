use nearfield::geometry::DEFAULT_L_START;

/// Default clustering threshold of every plan.
pub const DEFAULT_CT: usize = 15;
/// Smallest N a scaled plan may request.
pub const MIN_SCALED_N: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    CollectSweep,
    KernelSweep,
    Grid,
    Custom,
}

/// One experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanEntry {
    pub n: usize,
    pub ct: usize,
    pub l_start: u32,
    /// Build the tree at exactly this level instead of searching upward
    /// from `l_start`.
    pub fixed_level: Option<u32>,
    pub i: i32,
}

impl PlanEntry {
    pub fn sweep(n: usize, ct: usize) -> Self {
        Self { n, ct, l_start: DEFAULT_L_START, fixed_level: None, i: 0 }
    }

    /// Level reported in output rows: the fixed level when there is one.
    pub fn row_level(&self) -> Option<u32> {
        self.fixed_level
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub kind: PlanKind,
    pub entries: Vec<PlanEntry>,
    pub repeats: usize,
    pub seed: u64,
    pub backend_width: usize,
}

impl SweepPlan {
    pub fn n_values(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.n).collect()
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.repeats = repeats.max(1);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_backend_width(mut self, width: usize) -> Self {
        self.backend_width = width.max(1);
        self
    }
}

/// `n * scale`, floored, and never below [`MIN_SCALED_N`].
pub fn scale_n(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).floor() as usize).max(MIN_SCALED_N)
}

fn sweep(kind: PlanKind, ns: impl Iterator<Item = usize>, scale: f64, repeats: usize) -> SweepPlan {
    SweepPlan {
        kind,
        entries: ns.map(|n| PlanEntry::sweep(scale_n(n, scale), DEFAULT_CT)).collect(),
        repeats,
        seed: 0,
        backend_width: 1,
    }
}

/// N from 5,000 to 100,000 in steps of 5,000, then to 350,000 in steps of
/// 50,000; 20 repeats.
pub fn plan_collect_sweep(scale: f64) -> SweepPlan {
    let ns = (1..=20).map(|k| 5_000 * k).chain((3..=7).map(|k| 50_000 * k));
    sweep(PlanKind::CollectSweep, ns, scale, 20)
}

/// N from 1,000 to 100,000 in steps of 1,000, then to 1,000,000 in steps
/// of 50,000; 20 repeats.
pub fn plan_kernel_sweep(scale: f64) -> SweepPlan {
    let ns = (1..=100).map(|k| 1_000 * k).chain((3..=20).map(|k| 50_000 * k));
    sweep(PlanKind::KernelSweep, ns, scale, 20)
}

pub const GRID_LEVELS: std::ops::RangeInclusive<u32> = 4..=11;
pub const GRID_DELTAS: std::ops::RangeInclusive<i32> = -3..=3;

/// Every `(L, i)` cell with `N = 4^L` built at level `L` and adjusted by `i`.
/// `scale` multiplies nothing here since `N` is tied to `L`; restrict the
/// grid with `levels` and `deltas` instead.
pub fn plan_grid(levels: impl IntoIterator<Item = u32>, deltas: impl IntoIterator<Item = i32> + Clone) -> SweepPlan {
    let mut entries = Vec::new();
    for l in levels {
        for i in deltas.clone() {
            entries.push(PlanEntry { n: 4usize.pow(l), ct: DEFAULT_CT, l_start: l, fixed_level: Some(l), i });
        }
    }
    SweepPlan { kind: PlanKind::Grid, entries, repeats: 1, seed: 0, backend_width: 1 }
}
