use std::time::Duration;

use nearfield::calibration::{ExperimentRecord, Measured};
use nearfield::executors::{run_baseline, run_indexing, run_repetition, Backend, LayoutRef, Method};
use nearfield::geometry::{adjust_height, build_tree, PointSet, QuadTree, TreeStats};
use nearfield::kernel::KernelConfig;
use nearfield::layouts::{build_indexing, build_repetition};
use nearfield::locality::{miss_ratio_of, MissRatio, DEFAULT_BANK_BYTES};
use nearfield::model::{self, ModelCoefficients, ProblemShape};
use nearfield::Error;

use crate::plan::PlanEntry;

/// Limits beyond which an experiment is skipped instead of run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_n: usize,
    pub max_level: u32,
    /// Largest repetition layout to allocate.
    pub max_layout_bytes: u64,
    /// Largest number of near-field pair evaluations per executor run.
    pub max_pairs: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_n: 1 << 20, max_level: 12, max_layout_bytes: 1 << 30, max_pairs: 2_000_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub repeats: usize,
    pub backend: Backend,
    pub kernel: KernelConfig,
    pub budget: Budget,
    /// Replay both executors' reads to measure the bank miss ratio.
    pub miss_ratio: bool,
    pub bank_bytes: u64,
    pub coefficients: ModelCoefficients,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            repeats: 1,
            backend: Backend::sequential(),
            kernel: KernelConfig::default(),
            budget: Budget::default(),
            miss_ratio: true,
            bank_bytes: DEFAULT_BANK_BYTES,
            coefficients: ModelCoefficients::published(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warmup(Method),
    Baseline1,
    Collect(Method),
    Kernel(Method),
    Baseline2,
}

/// One protocol step, with the tree statistics the step's method observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditEvent {
    pub repeat: Option<usize>,
    pub phase: Phase,
    pub level: u32,
    pub t: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub x_collect: f64,
    pub x_kernel: f64,
    pub x_total: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub entry: PlanEntry,
    /// Level the tree was constructed at, before any height adjustment.
    pub built_level: u32,
    /// Statistics of the evaluated (adjusted) tree.
    pub stats: TreeStats,
    pub record: ExperimentRecord,
    pub prediction: Prediction,
    pub miss_idx: Option<MissRatio>,
    pub miss_rep: Option<MissRatio>,
    pub audit: Vec<AuditEvent>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Done(Box<ExperimentOutput>),
    Skipped { entry: PlanEntry, reason: String },
}

fn skipped(entry: &PlanEntry, reason: String) -> Outcome {
    log::warn!("skipping n={} ct={} l={:?} i={}: {reason}", entry.n, entry.ct, entry.fixed_level, entry.i);
    Outcome::Skipped { entry: *entry, reason }
}

/// Near-field pair evaluations of one executor run over `tree`.
pub fn pair_count(tree: &QuadTree) -> u64 {
    (0..tree.box_count())
        .map(|k| {
            let targets = tree.box_targets(k).len() as u64;
            if targets == 0 {
                return 0;
            }
            let sources: usize = tree.neighbors(k).into_iter().map(|nb| tree.box_sources(nb as usize).len()).sum();
            targets * sources as u64
        })
        .sum()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[derive(Default)]
struct Totals {
    collect_idx: f64,
    collect_rep: f64,
    kernel_idx: f64,
    kernel_rep: f64,
    base1: f64,
    base2: f64,
}

/// Run one experiment: build the tree once, warm both parallel executors
/// up, then per repeat time baseline, indexing (collection and kernel),
/// baseline again, repetition (collection and kernel). Times are averaged
/// over repeats and turned into speedups with the two-baseline ratio.
pub fn run_experiment(entry: &PlanEntry, seed: u64, opts: &RunOptions) -> nearfield::Result<Outcome> {
    let budget = &opts.budget;
    if entry.n > budget.max_n {
        return Ok(skipped(entry, format!("N = {} exceeds the budget of {}", entry.n, budget.max_n)));
    }
    if let Some(l) = entry.fixed_level {
        let target = l as i64 + entry.i as i64;
        if target > budget.max_level as i64 {
            return Ok(skipped(entry, format!("level {l} + ({}) exceeds the budget of {}", entry.i, budget.max_level)));
        }
    }

    let points = PointSet::generate(entry.n, seed)?;
    let built = match entry.fixed_level {
        Some(l) => QuadTree::at_level(&points, entry.ct, l),
        None => build_tree(&points, entry.ct, entry.l_start),
    };
    let built = match built {
        Ok(t) => t,
        Err(e @ Error::ConstructionFailure { .. }) => return Ok(skipped(entry, e.to_string())),
        Err(e) => return Err(e),
    };
    let built_level = built.level();
    let tree = if entry.i == 0 {
        built
    } else {
        if built_level as i64 + entry.i as i64 > budget.max_level as i64 {
            return Ok(skipped(entry, format!("adjusted level {} exceeds the budget", built_level as i64 + entry.i as i64)));
        }
        match adjust_height(&built, &points, entry.i) {
            Ok(t) => t,
            Err(e) => return Ok(skipped(entry, e.to_string())),
        }
    };
    let stats = tree.stats();
    let capacity = entry.ct.max(stats.t) as u64;
    let rep_bytes = 8 * entry.n as u64 * (3 + 27 * capacity);
    if rep_bytes > budget.max_layout_bytes {
        return Ok(skipped(entry, format!("repetition layout of {rep_bytes} bytes exceeds the budget of {}", budget.max_layout_bytes)));
    }
    let pairs = pair_count(&tree);
    if pairs > budget.max_pairs {
        return Ok(skipped(entry, format!("{pairs} pair evaluations exceed the budget of {}", budget.max_pairs)));
    }

    let cfg = &opts.kernel;
    let be = &opts.backend;
    let mut audit = Vec::new();
    let mut log_step = |repeat, phase, level, t, n| audit.push(AuditEvent { repeat, phase, level, t, n });

    let idx = build_indexing(&tree, &points);
    run_indexing(&idx, cfg, be)?;
    log_step(None, Phase::Warmup(Method::Indexing), idx.level, idx.t, idx.n);
    drop(idx);
    let rep = build_repetition(&tree, &points);
    run_repetition(&rep, cfg, be)?;
    log_step(None, Phase::Warmup(Method::Repetition), rep.level, rep.t, rep.n);
    drop(rep);

    let repeats = opts.repeats.max(1);
    let mut sum = Totals::default();
    let mut bytes = (0, 0);
    for r in 0..repeats {
        let base = run_baseline(&tree, &points, cfg);
        sum.base1 += secs(base.wall_time);
        log_step(Some(r), Phase::Baseline1, tree.level(), stats.t, tree.n());

        let idx = build_indexing(&tree, &points);
        sum.collect_idx += secs(idx.build_time);
        log_step(Some(r), Phase::Collect(Method::Indexing), idx.level, idx.t, idx.n);
        let out = run_indexing(&idx, cfg, be)?;
        sum.kernel_idx += secs(out.wall_time);
        log_step(Some(r), Phase::Kernel(Method::Indexing), idx.level, idx.t, idx.n);
        bytes.0 = idx.reported_bytes;
        drop(idx);

        let base = run_baseline(&tree, &points, cfg);
        sum.base2 += secs(base.wall_time);
        log_step(Some(r), Phase::Baseline2, tree.level(), stats.t, tree.n());

        let rep = build_repetition(&tree, &points);
        sum.collect_rep += secs(rep.build_time);
        log_step(Some(r), Phase::Collect(Method::Repetition), rep.level, rep.t, rep.n);
        let out = run_repetition(&rep, cfg, be)?;
        sum.kernel_rep += secs(out.wall_time);
        log_step(Some(r), Phase::Kernel(Method::Repetition), rep.level, rep.t, rep.n);
        bytes.1 = rep.reported_bytes;
    }

    let k = repeats as f64;
    let measured = Measured {
        collect_time_idx: sum.collect_idx / k,
        collect_time_rep: sum.collect_rep / k,
        kernel_time_idx: sum.kernel_idx / k,
        kernel_time_rep: sum.kernel_rep / k,
        base_time_1: sum.base1 / k,
        base_time_2: sum.base2 / k,
        bytes_idx: bytes.0,
        bytes_rep: bytes.1,
    };
    let shape = ProblemShape::from_stats(&stats, entry.ct as u64).with_height_delta(entry.i);
    let record = ExperimentRecord::new(shape, measured)?;

    let (miss_idx, miss_rep) = if opts.miss_ratio {
        let idx = build_indexing(&tree, &points);
        let mi = miss_ratio_of(LayoutRef::Indexing(&idx), opts.bank_bytes)?;
        drop(idx);
        let rep = build_repetition(&tree, &points);
        let mr = miss_ratio_of(LayoutRef::Repetition(&rep), opts.bank_bytes)?;
        (Some(mi), Some(mr))
    } else {
        (None, None)
    };

    let c = &opts.coefficients;
    let prediction = Prediction {
        x_collect: model::speedup_collect(c, &shape),
        x_kernel: model::speedup_kernel(c, &shape),
        x_total: model::speedup_total(c, &shape),
    };
    Ok(Outcome::Done(Box::new(ExperimentOutput {
        entry: *entry,
        built_level,
        stats,
        record,
        prediction,
        miss_idx,
        miss_rep,
        audit,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{plan_grid, PlanEntry};

    fn done(o: Outcome) -> ExperimentOutput {
        match o {
            Outcome::Done(out) => *out,
            Outcome::Skipped { reason, .. } => panic!("skipped: {reason}"),
        }
    }

    #[test]
    fn protocol_order_and_tree_reuse() {
        let opts = RunOptions { repeats: 3, ..Default::default() };
        let out = done(run_experiment(&PlanEntry::sweep(3000, 15), 1, &opts).unwrap());
        let phases: Vec<Phase> = out.audit.iter().map(|e| e.phase).collect();
        let mut expect = vec![Phase::Warmup(Method::Indexing), Phase::Warmup(Method::Repetition)];
        for _ in 0..3 {
            expect.extend([
                Phase::Baseline1,
                Phase::Collect(Method::Indexing),
                Phase::Kernel(Method::Indexing),
                Phase::Baseline2,
                Phase::Collect(Method::Repetition),
                Phase::Kernel(Method::Repetition),
            ]);
        }
        assert_eq!(phases, expect);
        for e in &out.audit {
            assert_eq!((e.level, e.t, e.n), (out.stats.l, out.stats.t, out.stats.n));
        }
    }

    #[test]
    fn ratios_recompute_from_raw_times() {
        let out = done(run_experiment(&PlanEntry::sweep(2000, 15), 2, &RunOptions::default()).unwrap());
        let m = out.record.measured;
        let again = m.derive();
        assert_eq!(again, out.record.derived);
        assert!(m.collect_time_idx > 0.0 && m.kernel_time_rep > 0.0 && m.base_time_1 > 0.0);
        assert_eq!(m.bytes_rep, 8 * 2000 * (3 + 27 * 15));
        let mi = out.miss_idx.unwrap();
        let mr = out.miss_rep.unwrap();
        assert!(mi.per_item() > mr.per_item());
    }

    #[test]
    fn budget_skips_carry_reasons() {
        let grid = plan_grid([11], [-3, 2]);
        for e in &grid.entries {
            match run_experiment(e, 0, &RunOptions::default()).unwrap() {
                Outcome::Skipped { reason, .. } => assert!(!reason.is_empty()),
                Outcome::Done(_) => panic!("cell should be over budget"),
            }
        }
        let tight = RunOptions { budget: Budget { max_layout_bytes: 1000, ..Default::default() }, ..Default::default() };
        assert!(matches!(run_experiment(&PlanEntry::sweep(500, 15), 0, &tight).unwrap(), Outcome::Skipped { .. }));
    }

    #[test]
    fn grid_cell_adjusts_height() {
        let entry = plan_grid([5], [1]).entries[0];
        let out = done(run_experiment(&entry, 3, &RunOptions::default()).unwrap());
        assert_eq!(out.built_level, 5);
        assert_eq!(out.stats.l, 6);
        assert_eq!(out.record.shape.i, 1);
        assert_eq!(out.record.shape.l, 6);
    }
}
