use nearfield::executors::{run_baseline, run_indexing, run_repetition, Backend};
use nearfield::geometry::{build_tree, grid_side, PointSet};
use nearfield::kernel::KernelConfig;
use nearfield::layouts::{build_indexing, build_repetition};

pub const REL_TOL: f64 = 1e-9;
pub const ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instance {
    pub n: usize,
    pub ct: usize,
    pub seed: u64,
}

/// `count` instances cycling through N ∈ {100, 1000, 10000} and CT ∈ {4, 15}.
pub fn instances(count: usize, seed: u64) -> Vec<Instance> {
    const NS: [usize; 3] = [100, 1_000, 10_000];
    const CTS: [usize; 2] = [4, 15];
    (0..count)
        .map(|k| Instance { n: NS[k % 3], ct: CTS[(k / 3) % 2], seed: seed.wrapping_add(k as u64 * 7919) })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub instances: usize,
    pub compared: usize,
    pub failures: Vec<String>,
    /// Largest `|a - b| / max(|a|, |b|)` seen between any two evaluators.
    pub max_rel_diff: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.instances > 0
    }
}

fn within(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= ABS_TOL || diff <= REL_TOL * a.abs().max(b.abs())
}

/// Direct double loop over every source, keeping those whose leaf cell is
/// adjacent to the target's. Independent of the tree and layouts.
pub fn brute_force(points: &PointSet, level: u32, cfg: &KernelConfig) -> Vec<f64> {
    let side = grid_side(level) as f64;
    let cell = |c: f64| (c * side).floor().min(side - 1.0);
    points
        .targets()
        .iter()
        .map(|t| {
            let (tx, ty) = (cell(t[0]), cell(t[1]));
            let mut acc = 0.0;
            for (s, q) in points.sources().iter().zip(points.potentials()) {
                if (cell(s[0]) - tx).abs() > 1.0 || (cell(s[1]) - ty).abs() > 1.0 {
                    continue;
                }
                let r = ((t[0] - s[0]).powi(2) + (t[1] - s[1]).powi(2)).sqrt();
                if r >= cfg.epsilon {
                    acc -= q * r.ln();
                }
            }
            acc
        })
        .collect()
}

/// Check baseline, indexing and repetition against each other, and the
/// baseline against [`brute_force`], on every instance.
pub fn verify(instances: &[Instance], backend: &Backend, cfg: &KernelConfig) -> VerifyReport {
    let mut report = VerifyReport { instances: instances.len(), ..Default::default() };
    for inst in instances {
        let tag = format!("n={} ct={} seed={}", inst.n, inst.ct, inst.seed);
        let run = || -> nearfield::Result<[Vec<f64>; 4]> {
            let p = PointSet::generate(inst.n, inst.seed)?;
            let tree = build_tree(&p, inst.ct, 3)?;
            let base = run_baseline(&tree, &p, cfg).tgt_potentials;
            let idx = run_indexing(&build_indexing(&tree, &p), cfg, backend)?.tgt_potentials;
            let rep = run_repetition(&build_repetition(&tree, &p), cfg, backend)?.tgt_potentials;
            Ok([brute_force(&p, tree.level(), cfg), base, idx, rep])
        };
        let [oracle, base, idx, rep] = match run() {
            Ok(v) => v,
            Err(e) => {
                report.failures.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let pairs = [("baseline/oracle", &base, &oracle), ("indexing/baseline", &idx, &base), ("repetition/baseline", &rep, &base)];
        for (what, a, b) in pairs {
            let mut bad = 0;
            for (&x, &y) in a.iter().zip(b.iter()) {
                report.compared += 1;
                let scale = x.abs().max(y.abs());
                if scale > 0.0 {
                    report.max_rel_diff = report.max_rel_diff.max((x - y).abs() / scale);
                }
                if !within(x, y) {
                    bad += 1;
                }
            }
            if a.len() != b.len() || bad > 0 {
                report.failures.push(format!("{tag}: {what} disagrees at {bad} targets"));
            }
        }
    }
    report
}
