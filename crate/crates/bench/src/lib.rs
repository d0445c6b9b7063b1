//! Experiment harness for the near-field layout study: sweep plans, the
//! timing protocol, oracle verification and the CSV result table.

pub mod experiment;
pub mod plan;
pub mod table;
pub mod verify;

use std::io::Write;

use experiment::{run_experiment, Outcome, RunOptions};
use plan::SweepPlan;

/// Run every plan entry in order. Entry `k` uses seed `plan.seed + k`.
/// Skip reasons are written to `skips` as `n,ct,l,i,reason` lines.
pub fn run_plan(plan: &SweepPlan, opts: &RunOptions, skips: &mut dyn Write) -> anyhow::Result<Vec<Outcome>> {
    let mut out = Vec::with_capacity(plan.entries.len());
    for (k, entry) in plan.entries.iter().enumerate() {
        log::info!("experiment {}/{}: n={} i={}", k + 1, plan.entries.len(), entry.n, entry.i);
        let outcome = run_experiment(entry, plan.seed.wrapping_add(k as u64), opts)?;
        if let Outcome::Skipped { entry, reason } = &outcome {
            let l = entry.fixed_level.unwrap_or(entry.l_start);
            writeln!(skips, "{},{},{},{},\"{}\"", entry.n, entry.ct, l, entry.i, reason.replace('"', "'"))?;
        }
        out.push(outcome);
    }
    Ok(out)
}
