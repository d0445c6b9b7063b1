//! The 2D electrostatic pair potential `q ln(1/r)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Default minimum separation below which a pair contributes nothing.
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Pairs closer than this are treated as self-interactions and skipped.
    pub epsilon: f64,
    /// Measured cost of one evaluation in seconds, if known.
    pub o1_cost: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, o1_cost: None }
    }
}

impl KernelConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        Self { epsilon, o1_cost: None }
    }
}

/// Potential induced at `target` by a source of strength `q` at `source`.
///
/// Coincident pairs (distance below `cfg.epsilon`) return exactly zero.
#[inline]
pub fn pair_potential(target: [f64; 2], source: [f64; 2], q: f64, cfg: &KernelConfig) -> f64 {
    let dx = target[0] - source[0];
    let dy = target[1] - source[1];
    let r = dx.hypot(dy);
    if r < cfg.epsilon {
        0.0
    } else {
        -q * r.ln()
    }
}

/// Time `samples` kernel evaluations and return the mean cost per call in
/// seconds; usable as the single-evaluation cost in the kernel-time models.
pub fn measure_o1(samples: usize, cfg: &KernelConfig) -> f64 {
    let samples = samples.max(1);
    let mut acc = 0.0;
    let start = Instant::now();
    for i in 0..samples {
        let f = (i % 997) as f64 / 997.0;
        acc += pair_potential([f, 0.5], [0.25, f * 0.5], 1.0, cfg);
    }
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(acc);
    elapsed / samples as f64
}
