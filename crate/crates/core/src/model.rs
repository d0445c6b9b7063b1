//! Closed-form cost, memory, miss-ratio and speedup models for the two
//! near-field layouts.
//!
//! Speedups are always "repetition over indexing": values above 1 mean the
//! repetition layout is faster. `t` and `d` are measured tree statistics;
//! only the repetition memory size uses the capacity `ct`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TreeStats;

/// Data-volume constant of the collection and transfer speedups.
pub const VOLUME_CONSTANT: f64 = 21.6;
/// Kernel speedup constant as published.
pub const KERNEL_CONSTANT: f64 = 55.3;
/// The kernel constant recomputed from its derivation, `4/3 * 44`.
pub const KERNEL_CONSTANT_EXACT: f64 = 4.0 / 3.0 * MISS_RATIO_BOUND;
/// Lower bound numerator of the repetition/indexing miss-ratio quotient.
pub const MISS_RATIO_BOUND: f64 = 44.0;
/// Bytes read per unit of `t` by one indexing work item.
pub const INDEXING_BYTES_PER_T: u64 = 272;
/// Memory bank size in bytes.
pub const DEFAULT_BANK_BYTES: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareParams {
    /// Seconds per memory access in the indexing method.
    pub m_indexing: f64,
    /// Seconds per memory access in the repetition method.
    pub m_repetition: f64,
    /// Seconds per kernel evaluation.
    pub o1: f64,
    pub bank_bytes: u64,
    pub total_cores: u64,
    /// Seconds per neighbor lookup.
    pub find_nei_cost: f64,
}

impl Default for HardwareParams {
    fn default() -> Self {
        Self {
            m_indexing: 1e-9,
            m_repetition: 1e-9,
            o1: 5e-9,
            bank_bytes: DEFAULT_BANK_BYTES,
            total_cores: 640,
            find_nei_cost: 1e-8,
        }
    }
}

impl HardwareParams {
    pub fn validate(&self) -> Result<()> {
        let times = [self.m_indexing, self.m_repetition, self.o1, self.find_nei_cost];
        if times.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.bank_bytes == 0 || self.total_cores == 0 {
            return Err(Error::InvalidArgument(format!("hardware parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_ram: f64,
    pub lambda_gpu: f64,
}

impl ModelCoefficients {
    /// Collection-phase RAM coefficient range reported with the published fit.
    pub const LAMBDA_RAM_RANGE: (f64, f64) = (75.0, 180.0);

    /// The published weights and coefficients.
    pub fn published() -> Self {
        Self { alpha: 0.82, beta: 0.09, gamma: 0.18, lambda_ram: 108.0, lambda_gpu: 640.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.alpha, self.beta, self.gamma];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("weights must be nonnegative: {self:?}")));
        }
        if !(self.lambda_ram > 0.0 && self.lambda_gpu > 0.0) || !self.lambda_ram.is_finite() || !self.lambda_gpu.is_finite() {
            return Err(Error::InvalidArgument(format!("lambdas must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemShape {
    pub n: u64,
    pub ct: u64,
    pub l: u32,
    /// Largest box occupancy.
    pub t: f64,
    /// Mean points per box, `n / 4^(l-1)`.
    pub d: f64,
    /// Height adjustment applied after construction.
    pub i: i32,
}

impl ProblemShape {
    /// Shape with `d` derived from `n` and `l`.
    pub fn new(n: u64, ct: u64, l: u32, t: f64) -> Self {
        Self { n, ct, l, t, d: n as f64 / boxes(l), i: 0 }
    }

    pub fn from_stats(stats: &TreeStats, ct: u64) -> Self {
        Self { n: stats.n as u64, ct, l: stats.l, t: stats.t as f64, d: stats.d, i: 0 }
    }

    pub fn with_height_delta(mut self, i: i32) -> Self {
        self.i = i;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || !(self.t.is_finite() && self.t >= 0.0 && self.d.is_finite() && self.d >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid problem shape: {self:?}")));
        }
        Ok(())
    }
}

/// `4^(l-1)`, the number of boxes at level `l`.
pub fn boxes(l: u32) -> f64 {
    4f64.powi(l as i32 - 1)
}

fn n(shape: &ProblemShape) -> f64 {
    shape.n as f64
}

/// Collection time of the indexing layout: `7mN + 4^(L-1)(m(11+19t) + 3m + find_nei)`.
pub fn collect_time_indexing(shape: &ProblemShape, hw: &HardwareParams) -> f64 {
    let m = hw.m_indexing;
    n(shape) * 7.0 * m + boxes(shape.l) * (m * (11.0 + 19.0 * shape.t) + 3.0 * m + hw.find_nei_cost)
}

/// Collection time of the repetition layout: `4^(L-1)(m + 11tm + 45mt^2 + t find_nei)`.
pub fn collect_time_repetition(shape: &ProblemShape, hw: &HardwareParams) -> f64 {
    let (m, t) = (hw.m_repetition, shape.t);
    boxes(shape.l) * (m + 11.0 * t * m + 45.0 * m * t * t + t * hw.find_nei_cost)
}

/// Indexing layout size, `40N + 4^L(2 + 10t)` bytes.
pub fn memory_indexing(n: u64, l: u32, t: u64) -> u64 {
    crate::layouts::indexing_formula_bytes(n, l, t)
}

/// Repetition layout size, `8N(3 + 27 CT)` bytes.
pub fn memory_repetition(n: u64, ct: u64) -> u64 {
    crate::layouts::repetition_formula_bytes(n, ct)
}

fn memory_indexing_f(shape: &ProblemShape) -> f64 {
    40.0 * n(shape) + 4f64.powi(shape.l as i32) * (2.0 + 10.0 * shape.t)
}

/// Per-thread indexing kernel time, unsimplified:
/// `4m + t(3m + 9t(5m + o1) + m)`.
pub fn kernel_time_indexing_expanded(t: f64, hw: &HardwareParams) -> f64 {
    let m = hw.m_indexing;
    4.0 * m + t * (3.0 * m + 9.0 * t * (5.0 * m + hw.o1) + m)
}

/// Per-thread indexing kernel time, `4m(11.25t^2 + t + 1) + 9t^2 o1`.
pub fn kernel_time_indexing(t: f64, hw: &HardwareParams) -> f64 {
    4.0 * hw.m_indexing * (11.25 * t * t + t + 1.0) + 9.0 * t * t * hw.o1
}

/// Per-thread repetition kernel time, `3m + 9t(4m + o1)`.
pub fn kernel_time_repetition(t: f64, hw: &HardwareParams) -> f64 {
    3.0 * hw.m_repetition + 9.0 * t * (4.0 * hw.m_repetition + hw.o1)
}

/// Kernel speedup from per-thread times rescaled by the thread counts:
/// `T_idx / T_rep * 4^(L-1) / N`.
pub fn kernel_speedup_from_times(shape: &ProblemShape, hw: &HardwareParams) -> f64 {
    kernel_time_indexing(shape.t, hw) / kernel_time_repetition(shape.t, hw) * boxes(shape.l) / n(shape)
}

/// Collection time ratio indexing / repetition.
pub fn collect_speedup_from_times(shape: &ProblemShape, hw: &HardwareParams) -> f64 {
    collect_time_indexing(shape, hw) / collect_time_repetition(shape, hw)
}

/// Per-thread indexing miss ratio with bank floors:
/// `(2 + floor(272t / b)) / floor((40N + 4^L(2+10t)) / b)`.
pub fn miss_ratio_indexing_floor(shape: &ProblemShape, bank_bytes: u64) -> f64 {
    let b = bank_bytes as f64;
    (2.0 + (INDEXING_BYTES_PER_T as f64 * shape.t / b).floor()) / (memory_indexing_f(shape) / b).floor()
}

/// Per-thread indexing miss ratio without floors, `272t / (40N + 4^L(2+10t))`.
pub fn miss_ratio_indexing_approx(shape: &ProblemShape) -> f64 {
    INDEXING_BYTES_PER_T as f64 * shape.t / memory_indexing_f(shape)
}

/// Indexing miss ratio over all `4^(L-1)` threads.
pub fn miss_ratio_indexing_model(shape: &ProblemShape) -> f64 {
    miss_ratio_indexing_approx(shape) * boxes(shape.l)
}

/// Repetition miss ratio, `1/N`.
pub fn miss_ratio_repetition_model(shape: &ProblemShape) -> f64 {
    1.0 / n(shape)
}

/// Lower bound of the repetition/indexing miss-ratio quotient, `44/N`.
pub fn miss_ratio_quotient_bound(n: u64) -> f64 {
    MISS_RATIO_BOUND / n as f64
}

/// Memory-access speedup of the repetition kernel, `lambda_gpu * 44 / N`.
pub fn memory_speedup_kernel(coeff: &ModelCoefficients, shape: &ProblemShape) -> f64 {
    coeff.lambda_gpu * miss_ratio_quotient_bound(shape.n)
}

/// RAM access speedup from data volumes, including the `8N` result buffer:
/// `lambda (40N + 4^L(2+10t) + 8N) / (8N(3 + 27CT) + 8N)`.
pub fn volume_ratio(lambda: f64, shape: &ProblemShape) -> f64 {
    let result = 8.0 * n(shape);
    let rep = 8.0 * n(shape) * (3.0 + 27.0 * shape.ct as f64);
    lambda * (memory_indexing_f(shape) + result) / (rep + result)
}

/// Transfer speedup, `1 / (21.6 D)`.
pub fn speedup_transfer(shape: &ProblemShape) -> f64 {
    1.0 / (VOLUME_CONSTANT * shape.d)
}

/// Collection speedup, `lambda_ram / (21.6 t D)`.
pub fn speedup_collect(coeff: &ModelCoefficients, shape: &ProblemShape) -> f64 {
    coeff.lambda_ram / (VOLUME_CONSTANT * shape.t * shape.d)
}

/// Kernel speedup, `55.3 lambda_gpu t / (N D)`.
pub fn speedup_kernel(coeff: &ModelCoefficients, shape: &ProblemShape) -> f64 {
    KERNEL_CONSTANT * coeff.lambda_gpu * shape.t / (n(shape) * shape.d)
}

/// Largest `N` at which the kernel speedup is still at least 1.
pub fn optimal_n(lambda_gpu: f64, t: f64, d: f64) -> f64 {
    KERNEL_CONSTANT * lambda_gpu * t / d
}

/// Unweighted component speedups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupTerms {
    pub collect: f64,
    pub transfer: f64,
    pub kernel: f64,
}

pub fn speedup_terms(coeff: &ModelCoefficients, shape: &ProblemShape) -> SpeedupTerms {
    SpeedupTerms {
        collect: speedup_collect(coeff, shape),
        transfer: speedup_transfer(shape),
        kernel: speedup_kernel(coeff, shape),
    }
}

/// `alpha X_collect + gamma X_transfer + beta X_kernel`.
pub fn speedup_total(coeff: &ModelCoefficients, shape: &ProblemShape) -> f64 {
    let x = speedup_terms(coeff, shape);
    coeff.alpha * x.collect + coeff.gamma * x.transfer + coeff.beta * x.kernel
}

/// Total speedup after raising the tree by `i` levels, with `t` and `D`
/// taken at the original level: the collection term scales by `4^(2i)`,
/// the transfer term by `4^i`, the kernel term is unchanged.
pub fn speedup_total_adjusted(coeff: &ModelCoefficients, shape: &ProblemShape, i: i32) -> f64 {
    let x = speedup_terms(coeff, shape);
    let g = 4f64.powi(i);
    coeff.alpha * g * g * x.collect + coeff.gamma * g * x.transfer + coeff.beta * x.kernel
}

/// [`speedup_total_adjusted`] with every unweighted term set to 1:
/// `4^(2i) alpha + 4^i gamma + beta`.
pub fn adjusted_gain(coeff: &ModelCoefficients, i: i32) -> f64 {
    let g = 4f64.powi(i);
    coeff.alpha * g * g + coeff.gamma * g + coeff.beta
}

/// Repetition-over-indexing speedup measured against a baseline run twice:
/// `(T_idx / T_base1) * (T_base2 / T_rep)`.
pub fn measured_speedup(t_indexing: f64, t_base1: f64, t_base2: f64, t_repetition: f64) -> f64 {
    (t_indexing / t_base1) * (t_base2 / t_repetition)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn hw(m: f64, o1: f64, find: f64) -> HardwareParams {
        HardwareParams { m_indexing: m, m_repetition: m, o1, find_nei_cost: find, ..Default::default() }
    }

    #[test]
    fn constants_are_pinned() {
        assert_eq!(VOLUME_CONSTANT, 21.6);
        assert_eq!(KERNEL_CONSTANT, 55.3);
        assert_eq!(MISS_RATIO_BOUND, 44.0);
        assert_eq!(INDEXING_BYTES_PER_T, 272);
        assert_eq!(DEFAULT_BANK_BYTES, 512);
        assert_relative_eq!(KERNEL_CONSTANT_EXACT, 58.666_666_666_666_67, max_relative = 1e-15);
        assert_eq!(HardwareParams::default().bank_bytes, 512);
    }

    #[test]
    fn collection_times() {
        let h = hw(1e-9, 5e-9, 1e-8);
        let empty = ProblemShape { n: 0, ct: 15, l: 1, t: 0.0, d: 0.0, i: 0 };
        let zero = HardwareParams { m_indexing: 0.0, find_nei_cost: 0.0, ..h };
        assert_eq!(collect_time_indexing(&empty, &zero), 0.0);

        // 7e5 ns + 4096 * (296 + 3 + 10) ns
        let s = ProblemShape::new(100_000, 15, 7, 15.0);
        assert_relative_eq!(collect_time_indexing(&s, &h), 1_965_664e-9, max_relative = 1e-12);
        // 4096 * (1 + 165 + 10125 + 150) ns
        assert_relative_eq!(collect_time_repetition(&s, &h), 42_766_336e-9, max_relative = 1e-12);

        let t0 = ProblemShape::new(100, 15, 3, 0.0);
        assert_relative_eq!(collect_time_repetition(&t0, &h), 16e-9, max_relative = 1e-12);
    }

    #[test]
    fn repetition_collection_is_quadratic() {
        let h = HardwareParams { find_nei_cost: 0.0, ..hw(1e-9, 5e-9, 1.0) };
        let at = |t| collect_time_repetition(&ProblemShape::new(1000, 15, 4, t), &h);
        assert_relative_eq!(at(2e6) / at(1e6), 4.0, max_relative = 1e-5);
    }

    #[test]
    fn memory_examples() {
        assert_eq!(memory_indexing(100, 3, 7), 8_608);
        assert_eq!(memory_repetition(100, 15), 326_400);
    }

    #[test]
    fn kernel_times() {
        let h = hw(1e-9, 5e-9, 0.0);
        assert_relative_eq!(kernel_time_repetition(15.0, &h), 1218e-9, max_relative = 1e-12);
        assert_relative_eq!(kernel_time_repetition(0.0, &h), 3e-9, max_relative = 1e-15);
        assert_relative_eq!(kernel_time_indexing(0.0, &h), 4e-9, max_relative = 1e-15);
        assert_relative_eq!(kernel_time_indexing_expanded(0.0, &h), 4e-9, max_relative = 1e-15);
        for t in 0..=50 {
            let t = t as f64;
            assert_relative_eq!(kernel_time_indexing(t, &h), kernel_time_indexing_expanded(t, &h), max_relative = 1e-12);
        }
    }

    #[test]
    fn miss_ratio_models() {
        let s = ProblemShape::new(44, 15, 3, 4.0);
        assert_eq!(miss_ratio_repetition_model(&s), 1.0 / 44.0);
        assert_eq!(miss_ratio_quotient_bound(44), 1.0);

        // 40e5 + 16384 * 152 = 6,490,368 bytes = 12,676.5 banks.
        let s = ProblemShape::new(100_000, 15, 7, 15.0);
        assert_relative_eq!(miss_ratio_indexing_floor(&s, 512), 9.0 / 12_676.0, max_relative = 1e-15);
        assert_relative_eq!(miss_ratio_indexing_approx(&s), 4080.0 / 6_490_368.0, max_relative = 1e-15);
        assert_relative_eq!(miss_ratio_indexing_model(&s), 4080.0 / 6_490_368.0 * 4096.0, max_relative = 1e-15);
    }

    #[test]
    fn speedup_examples() {
        let c = ModelCoefficients::published();
        let s = ProblemShape { n: 1, ct: 15, l: 1, t: 8.0, d: 0.75, i: 0 };
        assert_relative_eq!(speedup_collect(&c, &s), 108.0 / 129.6, max_relative = 1e-15);
        assert!(speedup_collect(&c, &s) <= 1.8 + 1e-9);
        let s4 = ProblemShape { t: 4.0, d: 1.0, ..s };
        assert_relative_eq!(speedup_collect(&c, &s4), 1.25, max_relative = 1e-15);
        let s16 = ProblemShape { t: 32.0, d: 3.0, ..s };
        assert_relative_eq!(speedup_collect(&c, &s16), speedup_collect(&c, &s) / 16.0, max_relative = 1e-15);

        assert_relative_eq!(optimal_n(640.0, 15.0, 1.0), 530_880.0, max_relative = 1e-12);
        assert_relative_eq!(optimal_n(640.0, 15.0, 5.0), 106_176.0, max_relative = 1e-12);
        let at = ProblemShape { n: 530_880, t: 15.0, d: 1.0, ..s };
        assert_relative_eq!(speedup_kernel(&c, &at), 1.0, max_relative = 1e-12);
        let twice = ProblemShape { n: 1_061_760, ..at };
        assert_relative_eq!(speedup_kernel(&c, &twice), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn total_speedup() {
        let c = ModelCoefficients::published();
        let s = ProblemShape { n: 300_000, ct: 15, l: 9, t: 10.0, d: 1.14, i: 0 };
        let expect = 0.82 * 108.0 / (21.6 * 1.14 * 10.0) + 0.18 / (21.6 * 1.14) + 0.09 * 55.3 * 640.0 * 10.0 / (300_000.0 * 1.14);
        assert_relative_eq!(speedup_total(&c, &s), expect, max_relative = 1e-14);
        assert_eq!(speedup_total_adjusted(&c, &s, 0), speedup_total(&c, &s));

        let zero = ModelCoefficients { alpha: 0.0, beta: 0.0, gamma: 0.0, ..c };
        assert_eq!(speedup_total(&zero, &s), 0.0);

        let only = |a, b, g| ModelCoefficients { alpha: a, beta: b, gamma: g, ..c };
        assert_eq!(speedup_total(&only(1.0, 0.0, 0.0), &s), speedup_collect(&c, &s));
        assert_eq!(speedup_total(&only(0.0, 1.0, 0.0), &s), speedup_kernel(&c, &s));
        assert_eq!(speedup_total(&only(0.0, 0.0, 1.0), &s), 1.0 / (21.6 * 1.14));
    }

    #[test]
    fn height_adjustment() {
        let c = ModelCoefficients::published();
        assert_relative_eq!(adjusted_gain(&c, 1), 13.93, max_relative = 1e-12);
        assert_relative_eq!(adjusted_gain(&c, 0), 1.09, max_relative = 1e-12);

        let s = ProblemShape { n: 65_536, ct: 15, l: 8, t: 12.0, d: 4.0, i: 0 };
        let a_only = ModelCoefficients { beta: 0.0, gamma: 0.0, ..c };
        assert_relative_eq!(
            speedup_total_adjusted(&a_only, &s, 2),
            256.0 * speedup_total(&a_only, &s),
            max_relative = 1e-14
        );
    }

    #[test]
    fn volume_ratio_includes_result_buffer() {
        let s = ProblemShape::new(100, 15, 3, 7.0);
        assert_relative_eq!(volume_ratio(1.0, &s), (8_608.0 + 800.0) / (326_400.0 + 800.0), max_relative = 1e-15);
    }

    #[test]
    fn measured_speedup_cancels_baseline() {
        assert_eq!(measured_speedup(4.0, 2.0, 2.0, 1.0), 4.0);
        assert_eq!(measured_speedup(3.0, 1.0, 2.0, 2.0), 3.0);
    }

    #[test]
    fn validation() {
        assert!(HardwareParams::default().validate().is_ok());
        assert!(HardwareParams { o1: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModelCoefficients::published().validate().is_ok());
        assert!(ModelCoefficients { alpha: -0.1, ..ModelCoefficients::published() }.validate().is_err());
        assert!(ModelCoefficients { lambda_gpu: 0.0, ..ModelCoefficients::published() }.validate().is_err());
    }
}
