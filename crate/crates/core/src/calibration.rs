//! Coefficient estimation from measured experiments.
//!
//! [`fit_component_weights`] fits `x_total ≈ α x_collect + γ x_transfer +
//! β x_kernel` by nonnegative least squares; the lambda estimators invert the
//! collection and kernel speedup models record by record.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelCoefficients, ProblemShape, KERNEL_CONSTANT, VOLUME_CONSTANT};

/// Raw timings and sizes of one experiment, in seconds and bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub collect_time_idx: f64,
    pub collect_time_rep: f64,
    pub kernel_time_idx: f64,
    pub kernel_time_rep: f64,
    pub base_time_1: f64,
    pub base_time_2: f64,
    pub bytes_idx: u64,
    pub bytes_rep: u64,
}

/// Repetition-over-indexing speedups, each normalized by the two baseline runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub x_collect: f64,
    pub x_kernel: f64,
    pub x_total: f64,
}

impl Measured {
    pub fn derive(&self) -> Derived {
        let x = |idx, rep| model::measured_speedup(idx, self.base_time_1, self.base_time_2, rep);
        Derived {
            x_collect: x(self.collect_time_idx, self.collect_time_rep),
            x_kernel: x(self.kernel_time_idx, self.kernel_time_rep),
            x_total: x(
                self.collect_time_idx + self.kernel_time_idx,
                self.collect_time_rep + self.kernel_time_rep,
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let times = [
            self.collect_time_idx,
            self.collect_time_rep,
            self.kernel_time_idx,
            self.kernel_time_rep,
            self.base_time_1,
            self.base_time_2,
        ];
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative or non-finite time in {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub shape: ProblemShape,
    pub measured: Measured,
    pub derived: Derived,
}

impl ExperimentRecord {
    pub fn new(shape: ProblemShape, measured: Measured) -> Result<Self> {
        measured.validate()?;
        Ok(Self { shape, measured, derived: measured.derive() })
    }

    /// Transfer speedup; transfers are not timed, so this is the volume term
    /// `1 / (21.6 D)`.
    pub fn x_transfer(&self) -> f64 {
        model::speedup_transfer(&self.shape)
    }
}

/// Component speedups and total for one fit row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentRow {
    pub x_collect: f64,
    pub x_transfer: f64,
    pub x_kernel: f64,
    pub x_total: f64,
}

impl From<&ExperimentRecord> for ComponentRow {
    fn from(r: &ExperimentRecord) -> Self {
        Self {
            x_collect: r.derived.x_collect,
            x_transfer: r.x_transfer(),
            x_kernel: r.derived.x_kernel,
            x_total: r.derived.x_total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Drop the 5% most negative and 5% most positive residuals and refit once.
    pub trim: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { trim: false, tolerance: 1e-10, max_iterations: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFit {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub residual_rms: f64,
    pub records_used: usize,
    pub iterations: usize,
}

impl WeightFit {
    pub fn predict(&self, row: &ComponentRow) -> f64 {
        self.alpha * row.x_collect + self.gamma * row.x_transfer + self.beta * row.x_kernel
    }
}

/// Nonnegative least squares over the three component speedups.
pub fn fit_component_weights(rows: &[ComponentRow], opts: &FitOptions) -> Result<WeightFit> {
    let fit = fit_rows(rows, opts)?;
    if !opts.trim {
        return Ok(fit);
    }
    let drop = rows.len() * 5 / 100;
    if drop == 0 {
        return Ok(fit);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let resid = |i: usize| rows[i].x_total - fit.predict(&rows[i]);
    order.sort_by(|&a, &b| resid(a).total_cmp(&resid(b)));
    let kept: Vec<ComponentRow> = order[drop..rows.len() - drop].iter().map(|&i| rows[i]).collect();
    fit_rows(&kept, opts)
}

/// [`fit_component_weights`] over experiment records.
pub fn fit_records(records: &[ExperimentRecord], opts: &FitOptions) -> Result<WeightFit> {
    let rows: Vec<ComponentRow> = records.iter().map(ComponentRow::from).collect();
    fit_component_weights(&rows, opts)
}

fn fit_rows(rows: &[ComponentRow], opts: &FitOptions) -> Result<WeightFit> {
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!("{} records, at least 3 needed", rows.len())));
    }
    if rows.iter().any(|r| ![r.x_collect, r.x_transfer, r.x_kernel, r.x_total].iter().all(|v| v.is_finite())) {
        return Err(Error::InsufficientData("non-finite component speedup".into()));
    }
    // Columns: collect, transfer, kernel.
    let a = DMatrix::from_fn(rows.len(), 3, |i, j| match j {
        0 => rows[i].x_collect,
        1 => rows[i].x_transfer,
        _ => rows[i].x_kernel,
    });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.x_total));

    // Column scaling keeps the step size meaningful when components differ
    // by orders of magnitude; nonnegativity is unaffected.
    let scale = DVector::from_iterator(3, a.column_iter().map(|c| c.norm()));
    if scale.iter().any(|&s| s == 0.0) {
        return Err(Error::InsufficientData("a component speedup is zero in every record".into()));
    }
    let mut an = a.clone();
    for (j, mut c) in an.column_iter_mut().enumerate() {
        c /= scale[j];
    }
    let sv = an.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= 1e-10 * smax {
        return Err(Error::InsufficientData(format!(
            "component speedups are collinear (singular values {smax:.3e} .. {smin:.3e})"
        )));
    }

    let (z, iterations) = nnls(&an, &y, smax * smax, opts);
    let w = z.component_div(&scale);
    let resid = &y - &a * &w;
    Ok(WeightFit {
        alpha: w[0],
        gamma: w[1],
        beta: w[2],
        residual_rms: (resid.norm_squared() / rows.len() as f64).sqrt(),
        records_used: rows.len(),
        iterations,
    })
}

// Projected gradient with step 1/L, L the largest eigenvalue of AᵀA, then
// an exact least-squares solve on the variables left strictly positive.
fn nnls(a: &DMatrix<f64>, y: &DVector<f64>, lipschitz: f64, opts: &FitOptions) -> (DVector<f64>, usize) {
    let ata = a.transpose() * a;
    let aty = a.transpose() * y;
    let step = 1.0 / lipschitz;
    let mut x = DVector::zeros(a.ncols());
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let grad = &ata * &x - &aty;
        let next = (&x - grad * step).map(|v| v.max(0.0));
        let moved = (&next - &x).amax();
        x = next;
        if moved <= opts.tolerance * x.amax().max(1.0) {
            break;
        }
    }
    if let Some(exact) = polish(&ata, &aty, &x) {
        x = exact;
    }
    (x, iterations)
}

fn polish(ata: &DMatrix<f64>, aty: &DVector<f64>, x: &DVector<f64>) -> Option<DVector<f64>> {
    let free: Vec<usize> = (0..x.len()).filter(|&j| x[j] > 0.0).collect();
    if free.is_empty() {
        return None;
    }
    let sub = DMatrix::from_fn(free.len(), free.len(), |i, j| ata[(free[i], free[j])]);
    let rhs = DVector::from_iterator(free.len(), free.iter().map(|&j| aty[j]));
    let sol = sub.cholesky()?.solve(&rhs);
    if sol.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let mut out = DVector::zeros(x.len());
    for (k, &j) in free.iter().enumerate() {
        out[j] = sol[k];
    }
    // Bound variables must not want to increase.
    let grad = ata * &out - aty;
    let scale = aty.amax().max(f64::MIN_POSITIVE);
    if (0..x.len()).any(|j| out[j] == 0.0 && grad[j] < -1e-9 * scale) {
        return None;
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Records that contributed.
    #[serde(skip)]
    pub used: usize,
    /// Records dropped for zero `t` or `D`.
    #[serde(skip)]
    pub skipped: usize,
}

fn lambda_stats<F>(records: &[ExperimentRecord], what: &str, per_record: F) -> Result<LambdaStats>
where
    F: Fn(&ExperimentRecord) -> f64,
{
    let mut vals = Vec::with_capacity(records.len());
    let mut skipped = 0;
    for r in records {
        if r.shape.t == 0.0 || r.shape.d == 0.0 {
            log::warn!("skipping record n={} l={} i={} for {what}: zero t or D", r.shape.n, r.shape.l, r.shape.i);
            skipped += 1;
            continue;
        }
        vals.push(per_record(r));
    }
    if vals.is_empty() {
        return Err(Error::InsufficientData(format!("no usable records for {what}")));
    }
    Ok(LambdaStats {
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        used: vals.len(),
        skipped,
    })
}

/// Per record `λ = x_collect · 21.6 · t · D`.
pub fn estimate_lambda_ram(records: &[ExperimentRecord]) -> Result<LambdaStats> {
    lambda_stats(records, "lambda_ram", |r| r.derived.x_collect * VOLUME_CONSTANT * r.shape.t * r.shape.d)
}

/// Per record `λ = x_kernel · N · D / (55.3 · t)`.
pub fn estimate_lambda_gpu(records: &[ExperimentRecord]) -> Result<LambdaStats> {
    lambda_stats(records, "lambda_gpu", |r| {
        r.derived.x_kernel * r.shape.n as f64 * r.shape.d / (KERNEL_CONSTANT * r.shape.t)
    })
}

/// The fitted-coefficients document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientsDocument {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_ram: LambdaStats,
    pub lambda_gpu: LambdaStats,
    pub residual_rms: f64,
}

impl CoefficientsDocument {
    /// Coefficients for prediction, using the lambda means.
    pub fn coefficients(&self) -> ModelCoefficients {
        ModelCoefficients {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            lambda_ram: self.lambda_ram.mean,
            lambda_gpu: self.lambda_gpu.mean,
        }
    }
}

/// Fit weights and both lambdas.
pub fn calibrate(records: &[ExperimentRecord], opts: &FitOptions) -> Result<CoefficientsDocument> {
    let fit = fit_records(records, opts)?;
    Ok(CoefficientsDocument {
        alpha: fit.alpha,
        beta: fit.beta,
        gamma: fit.gamma,
        lambda_ram: estimate_lambda_ram(records)?,
        lambda_gpu: estimate_lambda_gpu(records)?,
        residual_rms: fit.residual_rms,
    })
}
