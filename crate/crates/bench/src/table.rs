use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use nearfield::calibration::{ExperimentRecord, Measured};
use nearfield::model::ProblemShape;

use crate::experiment::{ExperimentOutput, Outcome};

pub const COLUMNS: [&str; 22] = [
    "n",
    "ct",
    "l",
    "i",
    "t",
    "d",
    "bytes_idx",
    "bytes_rep",
    "collect_idx_s",
    "collect_rep_s",
    "kernel_idx_s",
    "kernel_rep_s",
    "base1_s",
    "base2_s",
    "x_collect",
    "x_kernel",
    "x_total",
    "pred_x_collect",
    "pred_x_kernel",
    "pred_x_total",
    "miss_exact_idx",
    "miss_exact_rep",
];

/// One output row. A skipped experiment keeps only `n, ct, l, i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Row {
    pub n: u64,
    pub ct: u64,
    /// Level the tree was built at, before the height adjustment `i`.
    pub l: u32,
    pub i: i32,
    pub t: Option<u64>,
    pub d: Option<f64>,
    pub bytes_idx: Option<u64>,
    pub bytes_rep: Option<u64>,
    pub collect_idx_s: Option<f64>,
    pub collect_rep_s: Option<f64>,
    pub kernel_idx_s: Option<f64>,
    pub kernel_rep_s: Option<f64>,
    pub base1_s: Option<f64>,
    pub base2_s: Option<f64>,
    pub x_collect: Option<f64>,
    pub x_kernel: Option<f64>,
    pub x_total: Option<f64>,
    pub pred_x_collect: Option<f64>,
    pub pred_x_kernel: Option<f64>,
    pub pred_x_total: Option<f64>,
    pub miss_exact_idx: Option<f64>,
    pub miss_exact_rep: Option<f64>,
}

impl Row {
    pub fn is_skipped(&self) -> bool {
        self.x_total.is_none()
    }

    pub fn from_output(out: &ExperimentOutput) -> Self {
        let r = &out.record;
        let m = &r.measured;
        Self {
            n: out.stats.n as u64,
            ct: out.entry.ct as u64,
            l: out.built_level,
            i: out.entry.i,
            t: Some(out.stats.t as u64),
            d: Some(out.stats.d),
            bytes_idx: Some(m.bytes_idx),
            bytes_rep: Some(m.bytes_rep),
            collect_idx_s: Some(m.collect_time_idx),
            collect_rep_s: Some(m.collect_time_rep),
            kernel_idx_s: Some(m.kernel_time_idx),
            kernel_rep_s: Some(m.kernel_time_rep),
            base1_s: Some(m.base_time_1),
            base2_s: Some(m.base_time_2),
            x_collect: Some(r.derived.x_collect),
            x_kernel: Some(r.derived.x_kernel),
            x_total: Some(r.derived.x_total),
            pred_x_collect: Some(out.prediction.x_collect),
            pred_x_kernel: Some(out.prediction.x_kernel),
            pred_x_total: Some(out.prediction.x_total),
            miss_exact_idx: out.miss_idx.map(|m| m.per_item()),
            miss_exact_rep: out.miss_rep.map(|m| m.per_item()),
        }
    }

    pub fn from_outcome(o: &Outcome) -> Self {
        match o {
            Outcome::Done(out) => Self::from_output(out),
            Outcome::Skipped { entry, .. } => Self {
                n: entry.n as u64,
                ct: entry.ct as u64,
                l: entry.fixed_level.unwrap_or(entry.l_start),
                i: entry.i,
                ..Default::default()
            },
        }
    }

    /// The experiment record behind a complete row; its shape describes the
    /// evaluated tree at level `l + i`.
    pub fn to_record(&self) -> Option<ExperimentRecord> {
        let measured = Measured {
            collect_time_idx: self.collect_idx_s?,
            collect_time_rep: self.collect_rep_s?,
            kernel_time_idx: self.kernel_idx_s?,
            kernel_time_rep: self.kernel_rep_s?,
            base_time_1: self.base1_s?,
            base_time_2: self.base2_s?,
            bytes_idx: self.bytes_idx?,
            bytes_rep: self.bytes_rep?,
        };
        let level = u32::try_from(self.l as i64 + self.i as i64).ok()?;
        let shape = ProblemShape { n: self.n, ct: self.ct, l: level, t: self.t? as f64, d: self.d?, i: self.i };
        ExperimentRecord::new(shape, measured).ok()
    }

    fn fields(&self) -> [String; 22] {
        let int = |v: Option<u64>| v.map_or_else(String::new, |v| v.to_string());
        let flt = |v: Option<f64>| v.map_or_else(String::new, fmt_sig9);
        [
            self.n.to_string(),
            self.ct.to_string(),
            self.l.to_string(),
            self.i.to_string(),
            int(self.t),
            flt(self.d),
            int(self.bytes_idx),
            int(self.bytes_rep),
            flt(self.collect_idx_s),
            flt(self.collect_rep_s),
            flt(self.kernel_idx_s),
            flt(self.kernel_rep_s),
            flt(self.base1_s),
            flt(self.base2_s),
            flt(self.x_collect),
            flt(self.x_kernel),
            flt(self.x_total),
            flt(self.pred_x_collect),
            flt(self.pred_x_kernel),
            flt(self.pred_x_total),
            flt(self.miss_exact_idx),
            flt(self.miss_exact_rep),
        ]
    }
}

/// Round to 9 significant digits and print the shortest text that parses
/// back to the rounded value.
pub fn fmt_sig9(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    format!("{rounded:?}")
}

/// Round a value the way [`write_rows`] stores it.
pub fn round_sig9(v: f64) -> f64 {
    fmt_sig9(v).parse().expect("formatted float parses")
}

pub fn write_rows<W: Write>(w: W, rows: &[Row]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(COLUMNS)?;
    for row in rows {
        out.write_record(row.fields())?;
    }
    out.flush()?;
    Ok(())
}

fn opt<T: std::str::FromStr>(s: &str, col: &str) -> Result<Option<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).with_context(|| format!("bad value {s:?} in column {col}"))
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<Row>> {
    let mut input = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = input.headers()?.clone();
    for (k, col) in COLUMNS.iter().enumerate() {
        if header.get(k) != Some(col) {
            bail!("missing column {col} at position {k}");
        }
    }
    if header.len() != COLUMNS.len() {
        bail!("expected {} columns, found {}", COLUMNS.len(), header.len());
    }
    let mut rows = Vec::new();
    for (line, rec) in input.records().enumerate() {
        let rec = rec?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let req = |k: usize| -> Result<String> {
            let s = f(k);
            if s.is_empty() {
                bail!("row {} has no value for {}", line + 1, COLUMNS[k]);
            }
            Ok(s.to_string())
        };
        rows.push(Row {
            n: req(0)?.parse()?,
            ct: req(1)?.parse()?,
            l: req(2)?.parse()?,
            i: req(3)?.parse()?,
            t: opt(f(4), COLUMNS[4])?,
            d: opt(f(5), COLUMNS[5])?,
            bytes_idx: opt(f(6), COLUMNS[6])?,
            bytes_rep: opt(f(7), COLUMNS[7])?,
            collect_idx_s: opt(f(8), COLUMNS[8])?,
            collect_rep_s: opt(f(9), COLUMNS[9])?,
            kernel_idx_s: opt(f(10), COLUMNS[10])?,
            kernel_rep_s: opt(f(11), COLUMNS[11])?,
            base1_s: opt(f(12), COLUMNS[12])?,
            base2_s: opt(f(13), COLUMNS[13])?,
            x_collect: opt(f(14), COLUMNS[14])?,
            x_kernel: opt(f(15), COLUMNS[15])?,
            x_total: opt(f(16), COLUMNS[16])?,
            pred_x_collect: opt(f(17), COLUMNS[17])?,
            pred_x_kernel: opt(f(18), COLUMNS[18])?,
            pred_x_total: opt(f(19), COLUMNS[19])?,
            miss_exact_idx: opt(f(20), COLUMNS[20])?,
            miss_exact_rep: opt(f(21), COLUMNS[21])?,
        });
    }
    Ok(rows)
}
