use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nearfield::calibration::{calibrate, FitOptions};
use nearfield::executors::Backend;
use nearfield::geometry::{adjust_height, build_tree, PointSet};
use nearfield::model::{self, ModelCoefficients, ProblemShape};
use nearfield_bench::experiment::{RunOptions, Budget};
use nearfield_bench::plan::{self, SweepPlan};
use nearfield_bench::table::{self, Row};
use nearfield_bench::verify;

/// Gain claimed for one level of height adjustment in the published study.
const PUBLISHED_ONE_LEVEL_GAIN: f64 = 17.0;

#[derive(Parser)]
#[command(name = "nfbench", version, about = "Near-field layout experiments and speedup models")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Timed repetitions per experiment (default depends on the command).
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// Multiply every sweep N by this factor.
    #[arg(long, global = true, default_value_t = 1.0)]
    scale: f64,
    /// Worker threads per executor run; 0 means all hardware threads.
    #[arg(long, global = true, default_value_t = 1)]
    backend_width: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Skip the read-trace replay that fills the miss-ratio columns.
    #[arg(long)]
    no_miss: bool,
    /// Coefficients JSON produced by `fit`; the published values otherwise.
    #[arg(long)]
    coefficients: Option<PathBuf>,
    /// Largest repetition layout to allocate, in MiB.
    #[arg(long, default_value_t = 1024)]
    max_layout_mib: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the three evaluators against each other and a brute-force oracle.
    Verify {
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Collection-phase sweep over N.
    SweepCollect(SweepArgs),
    /// Kernel-phase sweep over N.
    SweepKernel(SweepArgs),
    /// Height-adjustment grid over (L, i).
    Grid {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = 4)]
        l_min: u32,
        #[arg(long, default_value_t = 11)]
        l_max: u32,
        #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
        i_min: i32,
        #[arg(long, default_value_t = 3)]
        i_max: i32,
    },
    /// Fit weights and lambdas from a results CSV.
    Fit {
        input: PathBuf,
        /// Drop the 5% extreme residuals on each side and refit once.
        #[arg(long)]
        trim: bool,
    },
    /// Evaluate the speedup models for one problem.
    Predict {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 15)]
        ct: u64,
        /// Height adjustment to evaluate.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        i: i32,
        /// Tree level; measured from a generated point set when absent.
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        coefficients: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load_coefficients(path: &Option<PathBuf>) -> Result<ModelCoefficients> {
    let Some(p) = path else {
        return Ok(ModelCoefficients::published());
    };
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let doc: nearfield::calibration::CoefficientsDocument = serde_json::from_str(&text)?;
    let c = doc.coefficients();
    c.validate()?;
    Ok(c)
}

fn backend(width: usize) -> Backend {
    if width == 0 {
        Backend::available()
    } else {
        Backend::threads(width)
    }
}

fn skips_path(out: &Option<PathBuf>) -> Option<PathBuf> {
    out.as_ref().map(|p| {
        let mut name = p.file_name().unwrap_or_default().to_os_string();
        name.push(".skipped");
        p.with_file_name(name)
    })
}

fn run_sweep(cli: &Cli, plan: SweepPlan, args: &SweepArgs, default_repeats: usize) -> Result<()> {
    let plan = plan
        .with_seed(cli.seed)
        .with_repeats(cli.repeats.unwrap_or(default_repeats))
        .with_backend_width(cli.backend_width);
    let opts = RunOptions {
        repeats: plan.repeats,
        backend: backend(cli.backend_width),
        miss_ratio: !args.no_miss,
        coefficients: load_coefficients(&args.coefficients)?,
        budget: Budget { max_layout_bytes: args.max_layout_mib << 20, ..Default::default() },
        ..Default::default()
    };
    let mut skips: Vec<u8> = Vec::new();
    let outcomes = nearfield_bench::run_plan(&plan, &opts, &mut skips)?;
    let rows: Vec<Row> = outcomes.iter().map(Row::from_outcome).collect();
    let mut out = output(&cli.out)?;
    table::write_rows(&mut out, &rows)?;
    out.flush()?;
    if !skips.is_empty() {
        io::stderr().write_all(&skips)?;
        if let Some(p) = skips_path(&cli.out) {
            std::fs::write(&p, &skips).with_context(|| format!("writing {}", p.display()))?;
        }
    }
    Ok(())
}

fn fit(cli: &Cli, input: &Path, trim: bool) -> Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let rows = table::read_rows(file)?;
    let records: Vec<_> = rows.iter().filter_map(Row::to_record).collect();
    log::info!("{} usable records of {}", records.len(), rows.len());
    let doc = calibrate(&records, &FitOptions { trim, ..Default::default() })?;
    let mut out = output(&cli.out)?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn predict(cli: &Cli, n: u64, ct: u64, i: i32, l: Option<u32>, t: Option<f64>, d: Option<f64>, coeffs: &Option<PathBuf>) -> Result<()> {
    let c = load_coefficients(coeffs)?;
    let shape = match (l, t) {
        (Some(l), Some(t)) => ProblemShape { d: d.unwrap_or(n as f64 / model::boxes(l)), ..ProblemShape::new(n, ct, l, t) },
        _ => {
            let points = PointSet::generate(n as usize, cli.seed)?;
            let stats = build_tree(&points, ct as usize, 3)?.stats();
            ProblemShape::from_stats(&stats, ct)
        }
    };
    let terms = model::speedup_terms(&c, &shape);
    let mut report = serde_json::json!({
        "shape": shape,
        "coefficients": c,
        "x_collect": terms.collect,
        "x_transfer": terms.transfer,
        "x_kernel": terms.kernel,
        "x_total": model::speedup_total(&c, &shape),
        "n_optimal": model::optimal_n(c.lambda_gpu, shape.t, shape.d),
        "adjusted": {
            "i": i,
            "x_total": model::speedup_total_adjusted(&c, &shape, i),
            "unit_term_gain": model::adjusted_gain(&c, i),
            "published_one_level_gain": PUBLISHED_ONE_LEVEL_GAIN,
        },
    });
    if i != 0 && l.is_none() && t.is_none() {
        let points = PointSet::generate(n as usize, cli.seed)?;
        let tree = build_tree(&points, ct as usize, 3)?;
        if let Ok(adj) = adjust_height(&tree, &points, i) {
            let s = ProblemShape::from_stats(&adj.stats(), ct).with_height_delta(i);
            report["adjusted"]["measured_tree"] = serde_json::json!({
                "shape": s,
                "x_total": model::speedup_total(&c, &s),
            });
        }
    }
    let mut out = output(&cli.out)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { instances } => {
            let cases = verify::instances(*instances, cli.seed);
            let report = verify::verify(&cases, &backend(cli.backend_width), &Default::default());
            for f in &report.failures {
                eprintln!("FAIL {f}");
            }
            println!(
                "verify: {} instances, {} comparisons, max relative difference {:.3e}: {}",
                report.instances,
                report.compared,
                report.max_rel_diff,
                if report.passed() { "ok" } else { "FAILED" }
            );
            if !report.passed() {
                return ExitCode::from(2);
            }
            Ok(())
        }
        Command::SweepCollect(args) => run_sweep(&cli, plan::plan_collect_sweep(cli.scale), args, 20),
        Command::SweepKernel(args) => run_sweep(&cli, plan::plan_kernel_sweep(cli.scale), args, 20),
        Command::Grid { sweep, l_min, l_max, i_min, i_max } => {
            run_sweep(&cli, plan::plan_grid(*l_min..=*l_max, *i_min..=*i_max), sweep, 1)
        }
        Command::Fit { input, trim } => fit(&cli, input, *trim),
        Command::Predict { n, ct, i, l, t, d, coefficients } => predict(&cli, *n, *ct, *i, *l, *t, *d, coefficients),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
