//! The `ibkernel` command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or input error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::audit::{audit, AuditConfig, AuditReport};
use crate::bench::{reference_max_std, run_bench, BenchConfig, BenchSummary};
use crate::error::{Error, Result};
use crate::grid::{interpolate, read_field_csv, read_markers_csv, spread, write_field_csv, MarkerSet, PeriodicGrid3, ScalarField3};
use crate::kernel::{gaussian_match, phi, phi_derivative, KernelId};
use crate::numfmt::g17;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Relative tolerance of `bench --check` against the published maxima.
pub const BENCH_TOLERANCE: f64 = 0.3;

/// Residual bound used by `demo` to decide its exit code.
pub const DEMO_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Parser)]
#[command(name = "ibkernel", version, about = "Immersed-boundary delta kernels: tables, audits, benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSelection {
    All,
    One(KernelId),
}

impl KernelSelection {
    fn kernels(self) -> Vec<KernelId> {
        match self {
            KernelSelection::All => KernelId::ALL.to_vec(),
            KernelSelection::One(id) => vec![id],
        }
    }
}

fn parse_selection(s: &str) -> std::result::Result<KernelSelection, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(KernelSelection::All)
    } else {
        s.parse().map(KernelSelection::One).map_err(|e: Error| e.to_string())
    }
}

fn parse_kernel(s: &str) -> std::result::Result<KernelId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a kernel or one of its derivatives at a point.
    Eval {
        #[arg(long, value_parser = parse_kernel)]
        kernel: KernelId,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        /// 0 for the kernel itself, 1-3 for derivatives (2 and 3 only for new6).
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..=3))]
        order: u32,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Tabulate a kernel on a uniform grid of r values.
    Table {
        #[arg(long, value_parser = parse_kernel)]
        kernel: KernelId,
        #[arg(long, allow_hyphen_values = true, default_value_t = -3.0)]
        min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
        max: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Add d1,d2,d3 columns (new6 only).
        #[arg(long)]
        derivatives: bool,
        /// Add the Gaussian with the same second moment.
        #[arg(long)]
        gaussian: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Check the moment, even-odd, sum-of-squares and smoothness properties.
    Audit {
        /// A kernel name or `all`.
        #[arg(long, value_parser = parse_selection, default_value = "all")]
        kernel: KernelSelection,
        #[arg(long, default_value_t = AuditConfig::default().samples)]
        samples: usize,
        #[arg(long, default_value_t = AuditConfig::default().tolerance)]
        tol: f64,
        #[arg(long, default_value_t = AuditConfig::default().seed)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Run the pair-coupling translational-invariance benchmark.
    Bench {
        #[arg(long, value_parser = parse_kernel, default_value = "new6")]
        kernel: KernelId,
        #[arg(long, default_value_t = BenchConfig::default().pairs)]
        pairs: usize,
        #[arg(long, default_value_t = BenchConfig::default().seed)]
        seed: u64,
        /// Grid points per axis of the periodic box.
        #[arg(long = "box", default_value_t = BenchConfig::default().box_size)]
        box_size: usize,
        #[arg(long, default_value_t = BenchConfig::default().meshwidth)]
        h: f64,
        #[arg(long, default_value_t = BenchConfig::default().bin_width)]
        bin_width: f64,
        #[arg(long, default_value_t = BenchConfig::default().max_distance)]
        max_distance: f64,
        /// Write `<prefix>-samples.csv`, `<prefix>-stats.csv` and
        /// `<prefix>-summary.json` instead of printing.
        #[arg(long)]
        out_prefix: Option<PathBuf>,
        /// Worker threads (default: all cores). Output does not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Exit 1 unless max_std is within 30% of the published value.
        #[arg(long)]
        check: bool,
        /// Stdout content: the summary as JSON, or the per-bin stats as CSV.
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Spread marker values to a grid and interpolate a field back, reporting
    /// the adjointness and conservation residuals.
    Demo {
        #[arg(long, value_parser = parse_kernel, default_value = "new6")]
        kernel: KernelId,
        /// `n` for an n^3 grid or `n1,n2,n3`.
        #[arg(long, default_value = "16", value_parser = parse_dims)]
        dims: [usize; 3],
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        /// Marker CSV `x,y,z[,value]`; missing values are drawn at random.
        #[arg(long, conflicts_with = "random")]
        markers: Option<PathBuf>,
        /// Number of random markers when no file is given.
        #[arg(long, default_value_t = 1000)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the spread field as `i,j,k,value` CSV.
        #[arg(long)]
        field_out: Option<PathBuf>,
        /// Field to interpolate, as `i,j,k,value` CSV (default: random).
        #[arg(long)]
        field_in: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad grid dimension '{p}'")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [n] => Ok([n; 3]),
        [a, b, c] => Ok([a, b, c]),
        _ => Err("expected n or n1,n2,n3".into()),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Eval { kernel, r, order, format } => cmd_eval(kernel, r, order, format, out),
        Command::Table { kernel, min, max, step, derivatives, gaussian, format } => {
            cmd_table(kernel, min, max, step, derivatives, gaussian, format, out)
        }
        Command::Audit { kernel, samples, tol, seed, format } => {
            let cfg = AuditConfig { samples, tolerance: tol, seed, ..AuditConfig::default() };
            cmd_audit(kernel, &cfg, format, out)
        }
        Command::Bench {
            kernel,
            pairs,
            seed,
            box_size,
            h,
            bin_width,
            max_distance,
            out_prefix,
            threads,
            check,
            format,
        } => {
            let cfg = BenchConfig { kernel, pairs, box_size, meshwidth: h, seed, bin_width, max_distance };
            cmd_bench(&cfg, out_prefix, threads, check, format, out)
        }
        Command::Demo { kernel, dims, h, markers, random, seed, field_out, field_in, format } => {
            let opts = DemoOptions { kernel, dims, h, markers, random, seed, field_out, field_in };
            cmd_demo(&opts, format, out)
        }
    }
}

fn write_json<T: Serialize + ?Sized>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn cmd_eval(kernel: KernelId, r: f64, order: u32, format: OutputFormat, out: &mut dyn Write) -> Result<i32> {
    let value = if order == 0 { phi(kernel, r)? } else { phi_derivative(kernel, r, order)? };
    match format {
        OutputFormat::Csv => writeln!(out, "{}", g17(value))?,
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Eval {
                kernel: KernelId,
                r: f64,
                order: u32,
                value: f64,
            }
            write_json(&Eval { kernel, r, order, value }, out)?;
        }
    }
    Ok(EXIT_OK)
}

/// Sample points `min + i step` up to `max`, with a near-miss final point
/// snapped onto `max`.
pub fn table_points(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Error::Config(format!("need finite min < max, got {min} and {max}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let span = (max - min) / step;
    let n = if (span - span.round()).abs() < 1e-9 * span.max(1.0) { span.round() } else { span.floor() } as usize;
    Ok((0..=n)
        .map(|i| {
            let r = min + i as f64 * step;
            if i == n && (r - max).abs() < 1e-9 * step {
                max
            } else {
                r
            }
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_table(
    kernel: KernelId,
    min: f64,
    max: f64,
    step: f64,
    derivatives: bool,
    gaussian: bool,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<i32> {
    if derivatives && kernel != KernelId::New6 {
        return Err(Error::UnsupportedSmoothness { kernel, order: 2 });
    }
    let mut header = vec!["r", "phi"];
    if derivatives {
        header.extend(["d1", "d2", "d3"]);
    }
    if gaussian {
        header.push("gauss");
    }
    let mut rows = Vec::new();
    for r in table_points(min, max, step)? {
        let mut row = vec![r, phi(kernel, r)?];
        if derivatives {
            for order in 1..=3 {
                row.push(phi_derivative(kernel, r, order)?);
            }
        }
        if gaussian {
            row.push(gaussian_match(r));
        }
        rows.push(row);
    }
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{}", header.join(","))?;
            for row in &rows {
                writeln!(out, "{}", row.iter().map(|v| g17(*v)).collect::<Vec<_>>().join(","))?;
            }
        }
        OutputFormat::Json => {
            let objects: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|row| header.iter().zip(row).map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect())
                .collect();
            write_json(&objects, out)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_audit(selection: KernelSelection, cfg: &AuditConfig, format: OutputFormat, out: &mut dyn Write) -> Result<i32> {
    let reports = selection.kernels().into_iter().map(|id| audit(id, cfg)).collect::<Result<Vec<AuditReport>>>()?;
    match format {
        OutputFormat::Json => match selection {
            KernelSelection::One(_) => write_json(&reports[0], out)?,
            KernelSelection::All => write_json(&reports, out)?,
        },
        OutputFormat::Csv => {
            writeln!(out, "kernel,check,expected,holds,max_violation,target,pass")?;
            for rep in &reports {
                for c in &rep.checks {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        rep.kernel,
                        c.name,
                        c.expected,
                        c.holds,
                        g17(c.max_violation),
                        c.target.map(g17).unwrap_or_default(),
                        c.pass
                    )?;
                }
                writeln!(out, "{},smoothness_class,,,,{},{}", rep.kernel, rep.smoothness_class, rep.all_pass)?;
                writeln!(out, "{},min_value,,,,{},{}", rep.kernel, g17(rep.min_value), rep.all_pass)?;
            }
        }
    }
    Ok(if reports.iter().all(|r| r.all_pass) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn with_suffix(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_bench(
    cfg: &BenchConfig,
    out_prefix: Option<PathBuf>,
    threads: Option<usize>,
    check: bool,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<i32> {
    cfg.validate()?;
    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?
            .install(|| run_bench(cfg))?,
        None => run_bench(cfg)?,
    };
    let summary: BenchSummary = result.summary()?;
    match out_prefix {
        Some(prefix) => {
            let mut f = create(with_suffix(&prefix, "-samples.csv"))?;
            result.write_samples_csv(&mut f)?;
            f.flush()?;
            let mut f = create(with_suffix(&prefix, "-stats.csv"))?;
            result.write_stats_csv(&mut f)?;
            f.flush()?;
            let mut f = create(with_suffix(&prefix, "-summary.json"))?;
            write_json(&summary, &mut f)?;
            f.flush()?;
        }
        None => match format {
            OutputFormat::Json => write_json(&summary, out)?,
            OutputFormat::Csv => result.write_stats_csv(&mut *out)?,
        },
    }
    let within = (summary.max_std - reference_max_std(cfg.kernel)).abs() <= BENCH_TOLERANCE * summary.reference_max_std;
    Ok(if check && !within { EXIT_CHECK_FAILED } else { EXIT_OK })
}

pub struct DemoOptions {
    pub kernel: KernelId,
    pub dims: [usize; 3],
    pub h: f64,
    pub markers: Option<PathBuf>,
    pub random: usize,
    pub seed: u64,
    pub field_out: Option<PathBuf>,
    pub field_in: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub kernel: KernelId,
    pub dims: [usize; 3],
    pub meshwidth: f64,
    pub markers: usize,
    /// `|<spread(F), u> h^3 - <F, interpolate(u)>|`.
    pub adjointness_residual: f64,
    /// `|sum(spread(F)) h^3 - sum(F)|`.
    pub conservation_residual: f64,
    pub total_force: f64,
}

fn open(path: &PathBuf) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn demo(opts: &DemoOptions) -> Result<(DemoReport, ScalarField3)> {
    let grid = PeriodicGrid3::new(opts.dims, opts.h)?;
    grid.check_kernel(opts.kernel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let extent = grid.extent();
    let (markers, values) = match &opts.markers {
        Some(path) => read_markers_csv(open(path)?)?,
        None => {
            let positions = (0..opts.random).map(|_| std::array::from_fn(|d| rng.gen::<f64>() * extent[d])).collect();
            (MarkerSet::new(positions)?, None)
        }
    };
    let values = values.unwrap_or_else(|| (0..markers.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let field = match &opts.field_in {
        Some(path) => read_field_csv(grid, open(path)?)?,
        None => {
            let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ScalarField3::from_values(grid, values)?
        }
    };
    let spread_field = spread(opts.kernel, &grid, &markers, &values)?;
    let interpolated = interpolate(opts.kernel, &grid, &field, &markers)?;
    let h3 = opts.h.powi(3);
    let lhs = spread_field.dot(&field) * h3;
    let rhs: f64 = values.iter().zip(&interpolated).map(|(f, u)| f * u).sum();
    let total_force: f64 = values.iter().sum();
    let report = DemoReport {
        kernel: opts.kernel,
        dims: opts.dims,
        meshwidth: opts.h,
        markers: markers.len(),
        adjointness_residual: (lhs - rhs).abs(),
        conservation_residual: (spread_field.sum() * h3 - total_force).abs(),
        total_force,
    };
    Ok((report, spread_field))
}

fn cmd_demo(opts: &DemoOptions, format: OutputFormat, out: &mut dyn Write) -> Result<i32> {
    let (report, field) = demo(opts)?;
    if let Some(path) = &opts.field_out {
        let mut f = create(path.clone())?;
        write_field_csv(&field, &mut f)?;
        f.flush()?;
    }
    match format {
        OutputFormat::Json => write_json(&report, out)?,
        OutputFormat::Csv => {
            writeln!(out, "kernel,n1,n2,n3,h,markers,adjointness_residual,conservation_residual,total_force")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                report.kernel,
                report.dims[0],
                report.dims[1],
                report.dims[2],
                g17(report.meshwidth),
                report.markers,
                g17(report.adjointness_residual),
                g17(report.conservation_residual),
                g17(report.total_force)
            )?;
        }
    }
    let ok = report.adjointness_residual < DEMO_TOLERANCE && report.conservation_residual < DEMO_TOLERANCE;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
