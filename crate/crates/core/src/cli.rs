//! Command-line front end. `run` parses arguments, dispatches, and maps
//! failures to exit codes: 1 for computation failures and failed checks, 2 for
//! usage and file errors.

use std::f64::consts::LN_2;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::armodel::{density_summary, simulate_path, ArModel, NoiseSequence, DEFAULT_GRID_POINTS};
use crate::error::Error;
use crate::rdfun::{log_grid, Prepared, RdPoint};
use crate::rootfind::{characteristic_roots_with, jensen_mean_log, log_correction, DEFAULT_CIRCLE_TOLERANCE};
use crate::toeplitz::{
    ar_gram_spectrum, finite_order_rd_from, identity_check_from, smallest_eigen_decay, theorem1_gap,
    toeplitz_of_g_spectrum, ClampRange, SpectrumSource, TestFunction,
};

pub const CSV_HEADER: &str =
    "theta,distortion,rate_kolmogorov,rate_autoregressive,rate_hashimoto_arimoto,gap,e_set_measure";

#[derive(Debug, Parser)]
#[command(
    name = "ratedist",
    version,
    about = "Rate-distortion functions of Gaussian AR sources"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    pub format: OutputFormat,
    #[arg(long, value_enum, default_value_t = RateUnit::Nats, global = true)]
    pub rate_unit: RateUnit,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateUnit {
    Nats,
    Bits,
}

impl RateUnit {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            RateUnit::Nats => nats,
            RateUnit::Bits => nats / LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixKind {
    ArGram,
    ToeplitzG,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the water level and emit one row per point.
    Curve(CurveArgs),
    /// A single point, by water level or by target distortion.
    Point(PointArgs),
    /// Zeros of the characteristic polynomial and the root correction.
    Roots(RootsArgs),
    /// Eigenvalues of the Gram matrix or of T_n(g).
    Eig(EigArgs),
    /// Run a verification suite and report each check.
    Verify(VerifyArgs),
    /// Simulate a sample path from seeded Gaussian noise.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub theta_min: Option<f64>,
    #[arg(long)]
    pub theta_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    /// Log-spaced grid (the default grid is always log-spaced).
    #[arg(long)]
    pub log: bool,
    /// Evaluate grid points on all cores; output is identical to the sequential run.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "level")]
pub struct PointLevel {
    #[arg(long, group = "level")]
    pub theta: Option<f64>,
    #[arg(long, group = "level")]
    pub distortion: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub level: PointLevel,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CIRCLE_TOLERANCE)]
    pub circle_tolerance: f64,
    /// Also write a model file rebuilt from the roots.
    #[arg(long)]
    pub emit_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = MatrixKind::ArGram)]
    pub matrix: MatrixKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gap,
    Theorem1,
    Identity,
    Decay,
    Convergence,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub model: PathBuf,
    /// Water levels (gap, identity, convergence).
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Matrix sizes (theorem1, identity, convergence, decay).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, default_value = "identity")]
    pub function: String,
    #[arg(long)]
    pub clamp_lo: Option<f64>,
    #[arg(long)]
    pub clamp_hi: Option<f64>,
    #[arg(long, value_enum, default_value_t = MatrixKind::ToeplitzG)]
    pub matrix: MatrixKind,
    /// Pass threshold for the final theorem1 gap or convergence error.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("verification failed")]
    ChecksFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) | CliError::ChecksFailed => 1,
            CliError::Usage(_) | CliError::File { .. } | CliError::Io(_) => 2,
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::ChecksFailed) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut out = Vec::new();
    let outcome = dispatch(cli, &mut out);
    // Verification output is written even when a check fails.
    if outcome.is_ok() || matches!(outcome, Err(CliError::ChecksFailed)) {
        match &cli.out {
            Some(path) => fs::write(path, &out).map_err(|e| CliError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            })?,
            None => io::stdout().write_all(&out)?,
        }
    }
    outcome
}

fn dispatch(cli: &Cli, out: &mut Vec<u8>) -> Result<(), CliError> {
    match &cli.command {
        Command::Curve(args) => curve(cli, args, out),
        Command::Point(args) => point(cli, args, out),
        Command::Roots(args) => roots(cli, args, out),
        Command::Eig(args) => eig(cli, args, out),
        Command::Verify(args) => verify(cli, args, out),
        Command::Simulate(args) => simulate(cli, args, out),
    }
}

pub fn load_model(path: &Path) -> Result<ArModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ArModel::from_json(&text).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// `[sigma^2 / (10 max g), 10 sigma^2 / max(min g, 1e-6 sigma^2)]`.
pub fn default_theta_range(model: &ArModel) -> Result<(f64, f64), Error> {
    let s = density_summary(model, DEFAULT_GRID_POINTS)?;
    let sigma2 = model.noise_variance();
    Ok((
        sigma2 / (10.0 * s.max_value),
        10.0 * sigma2 / s.min_value.max(sigma2 * 1e-6),
    ))
}

fn curve(cli: &Cli, args: &CurveArgs, out: &mut Vec<u8>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let (default_lo, default_hi) = default_theta_range(&model)?;
    let lo = args.theta_min.unwrap_or(default_lo);
    let hi = args.theta_max.unwrap_or(default_hi);
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(CliError::Usage(format!("invalid theta range [{lo}, {hi}]")));
    }
    if args.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let log_spaced = args.log || (args.theta_min.is_none() && args.theta_max.is_none());
    let mut grid = if log_spaced {
        log_grid(lo, hi, args.points)?
    } else {
        linear_grid(lo, hi, args.points)
    };
    grid.dedup();
    let prepared = Prepared::new(&model)?;
    let points = prepared.rd_curve(&grid, args.parallel)?;
    match cli.format {
        OutputFormat::Csv => emit_curve_csv(&points, cli.rate_unit, out)?,
        OutputFormat::Json => {
            let converted: Vec<RdPoint> = points.iter().map(|p| convert_point(p, cli.rate_unit)).collect();
            write_json(out, &converted)?;
        }
    }
    Ok(())
}

fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            }
        })
        .collect()
}

pub fn convert_point(p: &RdPoint, unit: RateUnit) -> RdPoint {
    RdPoint {
        rate_kolmogorov: unit.convert(p.rate_kolmogorov),
        rate_autoregressive: unit.convert(p.rate_autoregressive),
        rate_hashimoto_arimoto: unit.convert(p.rate_hashimoto_arimoto),
        gap: unit.convert(p.gap),
        ..*p
    }
}

/// Header plus one row per point; 17 significant digits in scientific notation.
pub fn emit_curve_csv<W: Write>(points: &[RdPoint], unit: RateUnit, sink: &mut W) -> io::Result<()> {
    writeln!(sink, "{CSV_HEADER}")?;
    for p in points {
        let p = convert_point(p, unit);
        writeln!(
            sink,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.theta,
            p.distortion,
            p.rate_kolmogorov,
            p.rate_autoregressive,
            p.rate_hashimoto_arimoto,
            p.gap,
            p.e_set_measure
        )?;
    }
    Ok(())
}

fn write_json<T: Serialize>(out: &mut Vec<u8>, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.into()))?;
    out.push(b'\n');
    Ok(())
}

fn point(cli: &Cli, args: &PointArgs, out: &mut Vec<u8>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let prepared = Prepared::new(&model)?;
    let theta = match (args.level.theta, args.level.distortion) {
        (Some(t), _) => t,
        (None, Some(d)) => prepared.theta_for_distortion(d)?,
        (None, None) => return Err(CliError::Usage("one of --theta or --distortion is required".into())),
    };
    let p = prepared.rd_point(theta)?;
    match cli.format {
        OutputFormat::Csv => emit_curve_csv(&[p], cli.rate_unit, out)?,
        OutputFormat::Json => write_json(out, &convert_point(&p, cli.rate_unit))?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RootRecord {
    re: f64,
    im: f64,
    modulus: f64,
    class: &'static str,
}

#[derive(Debug, Serialize)]
struct RootsReport {
    roots: Vec<RootRecord>,
    outside_count: usize,
    on_circle_count: usize,
    circle_tolerance: f64,
    log_correction: f64,
    jensen_mean_log: f64,
}

fn roots(cli: &Cli, args: &RootsArgs, out: &mut Vec<u8>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let set = characteristic_roots_with(&model, args.circle_tolerance)?;
    let tol = set.circle_tolerance;
    let records: Vec<RootRecord> = set
        .roots
        .iter()
        .zip(&set.moduli)
        .map(|(r, &m)| RootRecord {
            re: r.re,
            im: r.im,
            modulus: m,
            class: if m > 1.0 + tol {
                "outside"
            } else if m < 1.0 - tol {
                "inside"
            } else {
                "on_circle"
            },
        })
        .collect();
    let report = RootsReport {
        outside_count: set.outside_count,
        on_circle_count: set.on_circle_count,
        circle_tolerance: tol,
        log_correction: cli.rate_unit.convert(log_correction(&set)),
        jensen_mean_log: jensen_mean_log(&set),
        roots: records,
    };
    if let Some(path) = &args.emit_model {
        let rebuilt = ArModel::new(set.reconstruct_coeffs(), model.noise_variance())?;
        let text = serde_json::to_string_pretty(&rebuilt.to_file()).map_err(|e| CliError::Io(e.into()))?;
        fs::write(path, text + "\n").map_err(|e| CliError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    match cli.format {
        OutputFormat::Csv => {
            writeln!(out, "re,im,modulus,class")?;
            for r in &report.roots {
                writeln!(out, "{:.16e},{:.16e},{:.16e},{}", r.re, r.im, r.modulus, r.class)?;
            }
        }
        OutputFormat::Json => write_json(out, &report)?,
    }
    Ok(())
}

fn eig(cli: &Cli, args: &EigArgs, out: &mut Vec<u8>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let spectrum = match args.matrix {
        MatrixKind::ArGram => ar_gram_spectrum(&model, args.n)?,
        MatrixKind::ToeplitzG => toeplitz_of_g_spectrum(&model, args.n)?,
    };
    match cli.format {
        OutputFormat::Csv => {
            writeln!(out, "index,eigenvalue,log_eigenvalue")?;
            for (k, (e, l)) in spectrum.eigenvalues.iter().zip(&spectrum.log_eigenvalues).enumerate() {
                writeln!(out, "{k},{e:.16e},{l:.16e}")?;
            }
        }
        OutputFormat::Json => write_json(out, &spectrum)?,
    }
    Ok(())
}

fn simulate(cli: &Cli, args: &SimulateArgs, out: &mut Vec<u8>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let noise = NoiseSequence::gaussian(args.n, model.noise_variance(), args.seed)?;
    let path = simulate_path(&model, &noise)?;
    match cli.format {
        OutputFormat::Csv => {
            writeln!(out, "index,noise,value")?;
            for (k, (z, x)) in noise.values.iter().zip(&path.values).enumerate() {
                writeln!(out, "{},{z:.16e},{x:.16e}", k + 1)?;
            }
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Sim<'a> {
                seed: u64,
                noise: &'a [f64],
                values: &'a [f64],
            }
            write_json(
                out,
                &Sim {
                    seed: args.seed,
                    noise: &noise.values,
                    values: &path.values,
                },
            )?;
        }
    }
    Ok(())
}

/// One pass/fail line of a verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= threshold,
            value,
            threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn verify(cli: &Cli, args: &VerifyArgs, out: &mut Vec<u8>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let checks = match args.suite {
        Suite::Gap => verify_gap(&model, args)?,
        Suite::Theorem1 => verify_theorem1(&model, args)?,
        Suite::Identity => verify_identity(&model, args)?,
        Suite::Decay => verify_decay(&model, args)?,
        Suite::Convergence => verify_convergence(&model, args)?,
    };
    let report = Report {
        suite: format!("{:?}", args.suite).to_lowercase(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    match cli.format {
        OutputFormat::Csv => {
            writeln!(out, "check,pass,value,threshold")?;
            for c in &report.checks {
                writeln!(out, "{},{},{:.16e},{:.16e}", c.name, c.pass, c.value, c.threshold)?;
            }
        }
        OutputFormat::Json => write_json(out, &report)?,
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}

fn thetas_or_default(model: &ArModel, given: &[f64]) -> Result<Vec<f64>, CliError> {
    if !given.is_empty() {
        return Ok(given.to_vec());
    }
    let (lo, hi) = default_theta_range(model)?;
    Ok(log_grid(lo, hi, 5)?)
}

fn sizes_or(given: &[usize], default: &[usize]) -> Result<Vec<usize>, CliError> {
    let n = if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    };
    if n.contains(&0) || n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("--n values must be positive and increasing".into()));
    }
    Ok(n)
}

fn verify_gap(model: &ArModel, args: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let prepared = Prepared::new(model)?;
    let correction = log_correction(prepared.roots());
    let gap = prepared.formula_gap()?;
    let mut checks = vec![Check::at_most(
        "formula_gap_vs_log_correction",
        (gap - correction).abs(),
        1e-6,
    )];
    for theta in thetas_or_default(model, &args.theta)? {
        let p = prepared.rd_point(theta)?;
        checks.push(Check::at_most(
            format!("rate_ar_vs_rate_ha@theta={theta:e}"),
            (p.rate_autoregressive - p.rate_hashimoto_arimoto).abs(),
            1e-6,
        ));
    }
    Ok(checks)
}

fn verify_theorem1(model: &ArModel, args: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let f: TestFunction = args.function.parse()?;
    let summary = density_summary(model, DEFAULT_GRID_POINTS)?;
    let range = ClampRange::new(
        args.clamp_lo.unwrap_or(summary.min_value),
        args.clamp_hi.unwrap_or(summary.max_value),
    )?;
    let source = match args.matrix {
        MatrixKind::ArGram => SpectrumSource::ArGram,
        MatrixKind::ToeplitzG => SpectrumSource::ToeplitzOfG,
    };
    let sizes = sizes_or(&args.n, &[128, 256, 512])?;
    let mut gaps = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        gaps.push((n, theorem1_gap(model, f, range, n, source)?));
    }
    let mut checks = Vec::new();
    for w in gaps.windows(2) {
        let ((n0, g0), (n1, g1)) = (w[0], w[1]);
        checks.push(Check::at_most(format!("gap(n={n1})-gap(n={n0})"), g1 - g0, 1e-9));
    }
    let &(n_last, g_last) = gaps.last().expect("nonempty sizes");
    checks.push(Check::at_most(
        format!("gap(n={n_last})"),
        g_last,
        args.tolerance.unwrap_or(0.05),
    ));
    Ok(checks)
}

fn verify_identity(model: &ArModel, args: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let sizes = sizes_or(&args.n, &[4, 16, 64])?;
    let thetas = thetas_or_default(model, &args.theta)?;
    let mut checks = Vec::new();
    for &n in &sizes {
        let spectrum = ar_gram_spectrum(model, n)?;
        for &theta in &thetas {
            let (lhs, rhs) = identity_check_from(&spectrum, model.noise_variance(), theta)?;
            checks.push(Check::at_most(
                format!("identity@n={n},theta={theta:e}"),
                (lhs - rhs).abs() / (1.0 + lhs.abs()),
                1e-10,
            ));
        }
    }
    Ok(checks)
}

fn verify_decay(model: &ArModel, args: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let default: Vec<usize> = (20..=60).step_by(5).collect();
    let sizes = sizes_or(&args.n, &default)?;
    let report = smallest_eigen_decay(model, &sizes)?;
    let mut checks: Vec<Check> = report
        .fits
        .iter()
        .enumerate()
        .map(|(l, fit)| {
            Check::at_most(
                format!("slope[{l}]={:.6}_vs_{:.6}", fit.slope, fit.predicted_slope),
                ((fit.slope - fit.predicted_slope) / fit.predicted_slope).abs(),
                0.02,
            )
        })
        .collect();
    if let Some(floor) = report.bulk_floor {
        let bound = args.tolerance.unwrap_or(1e-3);
        checks.push(Check {
            name: "bulk_floor".into(),
            pass: floor >= bound,
            value: floor,
            threshold: bound,
        });
    }
    Ok(checks)
}

fn verify_convergence(model: &ArModel, args: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let sizes = sizes_or(&args.n, &[128, 256, 512])?;
    let theta = match args.theta.as_slice() {
        [] => 1.0,
        [t] => *t,
        _ => return Err(CliError::Usage("convergence takes a single --theta".into())),
    };
    let limit = Prepared::new(model)?.rate_autoregressive(theta)?;
    let mut errors = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let spectrum = ar_gram_spectrum(model, n)?;
        let (_, rate) = finite_order_rd_from(&spectrum, theta)?;
        errors.push((n, (rate - limit).abs()));
    }
    let mut checks = Vec::new();
    for w in errors.windows(2) {
        let ((n0, e0), (n1, e1)) = (w[0], w[1]);
        checks.push(Check {
            name: format!("error(n={n1})<error(n={n0})"),
            pass: e1 < e0,
            value: e1,
            threshold: e0,
        });
    }
    let &(n_last, e_last) = errors.last().expect("nonempty sizes");
    checks.push(Check::at_most(
        format!("error(n={n_last})"),
        e_last,
        args.tolerance.unwrap_or(0.02),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdfun::rd_point;

    fn csv(points: &[RdPoint], unit: RateUnit) -> String {
        let mut sink = Vec::new();
        emit_curve_csv(points, unit, &mut sink).unwrap();
        String::from_utf8(sink).unwrap()
    }

    #[test]
    fn empty_curve_is_header_only() {
        assert_eq!(csv(&[], RateUnit::Nats), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn white_noise_row() {
        let m = ArModel::white_noise(1.0).unwrap();
        let text = csv(&[rd_point(&m, 0.25).unwrap()], RateUnit::Nats);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[1], "2.5000000000000000e-1");
        assert_eq!(fields[2], fields[3]);
        assert_eq!(fields[3], fields[4]);
        let rate: f64 = fields[2].parse().unwrap();
        assert!((rate - 4f64.ln() / 2.0).abs() < 1e-15);
        let fields: Vec<f64> = fields.iter().map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[5], 0.0);
    }

    #[test]
    fn rows_follow_points_and_round_trip() {
        let m = ArModel::new(vec![1.0, -2.0], 1.0).unwrap();
        let pts = vec![rd_point(&m, 0.1).unwrap(), rd_point(&m, 1.0).unwrap()];
        let text = csv(&pts, RateUnit::Bits);
        assert_eq!(text.lines().count(), 3);
        let second: Vec<f64> = text
            .lines()
            .nth(2)
            .unwrap()
            .split(',')
            .map(|f| f.parse().unwrap())
            .collect();
        assert_eq!(second[0], pts[1].theta);
        assert_eq!(second[1], pts[1].distortion);
        assert_eq!(second[3], pts[1].rate_autoregressive / LN_2);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(
            run([
                "ratedist",
                "point",
                "--model",
                "m.json",
                "--theta",
                "1",
                "--distortion",
                "1"
            ]),
            2
        );
        assert_eq!(run(["ratedist", "curve"]), 2);
        assert_eq!(run(["ratedist", "--help"]), 0);
    }
}
