//! Command-line front end: argument parsing, config files, artifact headers
//! and the exit-code table.

use std::ffi::OsString;
use std::f64::consts::TAU;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::branches::BranchSolveConfig;
use crate::dynamics::{fmt_complex, CylinderPoint, FamilyParams};
use crate::error::{Error, Result};
use crate::ifs::{ifs_pressure_bound, IfsConfig};
use crate::measures::{linear_fit, lyapunov, measure_run, radial_mass_check, standard_observables, AtomConfig, Observable};
use crate::pressure::{
    bowen_dimension, csv_row, pressure_curve, pressure_power, sci, BowenConfig, Estimator, GridConfig, TreeConfig, TreeReadout, CURVE_HEADER,
};
use crate::render::{render, write_image_with, ImageFormat, ViewMode, ViewSpec};
use crate::transfer::{TailRule, TruncationBudget};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const WORKERS_ENV: &str = "BAKER_THERMO_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "baker-thermo", version, about = "Dynamics, pressure and dimension estimates for f(z) = λ + ℓz − e^z")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify pixels of a plane or cylinder view and write an image.
    #[command(args_override_self = true)]
    Render(RenderArgs),
    /// Pressure P(t) at one t.
    #[command(args_override_self = true)]
    Pressure(PressureArgs),
    /// Pressure on a uniform t grid, as CSV.
    #[command(args_override_self = true)]
    PressureCurve(CurveArgs),
    /// Zero of the pressure function by bisection.
    #[command(args_override_self = true)]
    Dimension(DimensionArgs),
    /// Inclusion and derivative checks for the truncated system H_R.
    #[command(args_override_self = true)]
    Ifs(IfsArgs),
    /// Conformal atoms, tail masses, invariance residuals and χ.
    #[command(args_override_self = true)]
    Measure(MeasureArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Worker threads; falls back to BAKER_THERMO_WORKERS. Never changes results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// File of `key = value` lines using the flag names; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Family {
    #[arg(long)]
    pub ell: u32,
    /// `re[,im]`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub c: Complex64,
}

impl Family {
    fn params(&self) -> Result<FamilyParams> {
        FamilyParams::new(self.ell, self.c)
    }

    fn header(&self) -> Vec<(&'static str, String)> {
        vec![("ell", self.ell.to_string()), ("c", fmt_complex(self.c))]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Plane,
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Ppm,
    Png,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Tree,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReadoutArg {
    /// (1/n)·log 𝓛ⁿ1.
    Cesaro,
    /// Aitken limit of the step growth rates.
    Extrapolated,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub family: Family,
    #[arg(long, value_enum, default_value = "plane")]
    pub view: ViewArg,
    /// `x0,x1,y0,y1`; defaults to [−12,6]×[−8,8] (plane) or [−12,6]×[0,2π] (cylinder).
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<[f64; 4]>,
    /// `WxH`.
    #[arg(long, value_parser = parse_size, default_value = "160x120")]
    pub size: (usize, usize),
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-pixel labels CSV.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Defaults to the extension of `--out`, else ppm.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "tree")]
    pub method: MethodArg,
    /// Tree depth.
    #[arg(long, default_value_t = 7)]
    pub depth: usize,
    /// Which tree quantity is reported as the pressure.
    #[arg(long, value_enum, default_value = "cesaro")]
    pub readout: ReadoutArg,
    /// Power-iteration limit.
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Tree: per-application truncation tolerance (chooses the window and
    /// tail rule). Grid: eigen-residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tree base point `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "2,1")]
    pub base: Complex64,
}

impl EstimatorArgs {
    fn header(&self) -> Vec<(&'static str, String)> {
        let mut h = vec![("method", format!("{:?}", self.method).to_lowercase())];
        match self.method {
            MethodArg::Tree => {
                h.push(("depth", self.depth.to_string()));
                h.push(("readout", format!("{:?}", self.readout).to_lowercase()));
                h.push(("base", fmt_complex(self.base)));
            }
            MethodArg::Grid => h.push(("iters", self.iters.to_string())),
        }
        h.push(("tol", self.tol.map_or("default".into(), |v| v.to_string())));
        h
    }

    /// `t_ref` picks the tree rule when `--tol` is given.
    fn build(&self, p: &FamilyParams, t_ref: f64) -> Result<Estimator> {
        match self.method {
            MethodArg::Tree => {
                let readout = match self.readout {
                    ReadoutArg::Cesaro => TreeReadout::Cesaro,
                    ReadoutArg::Extrapolated => TreeReadout::Extrapolated,
                };
                let mut est = Estimator::tree(p, self.depth, CylinderPoint::new(self.base.re, self.base.im))?.with_readout(readout);
                if let (Some(tol), Estimator::Tree { window, tail_nodes, .. }) = (self.tol, &mut est) {
                    let b = TruncationBudget::for_tolerance(t_ref, p, tol)?;
                    *window = b.window;
                    if let TailRule::Laguerre(q) = b.tail {
                        *tail_nodes = q;
                    }
                }
                Ok(est)
            }
            MethodArg::Grid => {
                let mut cfg = GridConfig {
                    iters: self.iters,
                    ..GridConfig::default()
                };
                if let Some(tol) = self.tol {
                    cfg.tol = tol;
                }
                Estimator::grid(p, cfg)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct PressureArgs {
    #[command(flatten)]
    pub family: Family,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Also write the CSV row here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub family: Family,
    #[arg(long, default_value_t = 1.1)]
    pub t_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub family: Family,
    #[arg(long, default_value_t = 1e-3)]
    pub tol_t: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct IfsArgs {
    #[command(flatten)]
    pub family: Family,
    #[arg(long = "R")]
    pub r: f64,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Per-branch CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub family: Family,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "2,1")]
    pub base: Complex64,
    #[arg(long)]
    pub atoms_out: Option<PathBuf>,
    /// Also estimate χ over the bases 2+1i and 0+3i.
    #[arg(long)]
    pub lyapunov: bool,
    #[command(flatten)]
    pub common: Common,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    match parts[..] {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected re[,im], got `{s}`")),
    }
}

fn parse_window(s: &str) -> std::result::Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 4]>::try_from(v).map_err(|_| format!("expected x0,x1,y0,y1, got `{s}`"))
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let n = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok((n(w)?, n(h)?))
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::OutsideTheoryRegime { .. } => 2,
        Error::Io { .. } => 1,
        Error::SeriesDivergence { .. } | Error::TailUnresolved { .. } => 3,
        Error::BudgetExceeded { .. } => 4,
        Error::NoSignChange { .. } => 5,
        Error::BoundViolated { .. } => 6,
        _ => 7,
    }
}

/// Splices `key = value` lines from `--config` in front of the explicit flags
/// of the subcommand, so that explicit flags override them.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    if argv.len() < 2 {
        return Ok(argv);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "config" {
            return Err(Error::InvalidParams("config files cannot nest".into()));
        }
        match v {
            "true" => extra.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => extra.push(OsString::from(format!("--{k}={v}"))),
        }
    }
    let mut out = argv[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

/// Header lines written at the top of every artifact.
fn header(command: &str, fields: Vec<(&'static str, String)>) -> Vec<String> {
    let mut out = vec![format!("baker-thermo {VERSION}"), format!("command = {command}")];
    out.extend(fields.into_iter().map(|(k, v)| format!("{k} = {v}")));
    out
}

fn with_comments(header: &[String], body: &str) -> String {
    let mut s: String = header.iter().map(|h| format!("# {h}\n")).collect();
    s.push_str(body);
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn workers(common: &Common) -> Result<Option<usize>> {
    let n = match common.workers {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::InvalidParams(format!("{WORKERS_ENV}={v} is not a count")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(Error::InvalidParams("worker count must be positive".into()));
    }
    Ok(n)
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Render(a) => &a.common,
        Command::Pressure(a) => &a.common,
        Command::PressureCurve(a) => &a.common,
        Command::Dimension(a) => &a.common,
        Command::Ifs(a) => &a.common,
        Command::Measure(a) => &a.common,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status.
pub fn main_with<I: IntoIterator<Item = OsString>>(argv: I) -> i32 {
    let argv = match expand_config(argv.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<()> {
    let run = || match cmd {
        Command::Render(a) => cmd_render(a),
        Command::Pressure(a) => cmd_pressure(a),
        Command::PressureCurve(a) => cmd_curve(a),
        Command::Dimension(a) => cmd_dimension(a),
        Command::Ifs(a) => cmd_ifs(a),
        Command::Measure(a) => cmd_measure(a),
    };
    match workers(common(cmd))? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn warn_regime(p: &FamilyParams) {
    if !p.theory_regime() {
        eprintln!(
            "warning: ell = {}, c = {} is outside the regime ell >= 2, |c - ell| < 1; labels are still definitional",
            p.ell(),
            fmt_complex(p.c())
        );
    }
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let p = a.family.params()?;
    warn_regime(&p);
    let (mode, default) = match a.view {
        ViewArg::Plane => (ViewMode::Plane, [-12.0, 6.0, -8.0, 8.0]),
        ViewArg::Cylinder => (ViewMode::Cylinder, [-12.0, 6.0, 0.0, TAU]),
    };
    let w = a.window.unwrap_or(default);
    let spec = ViewSpec::new(mode, (w[0], w[1]), (w[2], w[3]), a.size.0, a.size.1, a.max_iter)?;
    let format = match a.format {
        Some(FormatArg::Png) => ImageFormat::Png,
        Some(FormatArg::Ppm) => ImageFormat::Ppm,
        None => match a.out.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => ImageFormat::Png,
            _ => ImageFormat::Ppm,
        },
    };
    let mut fields = a.family.header();
    fields.extend([
        ("view", format!("{:?}", a.view).to_lowercase()),
        ("window", w.map(|x| x.to_string()).join(",")),
        ("size", format!("{}x{}", a.size.0, a.size.1)),
        ("max-iter", a.max_iter.to_string()),
    ]);
    let head = header("render", fields);
    let img = render(&p, &spec)?;
    write_image_with(&img, &a.out, format, &head)?;
    if let Some(path) = &a.labels {
        write_text(path, &with_comments(&head, &img.labels_csv()))?;
    }
    let undecided = img.fraction(|l| l == crate::render::Label::Undecided);
    println!("wrote {} ({}x{}, undecided fraction {:.4})", a.out.display(), a.size.0, a.size.1, undecided);
    Ok(())
}

fn cmd_pressure(a: &PressureArgs) -> Result<()> {
    let p = a.family.params()?;
    if !(a.t > 1.0) {
        return Err(Error::SeriesDivergence { t: a.t });
    }
    let est = a.estimator.build(&p, a.t)?.estimate(a.t)?;
    let body = format!("{CURVE_HEADER}\n{}\n", csv_row(&est));
    print!("{body}");
    if let Some(out) = &a.out {
        let mut fields = a.family.header();
        fields.push(("t", a.t.to_string()));
        fields.extend(a.estimator.header());
        write_text(out, &with_comments(&header("pressure", fields), &body))?;
    }
    Ok(())
}

fn cmd_curve(a: &CurveArgs) -> Result<()> {
    let p = a.family.params()?;
    if a.steps == 0 || !(a.t_max >= a.t_min) {
        return Err(Error::InvalidParams(format!(
            "need steps >= 1 and t-max >= t-min, got {} steps on [{}, {}]",
            a.steps, a.t_min, a.t_max
        )));
    }
    if !(a.t_min > 1.0) {
        return Err(Error::SeriesDivergence { t: a.t_min });
    }
    let grid: Vec<f64> = match a.steps {
        1 => vec![a.t_min],
        n => (0..n).map(|i| a.t_min + (a.t_max - a.t_min) * i as f64 / (n - 1) as f64).collect(),
    };
    let est = a.estimator.build(&p, a.t_min)?;
    let curve = pressure_curve(&est, &grid);
    let body = curve.to_csv();
    print!("{body}");
    if let Some(out) = &a.out {
        let mut fields = a.family.header();
        fields.extend([
            ("t-min", a.t_min.to_string()),
            ("t-max", a.t_max.to_string()),
            ("steps", a.steps.to_string()),
        ]);
        fields.extend(a.estimator.header());
        write_text(out, &with_comments(&header("pressure-curve", fields), &body))?;
    }
    if let Some(e) = curve.points.into_iter().find_map(|pt| pt.estimate.err()) {
        return Err(e);
    }
    Ok(())
}

fn cmd_dimension(a: &DimensionArgs) -> Result<()> {
    let p = a.family.params()?;
    p.require_theory_regime()?;
    let est = a.estimator.build(&p, 1.5)?;
    let d = bowen_dimension(
        &est,
        &BowenConfig {
            tol_t: a.tol_t,
            ..BowenConfig::default()
        },
    )?;
    println!("t* = {:.6} ± {:.6}", d.t_star, d.bracket() / 2.0);
    println!("bracket = [{:.6}, {:.6}], P(lo) = {}, P(hi) = {}", d.lo, d.hi, sci(d.p_lo), sci(d.p_hi));
    println!("in_open_interval_1_2 = {}", d.in_unit_interval());
    println!("monotone_samples = {}", d.monotone());
    Ok(())
}

fn cmd_ifs(a: &IfsArgs) -> Result<()> {
    let p = a.family.params()?;
    p.require_theory_regime()?;
    let cfg = IfsConfig::new(a.r, a.samples)?;
    let report = ifs_pressure_bound(&cfg, &p, &BranchSolveConfig::default())?;
    if let Some(out) = &a.out {
        let mut fields = a.family.header();
        fields.extend([("R", a.r.to_string()), ("samples", a.samples.to_string())]);
        write_text(out, &with_comments(&header("ifs", fields), &report.to_csv()))?;
    }
    println!("branches = {} (k in [{}, {}])", report.branches_checked, cfg.k_lo, cfg.k_hi);
    println!("inclusion_verified = {}", report.inclusion_verified);
    println!("derivative_floor_1_over_10k = ok");
    println!("P_R(1) >= {:.6}", report.pressure_lower);
    println!("log_sum_floor = {:.6}", report.floor_sum_log);
    println!("R_minus_ln10 = {:.6}", report.log10_floor);
    println!("meets_R_minus_ln10 = {}", report.meets_log10_floor());
    Ok(())
}

fn kv(name: &str, v: impl Display) {
    println!("  {name} = {v}");
}

fn cmd_measure(a: &MeasureArgs) -> Result<()> {
    let p = a.family.params()?;
    p.require_theory_regime()?;
    let cfg = AtomConfig {
        tree: TreeConfig {
            depth: a.depth,
            ..AtomConfig::default().tree
        },
        ..AtomConfig::default()
    };
    let psi = pressure_power(a.t, &p, &GridConfig::default())?.psi;
    let obs = standard_observables();
    let tests: Vec<Observable<'_>> = obs.iter().map(|g| g as Observable<'_>).collect();
    let base = CylinderPoint::new(a.base.re, a.base.im);
    let run = measure_run(a.t, base, &p, &cfg, Some(&psi), &tests)?;
    if let Some(out) = &a.atoms_out {
        let mut fields = a.family.header();
        fields.extend([
            ("t", a.t.to_string()),
            ("depth", a.depth.to_string()),
            ("base", fmt_complex(a.base)),
        ]);
        write_text(out, &with_comments(&header("measure", fields), &run.atoms.to_csv()))?;
    }
    let ms: Vec<f64> = (6..=14).map(f64::from).collect();
    let tails = radial_mass_check(&run.atoms, &ms);
    let pts: Vec<(f64, f64)> = tails.iter().filter(|x| x.1 > 0.0).map(|&(m, v)| (m, v.ln())).collect();
    let (slope, _, r2) = linear_fit(&pts);
    println!("measure {{");
    kv("t", a.t);
    kv("n", a.depth);
    kv("atoms", run.atoms.atoms.len());
    kv("normalizer", sci(run.atoms.provenance.normalizer));
    for (m, v) in &tails {
        kv(&format!("tail[M={m}]"), sci(*v));
    }
    kv("tail_slope", format!("{slope:.6} (1 - t = {:.6}, r2 = {r2:.6})", 1.0 - a.t));
    if let Some(m) = &run.moments {
        for (i, r) in m.invariance_residuals().iter().enumerate() {
            kv(&format!("invariance_residual[g{}]", i + 1), sci(*r));
        }
        kv("chi_base", format!("{:.6}", m.log_deriv));
    }
    if a.lyapunov {
        let bases = [CylinderPoint::new(2.0, 1.0), CylinderPoint::new(0.0, 3.0)];
        let l = lyapunov(a.t, &p, &bases, &cfg, &psi)?;
        kv("chi", format!("{:.6}", l.chi));
        kv("chi_stderr", format!("{:.6}", l.stderr));
        kv("chi_dispersion", format!("{:.6}", l.dispersion()));
    }
    println!("}}");
    Ok(())
}
