//! The `orbital` command line.
//!
//! Exit codes: 0 on success, 1 when the configuration is invalid or a
//! verification bound is missed, 2 on any other error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use orbital::io::{
    export_atoms_csv, export_cdf_csv, export_samples_csv, load_config_file, render_density, truncation_metadata,
    write_atomic, write_closed_interval_csv, write_escape_csv, write_samples_csv, Scale, SystemConfig,
};
use orbital::{
    additivity_check, chaos_game_restart, depth_for_tolerance, enumerate_series_with, exercise_closed_interval_probe,
    exercise_escape_study, fixed_point_residual, neumann_iterate, residual_bound, sample_orbital, support_diameter,
    uniqueness_probe_with, BoundingBox, DiscreteMeasure, Error, Point, SeriesOptions, TruncatedOrbital,
};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "orbital", version, about = "Orbital measures of iterated function systems with condensation")]
struct Cli {
    /// Report errors as one JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a configuration file.
    Validate { config: PathBuf },
    /// Compute a truncation of the series and write its atoms.
    Build(BuildArgs),
    /// Draw samples from the orbital measure.
    Sample(SampleArgs),
    /// Check the fixed-point residual, uniqueness and additivity bounds.
    Verify(VerifyArgs),
    /// Tabulate the escape of mass for the map x -> 1/2 + x/2.
    StudyExercise(StudyArgs),
    /// Render a planar orbital measure as a PGM image.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
struct DepthArgs {
    /// Maximum address length.
    #[arg(long, conflicts_with = "tol")]
    depth: Option<usize>,
    /// Tail mass tolerance; picks the smallest sufficient depth.
    #[arg(long)]
    tol: Option<f64>,
}

impl DepthArgs {
    fn resolve(&self, cfg: &SystemConfig) -> orbital::Result<usize> {
        match (self.depth, self.tol) {
            (Some(d), _) => Ok(d),
            (None, Some(eps)) => depth_for_tolerance(cfg.system().q(), eps),
            (None, None) => cfg.depth(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RouteArg {
    Enum,
    Neumann,
}

#[derive(Args, Debug)]
struct BuildArgs {
    config: PathBuf,
    #[command(flatten)]
    depth: DepthArgs,
    #[arg(long, value_enum, default_value = "enum")]
    route: RouteArg,
    /// Atom CSV output; metadata goes to `<out>.meta.jsonl`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the cumulative distribution (one-dimensional systems).
    #[arg(long)]
    cdf: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Exact,
    Chaos,
}

#[derive(Args, Debug)]
struct SampleArgs {
    config: PathBuf,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    /// Chaos-game steps between recorded states.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    config: PathBuf,
    #[command(flatten)]
    depth: DepthArgs,
}

#[derive(Args, Debug)]
struct StudyArgs {
    config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.01,0.001")]
    ps: Vec<f64>,
    #[arg(long, default_value_t = 0.9)]
    x: f64,
    /// Tabulate W1 to the point mass at 1 instead.
    #[arg(long)]
    closed: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    config: PathBuf,
    #[command(flatten)]
    depth: DepthArgs,
    /// Image size, e.g. 512x512.
    #[arg(long, default_value = "256x256", value_parser = parse_res)]
    res: [usize; 2],
    /// xmin,ymin,xmax,ymax (default: the support, padded by 2%).
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    r#box: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "log")]
    scale: ScaleArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

fn parse_res(s: &str) -> Result<[usize; 2], String> {
    let (w, h) = s.split_once(['x', 'X', '×']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let (w, h) = (parse(w)?, parse(h)?);
    if w == 0 || h == 0 {
        return Err("resolution must be positive".into());
    }
    Ok([w, h])
}

/// Failure of a command, carrying its exit code.
enum Failure {
    Lib(Error),
    Bounds(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

/// Runs the CLI with the process's stdout and stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI, writing reports to `out` and diagnostics to `err`.
pub fn run_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_RUNTIME } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let json_errors = cli.json_errors;
    let (mut out_buf, mut err_buf) = (Vec::new(), Vec::new());
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, &mut out_buf, &mut err_buf)),
            Err(e) => Err(Failure::Lib(Error::InvalidArgument(format!("thread pool: {e}")))),
        },
        None => dispatch(cli.command, &mut out_buf, &mut err_buf),
    };
    let _ = out.write_all(&out_buf).and_then(|_| out.flush());
    let _ = err.write_all(&err_buf);
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => report(f, json_errors, err),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Schema(_) | Error::InvalidSystem(_) => EXIT_INVALID,
        _ => EXIT_RUNTIME,
    }
}

fn report(f: Failure, json_errors: bool, err: &mut dyn Write) -> i32 {
    let (code, kind, message, extra) = match &f {
        Failure::Bounds(msg) => (EXIT_INVALID, "bounds", msg.clone(), Value::Null),
        Failure::Lib(e) => {
            let extra = match e {
                Error::Parse { line, column, .. } => json!({ "line": line, "column": column }),
                Error::Schema(v) | Error::InvalidSystem(v) => json!({
                    "violations": v.iter().map(|x| json!({
                        "field": x.field,
                        "kind": format!("{:?}", x.kind),
                        "reason": x.reason,
                    })).collect::<Vec<_>>()
                }),
                _ => Value::Null,
            };
            let kind = match e {
                Error::Parse { .. } => "parse",
                Error::Schema(_) | Error::InvalidSystem(_) => "schema",
                Error::Io(_) | Error::Csv(_) => "io",
                _ => "runtime",
            };
            (exit_code(e), kind, e.to_string(), extra)
        }
    };
    if json_errors {
        let mut obj = json!({ "error": kind, "message": message, "exit_code": code });
        if let (Value::Object(o), Value::Object(x)) = (&mut obj, extra) {
            o.extend(x);
        }
        let _ = writeln!(err, "{obj}");
    } else {
        match &f {
            Failure::Lib(Error::Schema(v)) | Failure::Lib(Error::InvalidSystem(v)) => {
                let _ = writeln!(err, "error: invalid configuration");
                for x in v.iter() {
                    let _ = writeln!(err, "  {x}");
                }
            }
            _ => {
                let _ = writeln!(err, "error: {message}");
            }
        }
    }
    code
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Validate { config } => validate(&config, out),
        Command::Build(a) => build(a, out),
        Command::Sample(a) => sample(a, out),
        Command::Verify(a) => verify(a, out),
        Command::StudyExercise(a) => study(a, out),
        Command::Render(a) => render(a, out, err),
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Lib(Error::Io(e))
}

fn validate(path: &Path, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config_file(path)?;
    let sys = cfg.system();
    writeln!(
        out,
        "{}",
        json!({
            "valid": true,
            "dimension": cfg.dimension,
            "maps": cfg.maps.len(),
            "p": sys.p(),
            "q": sys.q(),
            "mu0_atoms": sys.mu0().len(),
        })
    )
    .map_err(io_err)
}

fn truncate(cfg: &SystemConfig, depth: usize, route: RouteArg) -> orbital::Result<TruncatedOrbital<f64>> {
    match route {
        RouteArg::Enum => enumerate_series_with(
            cfg.system(),
            depth,
            &SeriesOptions { weight_floor: cfg.run.weight_floor, term_budget: cfg.run.term_budget },
        ),
        RouteArg::Neumann => neumann_iterate(cfg.system(), depth, cfg.run.prune_tol),
    }
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.jsonl");
    PathBuf::from(s)
}

fn write_meta(path: &Path, meta: &Value) -> orbital::Result<()> {
    write_atomic(&meta_path(path), |w| Ok(writeln!(w, "{meta}")?))
}

fn build(a: BuildArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config_file(&a.config)?;
    let depth = a.depth.resolve(&cfg)?;
    let t = truncate(&cfg, depth, a.route)?;
    let meta = truncation_metadata(&t, cfg.system().p(), cfg.system().q());
    let target = a.out.or_else(|| cfg.run.out.as_ref().map(PathBuf::from));
    if let Some(path) = &target {
        export_atoms_csv(&t.measure, path)?;
        write_meta(path, &meta)?;
    }
    if let Some(path) = &a.cdf {
        export_cdf_csv(&t.measure, path)?;
    }
    writeln!(out, "{meta}").map_err(io_err)
}

fn sample(a: SampleArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config_file(&a.config)?;
    let seed = a.seed.unwrap_or(cfg.run.seed);
    let count = a.count.unwrap_or(cfg.run.count);
    let stride = a.stride.unwrap_or(cfg.run.stride);
    let batch = match a.method {
        Method::Exact => sample_orbital(cfg.system(), &cfg.mu0, seed, count)?,
        Method::Chaos => chaos_game_restart(cfg.system(), &cfg.mu0, seed, count, stride)?,
    };
    let method = match a.method {
        Method::Exact => "exact",
        Method::Chaos => "chaos",
    };
    let meta = json!({
        "method": method,
        "seed": batch.seed,
        "count": batch.count,
        "stride": stride,
        "generator": batch.generator_id,
    });
    match a.out.or_else(|| cfg.run.out.as_ref().map(PathBuf::from)) {
        Some(path) => {
            export_samples_csv(&batch, &path)?;
            write_meta(&path, &meta)?;
            writeln!(out, "{meta}").map_err(io_err)
        }
        None => Ok(write_samples_csv(&batch, out)?),
    }
}

const ADDITIVITY_RESOLUTIONS: [usize; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];
const ADDITIVITY_TOL: f64 = 1e-12;
const UNIQUENESS_SLACK: f64 = 1e-9;

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config_file(&a.config)?;
    let sys = cfg.system();
    let depth = a.depth.resolve(&cfg)?;
    let t = truncate(&cfg, depth, RouteArg::Enum)?;

    let residual = fixed_point_residual(sys, &t.measure)?;
    let next = orbital::condensation_step(sys, &t.measure)?;
    let diam = support_diameter(&[&t.measure, &next]);
    let bound = residual_bound(sys, &t.measure, depth)? + 2.0 * t.pruned_mass * diam;
    let residual_ok = residual <= bound + f64::EPSILON * 16.0;

    let sb = t.measure.support_box();
    let corner = |hi: bool| -> orbital::Result<Point<f64>> {
        Point::from_slice(if hi { sb.hi() } else { sb.lo() })
    };
    let starts = vec![
        sys.mu0().clone(),
        DiscreteMeasure::dirac(corner(false)?),
        DiscreteMeasure::dirac(corner(true)?),
    ];
    let u = uniqueness_probe_with(sys, &starts, depth, cfg.run.prune_tol)?;
    let uniqueness_ok = u.within_bound(UNIQUENESS_SLACK);

    let bbox = sb.padded(0.01);
    let add = additivity_check(&t.measure, &bbox, &ADDITIVITY_RESOLUTIONS)?;
    let additivity_ok = add.max_abs_gap <= ADDITIVITY_TOL;

    let report = json!({
        "depth": depth,
        "residual": { "value": residual, "bound": bound, "ok": residual_ok },
        "uniqueness": {
            "max_distance": u.max_distance,
            "bound": u.bound,
            "rigorous": cfg.run.prune_tol == 0.0,
            "ok": uniqueness_ok,
        },
        "additivity": { "max_gap": add.max_abs_gap, "tolerance": ADDITIVITY_TOL, "ok": additivity_ok },
    });
    writeln!(out, "{report}").map_err(io_err)?;
    if residual_ok && uniqueness_ok && additivity_ok {
        Ok(())
    } else {
        Err(Failure::Bounds("verification bound not met".into()))
    }
}

fn study(a: StudyArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config_file(&a.config)?;
    let mut buf = Vec::new();
    if a.closed {
        let rows = exercise_closed_interval_probe(&a.ps, &cfg.mu0, cfg.run.mu0_atoms, cfg.run.depth)?;
        write_closed_interval_csv(&rows, &mut buf)?;
    } else {
        let rows = exercise_escape_study(&a.ps, a.x, &cfg.mu0, cfg.run.mu0_atoms)?;
        write_escape_csv(&rows, &mut buf)?;
    }
    match a.out.or_else(|| cfg.run.out.as_ref().map(PathBuf::from)) {
        Some(path) => Ok(write_atomic(&path, |w| Ok(w.write_all(&buf)?))?),
        None => out.write_all(&buf).map_err(io_err),
    }
}

fn render(a: RenderArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = load_config_file(&a.config)?;
    let depth = a.depth.resolve(&cfg)?;
    let t = truncate(&cfg, depth, RouteArg::Enum)?;
    let bbox = match &a.r#box {
        Some(v) if v.len() == 4 => BoundingBox::rect([v[0], v[1]], [v[2], v[3]])?,
        Some(v) => {
            return Err(Failure::Lib(Error::InvalidArgument(format!(
                "--box needs 4 numbers, got {}",
                v.len()
            ))))
        }
        None => t.measure.support_box().padded(0.02),
    };
    let scale = match a.scale {
        ScaleArg::Linear => Scale::Linear,
        ScaleArg::Log => Scale::Log,
    };
    let img = render_density(&t.measure, &bbox, a.res, scale)?;
    if img.empty {
        let _ = writeln!(err, "warning: no mass inside the render box; image is blank");
    }
    img.write_pgm(&a.out)?;
    let meta = json!({
        "width": img.width,
        "height": img.height,
        "box": [bbox.lo(), bbox.hi()],
        "depth": depth,
        "empty": img.empty,
    });
    writeln!(out, "{meta}").map_err(io_err)
}
