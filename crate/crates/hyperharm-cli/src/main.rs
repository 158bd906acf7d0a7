use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperharm_core::config::{write_atomic, BoundaryFile, RunConfig};
use hyperharm_core::functionals::{self, FunctionalGrid, FunctionalKind, GForm, OpField};
use hyperharm_core::geometry::{sphere_quadrature, GridKind};
use hyperharm_core::harmonic::{HarmonicFunction, ModeOp};
use hyperharm_core::kernels::{kernel_value, KernelError, KernelKind, SeriesOptions};
use hyperharm_core::verify::{self, Status, SuiteReport};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "hyperharm", version, about = "Hyperbolic-harmonic kernels, extensions and Hardy-space functionals")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Kernel values over <zeta, xi> in [-1, 1] as `t,value` rows.
    Kernel(KernelArgs),
    /// Extend boundary data and write `r,x1..xn,u` samples.
    Extend(ExtendArgs),
    /// Per-node values of a maximal, area or g-functional.
    Functional(FunctionalArgs),
    /// Run verification suites (`all` for every suite).
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Euclid,
    Hyp,
    HypDelta,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    delta: Option<f64>,
    /// Number of equally spaced t values.
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Relative tail tolerance of the series.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtendArgs {
    /// Boundary-data JSON file.
    #[arg(long)]
    data: PathBuf,
    /// Sample radii (repeatable).
    #[arg(long = "r", default_values_t = vec![0.0, 0.5, 0.9])]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    grid_degree: usize,
    /// Dilation parameter: sample u(delta x) instead of u(x).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FunctionalArgs {
    /// M, Malpha, S, SN, g or gN.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Exponents of the reported quasi-norms (repeatable).
    #[arg(long = "p", default_values_t = vec![1.0])]
    ps: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    grid_degree: usize,
    #[arg(long, default_value_t = 18)]
    ladder_depth: usize,
    #[arg(long, default_value = "squared")]
    g_form: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite names or `all`.
    #[arg(required = true)]
    suites: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
    #[arg(long = "p")]
    ps: Vec<f64>,
    #[arg(long)]
    grid_degree: Option<usize>,
    #[arg(long)]
    ladder_depth: Option<usize>,
    /// Series tail tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Directory for per-suite JSON reports and summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock runtimes (reports are then no longer byte-reproducible).
    #[arg(long)]
    timings: bool,
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

fn data(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_DATA, msg: msg.into() }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| data(e.to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_n(n: usize) -> Result<(), Failure> {
    if n < 3 {
        return Err(usage(format!("--n {n}: dimension must be at least 3")));
    }
    Ok(())
}

fn cmd_kernel(a: KernelArgs) -> Result<(), Failure> {
    check_n(a.n)?;
    if !(0.0..1.0).contains(&a.r) {
        return Err(usage(format!("--r {}: must lie in [0, 1)", a.r)));
    }
    if a.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let kind = match (a.kind, a.delta) {
        (Kind::Euclid, None) => KernelKind::Euclidean,
        (Kind::Hyp, None) => KernelKind::Hyperbolic,
        (Kind::HypDelta, Some(d)) if (0.0..=1.0).contains(&d) => KernelKind::HyperbolicDelta(d),
        (Kind::HypDelta, Some(d)) => return Err(usage(format!("--delta {d}: must lie in [0, 1]"))),
        (Kind::HypDelta, None) => return Err(usage("--kind hyp-delta requires --delta")),
        (_, Some(_)) => return Err(usage("--delta applies only to --kind hyp-delta")),
    };
    let mut opts = SeriesOptions::default();
    if let Some(t) = a.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(usage(format!("--tol {t}: must lie in (0, 1)")));
        }
        opts.tail_tol = t;
    }
    let mut s = String::from("t,value\n");
    for i in 0..a.points {
        let t = -1.0 + 2.0 * i as f64 / (a.points - 1) as f64;
        let v = match kernel_value(kind, a.n, a.r, t, opts) {
            Ok(v) => v,
            Err(KernelError::TruncationWarning { value, terms, last_term }) => {
                eprintln!("warning: series truncated at t = {t} after {terms} terms (last term {last_term:e})");
                value
            }
            Err(e) => return Err(data(e.to_string())),
        };
        let _ = writeln!(s, "{t:.17e},{v:.17e}");
    }
    emit(a.out.as_deref(), &s)
}

fn load_boundary(path: &Path) -> Result<HarmonicFunction, Failure> {
    let b = BoundaryFile::load(path).map_err(|e| data(e.to_string()))?;
    HarmonicFunction::extend(&b).map_err(|e| data(e.to_string()))
}

fn boundary_grid(u: &HarmonicFunction, degree: usize) -> Result<hyperharm_core::geometry::SphereGrid, Failure> {
    let kind = match u.pole() {
        Some(p) if u.n != 3 => GridKind::Zonal(p.to_vec()),
        _ => GridKind::Full,
    };
    sphere_quadrature(u.n, degree, kind).map_err(|e| usage(e.to_string()))
}

fn cmd_extend(a: ExtendArgs) -> Result<(), Failure> {
    if let Some(r) = a.radii.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(usage(format!("--r {r}: must lie in [0, 1)")));
    }
    let mut u = load_boundary(&a.data)?;
    if let Some(d) = a.delta {
        if !(d > 0.0 && d <= 1.0) {
            return Err(usage(format!("--delta {d}: must lie in (0, 1]")));
        }
        if d < 1.0 {
            u = u.dilate(d).map_err(|e| data(e.to_string()))?;
        }
    }
    let grid = boundary_grid(&u, a.grid_degree)?;
    let mut s = String::from("r");
    for i in 1..=u.n {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",u\n");
    for &r in &a.radii {
        let rd = u.radial_data(r, 0).map_err(|e| data(e.to_string()))?;
        for d in &grid.nodes {
            let v = u.value_with(&rd, d, ModeOp::IDENTITY);
            let _ = write!(s, "{r}");
            for c in d {
                let _ = write!(s, ",{:.17e}", c * r);
            }
            let _ = writeln!(s, ",{v:.17e}");
        }
    }
    emit(a.out.as_deref(), &s)
}

fn cmd_functional(a: FunctionalArgs) -> Result<(), Failure> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage(format!("--alpha {}: must lie in (0, 1)", a.alpha)));
    }
    if let Some(p) = a.ps.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(usage(format!("--p {p}: must be positive")));
    }
    let kind = FunctionalKind::parse(&a.kind, a.alpha).map_err(|e| usage(e.to_string()))?;
    let g_form: GForm = a.g_form.parse().map_err(|e: functionals::FunctionalError| usage(e.to_string()))?;
    let u = load_boundary(&a.data)?;
    let grid = boundary_grid(&u, a.grid_degree)?;
    let fg = FunctionalGrid { depth: a.ladder_depth, g_form, ..FunctionalGrid::default() };
    let res = functionals::compute(&OpField::new(&u, ModeOp::IDENTITY), kind, &grid, &fg).map_err(|e| data(e.to_string()))?;
    match a.out.as_deref() {
        Some(p) => {
            write_atomic(p, res.to_csv(&[]).as_bytes()).map_err(|e| data(e.to_string()))?;
            for &q in &a.ps {
                println!("norm,{q},{:.17e}", res.lp_quasinorm(q));
            }
            Ok(())
        }
        None => emit(None, &res.to_csv(&a.ps)),
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    for s in &a.suites {
        if s != "all" && !verify::SUITES.contains(&s.as_str()) {
            return Err(usage(format!("unknown suite {s:?}; expected one of {} or all", verify::SUITES.join(", "))));
        }
    }
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            hyperharm_core::config::ConfigError::Io(e) => data(format!("{}: {e}", p.display())),
            e => usage(e.to_string()),
        })?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.lmax {
        cfg.lmax = v;
    }
    if !a.alphas.is_empty() {
        cfg.alphas = a.alphas.clone();
    }
    if !a.ps.is_empty() {
        cfg.ps = a.ps.clone();
    }
    if let Some(v) = a.grid_degree {
        cfg.grid_degree = v;
    }
    if let Some(v) = a.ladder_depth {
        cfg.ladder_depth = v;
    }
    if let Some(v) = a.tol {
        cfg.tolerances.series_tail = v;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let out = a.out.clone().or_else(|| cfg.out.clone().map(PathBuf::from));

    let mut reports: Vec<SuiteReport> = verify::run_suites(&a.suites, &cfg).map_err(|e| data(e.to_string()))?;
    if !a.timings {
        for r in &mut reports {
            r.runtime_s = None;
        }
    }
    let summary = verify::summary_csv(&reports);
    if let Some(dir) = &out {
        for r in &reports {
            write_atomic(&dir.join(format!("{}.json", r.suite)), r.to_json().as_bytes()).map_err(|e| data(e.to_string()))?;
        }
        write_atomic(&dir.join("summary.csv"), summary.as_bytes()).map_err(|e| data(e.to_string()))?;
    }
    print!("{summary}");
    let failed: Vec<&str> = reports.iter().filter(|r| r.status == Status::Fail).map(|r| r.suite.as_str()).collect();
    for r in &reports {
        for m in r.failures() {
            eprintln!("FAIL {}: {} = {:e} (tolerance {:?})", r.suite, m.name, m.value, m.tolerance);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_FAIL, msg: format!("failed suites: {}", failed.join(", ")) })
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("HYPERHARM_THREADS") else { return Ok(()) };
    let k: usize = v.trim().parse().map_err(|_| usage(format!("HYPERHARM_THREADS={v:?} is not a count")))?;
    if k > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = init_threads().and_then(|_| match cli.cmd {
        Cmd::Kernel(a) => cmd_kernel(a),
        Cmd::Extend(a) => cmd_extend(a),
        Cmd::Functional(a) => cmd_functional(a),
        Cmd::Verify(a) => cmd_verify(a),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hyperharm: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
