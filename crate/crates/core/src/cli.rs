//! The `levelreg` command line: loads problems from files, runs an operation and
//! writes CSV (and optionally SVG) outputs into a directory named after a hash
//! of the resolved configuration.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{self, fmt_f64, Csv};
use crate::lovasz::{greedy, lovasz_extension};
use crate::prox::{prox, prox_l1_composed, ProxEngine};
use crate::recovery::{
    compute_nu, lambda_bound, monte_carlo_recovery, robust_tv_experiment, GroundTruth,
    RobustTvConfig,
};
use crate::setfn::{CardinalityProfile, NoisyCutSpec, SetFunction, WeightedGraph};
use crate::solver::{
    proximal_gradient, speed_comparison, subgradient_descent, Denoise, LeastSquares, PathOptions,
    Schedule, SolverConfig, SolverOutput, SpeedConfig,
};
use crate::svg::{Plot, Series};

#[derive(Debug, Parser)]
#[command(
    name = "levelreg",
    version,
    about = "Level-set regularization with Lovász extensions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print f(w) and the greedy base point at w.
    Eval(Options),
    /// Proximal operator of λf at a signal; writes w.csv and lattice.csv.
    Prox(Options),
    /// Minimize a loss plus λf; writes w.csv and trace.csv.
    Solve(Options),
    /// Agglomerative regularization path; writes breakpoints.csv and merges.csv.
    Path(Options),
    /// Level-set recovery experiments; writes recover.csv.
    Recover(Options),
    /// Objective against wall time for four solvers; writes bench.csv and bench.svg.
    Bench(Options),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Prox(_) => "prox",
            Command::Solve(_) => "solve",
            Command::Path(_) => "path",
            Command::Recover(_) => "recover",
            Command::Bench(_) => "bench",
        }
    }

    fn options(&self) -> &Options {
        match self {
            Command::Eval(o)
            | Command::Prox(o)
            | Command::Solve(o)
            | Command::Path(o)
            | Command::Recover(o)
            | Command::Bench(o) => o,
        }
    }
}

/// Every field may also be given in the JSON file passed with `--config`;
/// flags take precedence.
#[derive(Debug, Default, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// JSON configuration file.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// chain-tv, grid-tv, cut, cardinality, clustering, noisy-cut or table.
    #[arg(long)]
    pub family: Option<String>,
    /// Edge list `i j weight` (1-based) for cut and noisy-cut.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Edge weights of a chain, one per line.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Cardinality profile h(0), …, h(p), one per line.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Values F(A) for all 2^p subsets, in bitmask order.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Mismatch penalty of the noisy cut.
    #[arg(long)]
    pub penalty: Option<f64>,

    /// Input signal z, one value per line.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Point w for `eval`.
    #[arg(long)]
    pub w: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Additional ℓ1 weight for `prox`.
    #[arg(long)]
    pub lambda_l1: Option<f64>,
    /// Comma-separated λ grid for `recover`.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// auto, decomposition or min-norm.
    #[arg(long)]
    pub engine: Option<String>,

    /// fista, ista or subgradient.
    #[arg(long)]
    pub method: Option<String>,
    /// harmonic (c/t) or inverse-sqrt (c/√t).
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Design matrix, comma-separated rows.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Response vector, one value per line.
    #[arg(long)]
    pub response: Option<PathBuf>,

    /// recovery or robust-tv.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Segment sizes of a chain ground truth.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Segment values of a chain ground truth.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Ground-truth signal file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub outlier_fraction: Option<f64>,

    /// Problem size for synthetic experiments.
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of observations for `bench`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Wall-clock budget per method in milliseconds.
    #[arg(long)]
    pub budget_ms: Option<f64>,
    /// Distance tolerance of the minimum-norm-point prox.
    #[arg(long)]
    pub prox_tol: Option<f64>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory (default `out`).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Skip certification of path segments.
    #[arg(long)]
    pub no_certify: bool,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Options {
    /// Flags over the JSON configuration.
    fn resolve(&self) -> Result<Options> {
        let mut out = self.clone();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let cfg: Options = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?;
            overlay!(out, cfg; family, graph, weights, profile, table, width, height, penalty,
                signal, w, lambda, lambda_l1, lambdas, engine, method, schedule, max_iters, tol,
                design, response, experiment, sizes, values, truth, sigmas, trials,
                outlier_fraction, p, n, budget_ms, prox_tol, replications, seed);
            out.plot |= cfg.plot;
            out.no_certify |= cfg.no_certify;
        }
        Ok(out)
    }

    fn files(&self) -> Vec<&PathBuf> {
        [
            &self.graph,
            &self.weights,
            &self.profile,
            &self.table,
            &self.signal,
            &self.w,
            &self.design,
            &self.response,
            &self.truth,
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn engine(o: &Options) -> Result<ProxEngine> {
    match o.engine.as_deref().unwrap_or("auto") {
        "auto" => Ok(ProxEngine::Auto),
        "decomposition" => Ok(ProxEngine::Decomposition),
        "min-norm" => Ok(ProxEngine::MinNorm),
        e => Err(usage(format!("unknown engine {e:?}"))),
    }
}

fn build_function(o: &Options, p: Option<usize>) -> Result<SetFunction> {
    let family = o
        .family
        .as_deref()
        .ok_or_else(|| usage("--family is required"))?;
    let need_p =
        || p.ok_or_else(|| usage(format!("cannot infer the ground set size for {family}")));
    let f = match family {
        "chain-tv" => match &o.weights {
            Some(path) => SetFunction::cut(WeightedGraph::chain(&io::read_signal(path)?)?),
            None => SetFunction::chain_tv(need_p()?)?,
        },
        "grid-tv" => {
            let (w, h) = o
                .width
                .zip(o.height)
                .ok_or_else(|| usage("grid-tv needs --width and --height"))?;
            SetFunction::grid_tv(w, h)?
        }
        "cut" => {
            let path = o.graph.as_ref().ok_or_else(|| usage("cut needs --graph"))?;
            SetFunction::cut(io::read_graph(path, p)?)
        }
        "cardinality" => {
            let path = o
                .profile
                .as_ref()
                .ok_or_else(|| usage("cardinality needs --profile"))?;
            SetFunction::cardinality(io::read_profile(path)?)
        }
        "clustering" => SetFunction::cardinality(CardinalityProfile::clustering(need_p()?)?),
        "noisy-cut" => {
            let hidden = match &o.graph {
                Some(path) => io::read_graph(path, p)?,
                None => WeightedGraph::unit_chain(need_p()?)?,
            };
            SetFunction::noisy_cut(NoisyCutSpec::new(hidden, o.penalty.unwrap_or(1.0))?)
        }
        "table" => {
            let path = o
                .table
                .as_ref()
                .ok_or_else(|| usage("table needs --table"))?;
            let values = io::read_signal(path)?;
            let n = values.len();
            if !n.is_power_of_two() {
                return Err(usage(format!("table has {n} values, not a power of two")));
            }
            SetFunction::table(n.trailing_zeros() as usize, values)?
        }
        other => return Err(usage(format!("unknown family {other:?}"))),
    };
    if let Some(p) = p {
        if f.size() != p {
            return Err(Error::DimensionMismatch {
                expected: f.size(),
                got: p,
            });
        }
    }
    Ok(f)
}

fn lambda(o: &Options) -> Result<f64> {
    let l = o.lambda.ok_or_else(|| usage("--lambda is required"))?;
    if !(l >= 0.0 && l.is_finite()) {
        return Err(usage(format!(
            "lambda must be finite and non-negative, got {l}"
        )));
    }
    Ok(l)
}

fn signal(o: &Options) -> Result<Vec<f64>> {
    io::read_signal(
        o.signal
            .as_ref()
            .ok_or_else(|| usage("--signal is required"))?,
    )
}

type Outputs = Vec<(&'static str, String)>;

fn w_csv(w: &[f64]) -> String {
    io::column_csv("w", w)
}

fn trace_csv(out: &SolverOutput) -> String {
    let mut c = Csv::new(&["iter", "objective", "gap", "wall_time_ms"]);
    for r in &out.trace {
        c.row(&[
            r.iter.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.gap),
            fmt_f64(r.wall_time_ms),
        ]);
    }
    c.as_str().to_string()
}

fn cmd_eval(o: &Options, stdout: &mut dyn Write) -> Result<()> {
    let w = io::read_signal(o.w.as_ref().ok_or_else(|| usage("--w is required"))?)?;
    let f = build_function(o, Some(w.len()))?;
    let value = lovasz_extension(&f, &w)?;
    let (s, _) = greedy(&f, &w)?;
    let dual: Vec<String> = s.s.iter().map(|v| fmt_f64(*v)).collect();
    let _ = writeln!(stdout, "{}", fmt_f64(value));
    let _ = writeln!(stdout, "dual: {}", dual.join(","));
    Ok(())
}

fn cmd_prox(o: &Options) -> Result<Outputs> {
    let z = signal(o)?;
    let f = build_function(o, Some(z.len()))?;
    let lam = lambda(o)?;
    let sol = prox(&f, &z, lam, engine(o)?)?;
    let w = match o.lambda_l1 {
        Some(l1) => prox_l1_composed(&f, &z, lam, l1, engine(o)?)?,
        None => sol.w.clone(),
    };
    let lattice = crate::prox::extract_lattice(
        &w,
        crate::prox::LATTICE_REL_TOL * z.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    );
    let mut c = Csv::new(&["block", "element", "value"]);
    for (b, block) in lattice.blocks().iter().enumerate() {
        for &e in block {
            c.row(&[(b + 1).to_string(), (e + 1).to_string(), fmt_f64(w[e])]);
        }
    }
    Ok(vec![
        ("w.csv", w_csv(&w)),
        ("lattice.csv", c.as_str().to_string()),
    ])
}

fn cmd_solve(o: &Options, stdout: &mut dyn Write) -> Result<Outputs> {
    let lam = lambda(o)?;
    let ls;
    let dn;
    let loss: &dyn crate::solver::SmoothLoss = match (&o.design, &o.response) {
        (Some(d), Some(r)) => {
            let (x, p) = io::read_matrix(d)?;
            ls = LeastSquares::new(x, io::read_signal(r)?, p)?;
            &ls
        }
        (None, None) => {
            dn = Denoise { z: signal(o)? };
            &dn
        }
        _ => return Err(usage("--design and --response go together")),
    };
    let f = build_function(o, Some(loss.dim()))?;
    let mut cfg = SolverConfig::default();
    if let Some(m) = o.max_iters {
        cfg.max_iters = m;
    }
    if let Some(t) = o.tol {
        cfg.tol = t;
    }
    if let Some(t) = o.prox_tol {
        cfg.prox_tol = t;
    }
    cfg.schedule = match o.schedule.as_deref().unwrap_or("inverse-sqrt") {
        "harmonic" => Schedule::Harmonic,
        "inverse-sqrt" => Schedule::InverseSqrt,
        s => return Err(usage(format!("unknown schedule {s:?}"))),
    };
    let out = match o.method.as_deref().unwrap_or("fista") {
        "fista" => proximal_gradient(loss, &f, lam, &cfg, engine(o)?)?,
        "ista" => {
            cfg.accelerated = false;
            proximal_gradient(loss, &f, lam, &cfg, engine(o)?)?
        }
        "subgradient" => subgradient_descent(loss, &f, lam, &cfg)?,
        m => return Err(usage(format!("unknown method {m:?}"))),
    };
    let _ = writeln!(stdout, "objective: {}", fmt_f64(out.objective));
    let mut files = vec![("w.csv", w_csv(&out.w)), ("trace.csv", trace_csv(&out))];
    if o.plot {
        let plot = Plot {
            title: "objective per iteration".into(),
            x_label: "iteration".into(),
            y_label: "objective".into(),
            log_y: false,
            series: vec![Series {
                name: o.method.clone().unwrap_or_else(|| "fista".into()),
                points: out
                    .trace
                    .iter()
                    .map(|r| (r.iter as f64, r.objective))
                    .collect(),
            }],
        };
        files.push(("trace.svg", plot.render()));
    }
    Ok(files)
}

fn cmd_path(o: &Options) -> Result<Outputs> {
    let z = signal(o)?;
    let f = build_function(o, Some(z.len()))?;
    let path = crate::solver::prox_path_agglomerative(
        &f,
        &z,
        PathOptions {
            certify: !o.no_certify,
            ..PathOptions::default()
        },
    )?;
    let bp = io::column_csv("lambda", &path.breakpoints);
    let mut merges = Csv::new(&["lambda", "upper", "lower", "merged"]);
    for m in &path.merges {
        merges.row(&[
            fmt_f64(m.lambda),
            (m.upper + 1).to_string(),
            (m.lower + 1).to_string(),
            (m.merged + 1).to_string(),
        ]);
    }
    Ok(vec![
        ("breakpoints.csv", bp),
        ("merges.csv", merges.as_str().to_string()),
    ])
}

const RECOVER_HEADER: [&str; 7] = [
    "sigma",
    "lambda",
    "method",
    "error_mean",
    "error_std",
    "recovery_rate",
    "bound",
];

fn cmd_recover(o: &Options) -> Result<Outputs> {
    let sigmas = o
        .sigmas
        .clone()
        .ok_or_else(|| usage("--sigmas is required"))?;
    let seed = o.seed.unwrap_or(0);
    let mut csv = Csv::new(&RECOVER_HEADER);
    let mut series: Vec<Series> = Vec::new();
    let mut push = |name: &str, x: f64, y: f64| match series.iter_mut().find(|s| s.name == name) {
        Some(s) => s.points.push((x, y)),
        None => series.push(Series {
            name: name.to_string(),
            points: vec![(x, y)],
        }),
    };
    match o.experiment.as_deref().unwrap_or("recovery") {
        "recovery" => {
            let truth = match (&o.sizes, &o.values, &o.truth) {
                (Some(s), Some(v), None) => GroundTruth::chain(s, v)?,
                (None, None, Some(path)) => GroundTruth::from_signal(&io::read_signal(path)?)?,
                _ => return Err(usage("give either --sizes with --values, or --truth")),
            };
            let mut fo = o.clone();
            fo.family.get_or_insert_with(|| "chain-tv".into());
            let f = build_function(&fo, Some(truth.size()))?;
            let lambdas = match &o.lambdas {
                Some(l) => l.clone(),
                None => {
                    let nu = compute_nu(&truth);
                    vec![lambda_bound(&f, &truth, nu)?]
                }
            };
            let trials = o.trials.unwrap_or(500);
            for &sigma in &sigmas {
                for &lam in &lambdas {
                    let r = monte_carlo_recovery(&f, &truth, sigma, lam, trials, engine(o)?, seed)?;
                    csv.row(&[
                        fmt_f64(sigma),
                        fmt_f64(lam),
                        "prox".to_string(),
                        fmt_f64(1.0 - r.empirical),
                        fmt_f64(r.std_error()),
                        fmt_f64(r.empirical),
                        fmt_f64(r.bound.value),
                    ]);
                    push(&format!("empirical λ={lam}"), sigma, r.empirical);
                    push(&format!("bound λ={lam}"), sigma, r.bound.value);
                }
            }
        }
        "robust-tv" => {
            let mut cfg = RobustTvConfig {
                sigma_grid: sigmas,
                seed,
                ..RobustTvConfig::default()
            };
            if let Some(p) = o.p {
                cfg.chain_length = p;
                cfg.jump_position = p / 2;
            }
            if let Some(l) = &o.lambdas {
                cfg.lambda_grid = l.clone();
            }
            if let Some(m) = o.penalty {
                cfg.penalty = m;
            }
            if let Some(r) = o.replications {
                cfg.replications = r;
            }
            if let Some(f) = o.outlier_fraction {
                cfg.outlier_fraction = f;
            }
            for r in robust_tv_experiment(&cfg)? {
                csv.row(&[
                    fmt_f64(r.sigma),
                    fmt_f64(r.lambda),
                    r.method.name().to_string(),
                    fmt_f64(r.error_mean),
                    fmt_f64(r.error_std),
                    fmt_f64(r.recovery_rate),
                    String::new(),
                ]);
                push(r.method.name(), r.sigma, r.error_mean);
            }
        }
        e => return Err(usage(format!("unknown experiment {e:?}"))),
    }
    let mut files = vec![("recover.csv", csv.as_str().to_string())];
    if o.plot {
        let plot = Plot {
            title: "level-set recovery".into(),
            x_label: "sigma".into(),
            y_label: "value".into(),
            log_y: false,
            series,
        };
        files.push(("recover.svg", plot.render()));
    }
    Ok(files)
}

fn cmd_bench(o: &Options) -> Result<Outputs> {
    let mut cfg = SpeedConfig::default();
    if let Some(p) = o.p {
        cfg.p = p;
    }
    if let Some(n) = o.n {
        cfg.n = n;
    }
    if let Some(l) = o.lambda {
        cfg.lambda = l;
    }
    if let Some(b) = o.budget_ms {
        cfg.budget_ms = b;
    }
    if let Some(t) = o.prox_tol {
        cfg.prox_tol = t;
    }
    let reps = o.replications.unwrap_or(1).max(1);
    let base_seed = o.seed.unwrap_or(0);
    let mut csv = Csv::new(&["method", "replication", "iter", "wall_time_ms", "objective"]);
    let mut first = Vec::new();
    for rep in 0..reps {
        cfg.seed = base_seed + rep as u64;
        let runs = speed_comparison(&cfg)?;
        for (m, out) in &runs {
            for r in &out.trace {
                csv.row(&[
                    m.name().to_string(),
                    (rep + 1).to_string(),
                    r.iter.to_string(),
                    fmt_f64(r.wall_time_ms),
                    fmt_f64(r.objective),
                ]);
            }
        }
        if rep == 0 {
            first = runs;
        }
    }
    let best = first
        .iter()
        .flat_map(|(_, out)| out.trace.iter().map(|r| r.objective))
        .fold(f64::INFINITY, f64::min);
    let series = first
        .iter()
        .map(|(m, out)| {
            let mut running = f64::INFINITY;
            Series {
                name: m.name().to_string(),
                points: out
                    .trace
                    .iter()
                    .map(|r| {
                        running = running.min(r.objective);
                        (r.wall_time_ms / 1e3, (running - best).max(1e-12))
                    })
                    .collect(),
            }
        })
        .collect();
    let plot = Plot {
        title: format!("p = {}, cardinality penalty, least squares", cfg.p),
        x_label: "time (s)".into(),
        y_label: "objective - best".into(),
        log_y: true,
        series,
    };
    Ok(vec![
        ("bench.csv", csv.as_str().to_string()),
        ("bench.svg", plot.render()),
    ])
}

/// `<cmd>-<first 16 hex digits of SHA-256>` over the command, the resolved
/// configuration and the bytes of every input file.
fn output_name(cmd: &str, o: &Options) -> Result<String> {
    let mut h = Sha256::new();
    h.update(cmd.as_bytes());
    h.update(serde_json::to_vec(o).map_err(|e| usage(e.to_string()))?);
    for path in o.files() {
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    let digest = h.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    Ok(format!("{cmd}-{hex}"))
}

/// Writes all files into a fresh directory and moves it into place, so a failed
/// run leaves nothing behind.
fn emit(out_root: &Path, name: &str, files: &Outputs) -> Result<PathBuf> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(out_root).map_err(io_err(out_root))?;
    let target = out_root.join(name);
    let tmp = out_root.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
    }
    fs::create_dir(&tmp).map_err(io_err(&tmp))?;
    let written = files
        .iter()
        .try_for_each(|(file, contents)| io::write_file(&tmp.join(file), contents));
    if let Err(e) = written {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if target.exists() {
        fs::remove_dir_all(&target).map_err(io_err(&target))?;
    }
    fs::rename(&tmp, &target).map_err(io_err(&target))?;
    Ok(target)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::NonConvergence { .. } | Error::CertificationFailed(_) => 2,
        _ => 1,
    }
}

fn dispatch(cmd: &Command, stdout: &mut dyn Write) -> Result<()> {
    let o = cmd.options().resolve()?;
    let files = match cmd {
        Command::Eval(_) => return cmd_eval(&o, stdout),
        Command::Prox(_) => cmd_prox(&o)?,
        Command::Solve(_) => cmd_solve(&o, stdout)?,
        Command::Path(_) => cmd_path(&o)?,
        Command::Recover(_) => cmd_recover(&o)?,
        Command::Bench(_) => cmd_bench(&o)?,
    };
    let name = output_name(cmd.name(), &o)?;
    let root = o.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let dir = emit(&root, &name, &files)?;
    let _ = writeln!(stdout, "{}", dir.display());
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Numerical("x".into())), 2);
        assert_eq!(exit_code(&usage("x")), 1);
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["levelreg", "frobnicate"], &mut out, &mut err), 1);
        assert_eq!(run(["levelreg", "--help"], &mut out, &mut err), 0);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"family": "chain-tv", "lambda": 2.0, "seed": 4}"#).unwrap();
        let o = Options {
            config: Some(cfg),
            lambda: Some(0.5),
            ..Options::default()
        };
        let r = o.resolve().unwrap();
        assert_eq!(r.lambda, Some(0.5));
        assert_eq!(r.seed, Some(4));
        assert_eq!(r.family.as_deref(), Some("chain-tv"));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"lambada": 1}"#).unwrap();
        let o = Options {
            config: Some(cfg),
            ..Options::default()
        };
        assert!(matches!(o.resolve(), Err(Error::Parse { .. })));
    }
}
