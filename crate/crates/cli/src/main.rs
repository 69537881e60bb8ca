//! Command-line front end: instance generation, end-to-end solves
//! (spectral initialization followed by the Kaczmarz iteration), ensemble
//! runs, anti-concentration audits, and Monte Carlo studies.
//!
//! Exit codes: 0 success, 2 validation error, 3 algorithmic failure
//! (no majority cluster), 4 I/O error.

mod config;
mod studies;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use rkpr::acw;
use rkpr::geometry;
use rkpr::measurement::{generate_gaussian_rows, generate_uniform_instance};
use rkpr::solver::{self, fmt_float, RowMeasure, SelectionMode};
use rkpr::spectral;
use rkpr::{Error, InstanceFile, MeasurementSet, Rng, Signal};

use config::FileConfig;

/// Version tag embedded in every output artifact.
const BUILD_TAG: &str = concat!("rkpr-cli ", env!("CARGO_PKG_VERSION"));

const DEFAULT_EPS: f64 = 1e-6;
const DEFAULT_DELTA2: f64 = 0.05;

#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or malformed inputs; exit code 2.
    Validation(String),
    /// The algorithm itself failed (no majority cluster); exit code 3.
    Algorithmic(String),
    /// Filesystem trouble; exit code 4.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Algorithmic(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Algorithmic(m) | CliError::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoMajority => CliError::Algorithmic(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "rkpr", version, about = "Randomized Kaczmarz phase retrieval experiments")]
struct Cli {
    /// JSON config file with the same keys as the flags; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output path (`gen`) or output prefix (all other commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance file.
    Gen {
        /// Signal dimension.
        #[arg(long)]
        n: Option<usize>,
        /// Number of measurements (default 20 n).
        #[arg(long)]
        m: Option<usize>,
        /// Row generator: uniform-sphere | gaussian-normalized.
        #[arg(long)]
        generator: Option<String>,
        /// Norm of the hidden signal.
        #[arg(long)]
        norm: Option<f64>,
    },
    /// Initialize and run the Kaczmarz iteration on an instance file.
    Solve {
        /// Instance file written by `gen`.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Iteration count (default ceil(2 (ln(1/eps) + ln(2/delta2)) n)).
        #[arg(long)]
        k: Option<usize>,
        /// Initialization: spectral | random | given.
        #[arg(long)]
        init: Option<String>,
        /// Start vector file (JSON array) for `--init given`.
        #[arg(long)]
        x0: Option<PathBuf>,
        /// Target accuracy used for the success flag and the default K.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Ensemble run: L independent solves plus majority-ball selection.
    Ensemble {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Number of ensemble trials.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Majority-ball radius (default 2 sqrt(eps) times the norm estimate).
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Audit the anti-concentration-on-wedges condition on an instance.
    AcwAudit {
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Wedge angle bound.
        #[arg(long)]
        theta: Option<f64>,
        /// Margin target (default 1/2).
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of sampled wedges.
        #[arg(long)]
        wedges: Option<usize>,
        /// Refine the worst wedge by local perturbation descent.
        #[arg(long)]
        refine: Option<bool>,
    },
    /// Monte Carlo study sweeps; one CSV row per configuration.
    Study {
        /// decrement-curve | escape-prob | rate-vs-n | linear-baseline | init-quality.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    if let Some(t) = cli.threads.or(cfg.usize("threads")) {
        if t == 0 {
            return Err(CliError::Validation("threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let seed = cli.seed.or(cfg.u64("seed")).unwrap_or(0);
    let out = cli.out.clone().or(cfg.path("out"));

    match cli.command {
        Command::Gen { n, m, generator, norm } => {
            let n = n.or(cfg.usize("n")).ok_or_else(|| missing("--n"))?;
            require(n >= 1, "n must be >= 1")?;
            let m = m.or(cfg.usize("m")).unwrap_or(20 * n);
            require(m >= 1, "m must be >= 1")?;
            let generator = generator
                .or(cfg.string("generator"))
                .unwrap_or_else(|| "uniform-sphere".into());
            let norm = norm.or(cfg.f64("norm")).unwrap_or(1.0);
            require(norm.is_finite() && norm > 0.0, "norm must be > 0")?;
            let out = out.unwrap_or_else(|| PathBuf::from("instance.json"));
            cmd_gen(n, m, &generator, norm, seed, &out)
        }
        Command::Solve { instance, k, init, x0, eps } => {
            let instance =
                instance.or(cfg.path("instance")).ok_or_else(|| missing("--instance"))?;
            let eps = eps.or(cfg.f64("eps")).unwrap_or(DEFAULT_EPS);
            require(eps.is_finite() && eps > 0.0, "eps must be > 0")?;
            let init = init.or(cfg.string("init")).unwrap_or_else(|| "spectral".into());
            let x0 = x0.or(cfg.path("x0"));
            let out = out.unwrap_or_else(|| PathBuf::from("solve"));
            cmd_solve(&instance, k.or(cfg.usize("k")), &init, x0.as_deref(), eps, seed, &out)
        }
        Command::Ensemble { instance, k, l, eps, radius } => {
            let instance =
                instance.or(cfg.path("instance")).ok_or_else(|| missing("--instance"))?;
            let l = l.or(cfg.usize("l")).unwrap_or(16);
            require(l >= 1, "l must be >= 1")?;
            let eps = eps.or(cfg.f64("eps")).unwrap_or(DEFAULT_EPS);
            require(eps.is_finite() && eps > 0.0, "eps must be > 0")?;
            let radius = radius.or(cfg.f64("radius"));
            let out = out.unwrap_or_else(|| PathBuf::from("ensemble"));
            cmd_ensemble(&instance, k.or(cfg.usize("k")), l, eps, radius, seed, &out)
        }
        Command::AcwAudit { instance, theta, alpha, wedges, refine } => {
            let instance =
                instance.or(cfg.path("instance")).ok_or_else(|| missing("--instance"))?;
            let theta = theta.or(cfg.f64("theta")).unwrap_or(0.1);
            let alpha = alpha.or(cfg.f64("alpha")).unwrap_or(0.5);
            let wedges = wedges.or(cfg.usize("wedges")).unwrap_or(500);
            require(wedges >= 1, "wedges must be >= 1")?;
            let refine = refine.or(cfg.bool("refine")).unwrap_or(true);
            let out = out.unwrap_or_else(|| PathBuf::from("acw-audit"));
            cmd_acw_audit(&instance, theta, alpha, wedges, refine, seed, &out)
        }
        Command::Study { name, n, m, k, trials, delta } => {
            let name = name.or(cfg.string("name")).ok_or_else(|| missing("--name"))?;
            let out = out.unwrap_or_else(|| PathBuf::from("study"));
            cmd_study(
                &name,
                n.or(cfg.usize("n")),
                m.or(cfg.usize("m")),
                k.or(cfg.usize("k")),
                trials.or(cfg.usize("trials")),
                delta.or(cfg.f64("delta")),
                seed,
                &out,
            )
        }
    }
}

fn missing(flag: &str) -> CliError {
    CliError::Validation(format!("{flag} is required (flag or config file)"))
}

fn require(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Validation(msg.into()))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<MeasurementSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file = InstanceFile::from_json(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(file.into_measurement_set()?)
}

fn default_k(n: usize, eps: f64) -> usize {
    (2.0 * ((1.0 / eps).ln() + (2.0 / DEFAULT_DELTA2).ln()) * n as f64).ceil() as usize
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut p = prefix.as_os_str().to_owned();
    p.push(ext);
    PathBuf::from(p)
}

/// Summary JSON shared by all commands: build tag, resolved config, seed,
/// and a command-specific payload. Wall-clock is the only non-reproducible
/// field.
fn summary_json(
    command: &str,
    config: serde_json::Value,
    seed: u64,
    payload: serde_json::Value,
    started: Instant,
) -> String {
    let doc = json!({
        "build": BUILD_TAG,
        "command": command,
        "seed": seed,
        "config": config,
        "summary": payload,
        "wall_clock_s": started.elapsed().as_secs_f64(),
    });
    serde_json::to_string_pretty(&doc).expect("summary serialization")
}

fn cmd_gen(
    n: usize,
    m: usize,
    generator: &str,
    norm: f64,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let mut rng = Rng::new(seed);
    let x: Vec<f64> = geometry::sample_uniform_sphere(n, &mut rng)?
        .into_coords()
        .into_iter()
        .map(|v| norm * v)
        .collect();
    let signal = Signal::new(x)?;
    let ms = match generator {
        "uniform-sphere" => generate_uniform_instance(n, m, &signal, &mut rng)?,
        "gaussian-normalized" => generate_gaussian_rows(n, m, &signal, &mut rng)?,
        other => {
            return Err(CliError::Validation(format!("unknown generator `{other}`")));
        }
    };
    let file = InstanceFile::from_measurement_set(&ms);
    write_file(out, &file.to_json())?;
    println!("wrote {}: n={n} m={m} generator={generator} seed={seed}", out.display());
    Ok(())
}

fn initial_vector(
    ms: &MeasurementSet,
    init: &str,
    x0_path: Option<&Path>,
    seed: u64,
) -> Result<Vec<f64>, CliError> {
    match init {
        "spectral" => Ok(spectral::initialize(ms)?.x0),
        "random" => {
            let (_, norm_estimate) = spectral::norm_scale(ms)?;
            let mut rng = Rng::with_stream(seed, u64::MAX);
            Ok(geometry::sample_uniform_sphere(ms.n(), &mut rng)?
                .into_coords()
                .into_iter()
                .map(|v| norm_estimate * v)
                .collect())
        }
        "given" => {
            let path = x0_path
                .ok_or_else(|| CliError::Validation("--init given needs --x0".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let x0: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            if x0.len() != ms.n() {
                return Err(Error::DimensionMismatch { expected: ms.n(), got: x0.len() }.into());
            }
            Ok(x0)
        }
        other => Err(CliError::Validation(format!("unknown init mode `{other}`"))),
    }
}

fn cmd_solve(
    instance: &Path,
    k: Option<usize>,
    init: &str,
    x0_path: Option<&Path>,
    eps: f64,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let ms = load_instance(instance)?;
    let k = k.unwrap_or_else(|| default_k(ms.n(), eps));
    let x0 = initial_vector(&ms, init, x0_path, seed)?;
    if ms.signal().is_none() {
        eprintln!("note: instance has no stored signal; trace carries residuals only");
    }

    let mu = RowMeasure::finite(&ms, SelectionMode::Uniform);
    let mut rng = Rng::new(seed);
    let trace = solver::run(&mu, &x0, k, &mut rng)?;

    let initial_dist = trace.records.first().and_then(|r| r.dist);
    let final_dist = trace.records.last().and_then(|r| r.dist);
    let success = match (initial_dist, final_dist) {
        (Some(d0), Some(df)) => Some(df * df <= eps * d0 * d0),
        _ => None,
    };

    let config = json!({
        "instance": instance.display().to_string(),
        "n": ms.n(),
        "m": ms.m(),
        "k": k,
        "init": init,
        "eps": eps,
    });
    let payload = json!({
        "initial_dist": initial_dist,
        "final_dist": final_dist,
        "success": success,
        "iterations": k,
        "basin_escaped": trace.basin_escaped,
        "first_escape_step": trace.first_escape_step,
    });
    write_file(&with_ext(out, ".csv"), &trace.to_csv())?;
    write_file(&with_ext(out, ".json"), &summary_json("solve", config, seed, payload, started))?;
    println!(
        "solve: k={k} final_dist={} success={success:?}",
        final_dist.map(fmt_float).unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}

fn cmd_ensemble(
    instance: &Path,
    k: Option<usize>,
    l: usize,
    eps: f64,
    radius: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let ms = load_instance(instance)?;
    let k = k.unwrap_or_else(|| default_k(ms.n(), eps));
    let x0 = spectral::initialize(&ms)?.x0;
    let (_, norm_estimate) = spectral::norm_scale(&ms)?;
    let radius = radius.unwrap_or(2.0 * eps.sqrt() * norm_estimate);
    require(radius.is_finite() && radius > 0.0, "radius must be > 0")?;

    let mu = RowMeasure::finite(&ms, SelectionMode::Uniform);
    let rng = Rng::new(seed);
    let config = json!({
        "instance": instance.display().to_string(),
        "n": ms.n(),
        "m": ms.m(),
        "k": k,
        "l": l,
        "eps": eps,
        "radius": radius,
    });
    match solver::ensemble_rk(&mu, &x0, k, l, radius, &rng) {
        Ok(outcome) => {
            let dists: Option<Vec<f64>> = ms.signal().map(|sig| {
                outcome
                    .estimates
                    .iter()
                    .map(|e| geometry::dist_to_sign_set(e, sig.x()).expect("dims match"))
                    .collect()
            });
            let payload = json!({
                "chosen_trial": outcome.chosen_trial,
                "cluster_size": outcome.cluster_size,
                "estimate": outcome.estimate,
                "trial_dists": dists,
            });
            write_file(
                &with_ext(out, ".json"),
                &summary_json("ensemble", config, seed, payload, started),
            )?;
            println!(
                "ensemble: trial {} chosen, cluster {}/{}",
                outcome.chosen_trial, outcome.cluster_size, l
            );
            Ok(())
        }
        Err(Error::NoMajority) => {
            let payload = json!({ "error": "no-majority" });
            write_file(
                &with_ext(out, ".json"),
                &summary_json("ensemble", config, seed, payload, started),
            )?;
            Err(CliError::Algorithmic("no majority cluster among ensemble trials".into()))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_acw_audit(
    instance: &Path,
    theta: f64,
    alpha: f64,
    wedges: usize,
    refine: bool,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let ms = load_instance(instance)?;
    let rng = Rng::new(seed);
    let (report, records) = acw::audit(&ms, theta, alpha, wedges, &rng, refine)?;

    let mut csv = String::from("theta,measure,margin\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_float(r.theta),
            fmt_float(r.measure),
            fmt_float(r.margin)
        ));
    }
    let config = json!({
        "instance": instance.display().to_string(),
        "n": ms.n(),
        "m": ms.m(),
        "theta": theta,
        "alpha": alpha,
        "wedges": wedges,
        "refine": refine,
    });
    let payload = serde_json::to_value(&report).expect("report serialization");
    write_file(&with_ext(out, ".csv"), &csv)?;
    write_file(
        &with_ext(out, ".json"),
        &summary_json("acw-audit", config, seed, payload, started),
    )?;
    println!(
        "acw-audit: pass={} min_margin={} max_wedge_measure={}",
        report.pass,
        fmt_float(report.min_margin),
        fmt_float(report.max_wedge_measure)
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_study(
    name: &str,
    n: Option<usize>,
    m: Option<usize>,
    k: Option<usize>,
    trials: Option<usize>,
    delta: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let (csv, resolved) = match name {
        "linear-baseline" => {
            let n = n.unwrap_or(5);
            let k = k.unwrap_or(10);
            let trials = trials.unwrap_or(10_000);
            require(n >= 1 && trials >= 1, "n and trials must be >= 1")?;
            let csv = studies::linear_baseline(n, k, trials, seed)?;
            (csv, json!({"name": name, "n": n, "k": k, "trials": trials}))
        }
        "decrement-curve" => {
            let n = n.unwrap_or(4);
            let draws = trials.unwrap_or(1_000_000);
            require(n >= 2 && draws >= 1, "n must be >= 2 and trials >= 1")?;
            let csv = studies::decrement_curve(n, draws, seed)?;
            (csv, json!({"name": name, "n": n, "draws": draws}))
        }
        "escape-prob" => {
            let n = n.unwrap_or(10);
            let delta = delta.unwrap_or(0.1);
            let k = k.unwrap_or(2000);
            let trials = trials.unwrap_or(500);
            let csv = studies::escape_prob(n, delta, k, trials, seed)?;
            (csv, json!({"name": name, "n": n, "delta": delta, "k": k, "trials": trials}))
        }
        "rate-vs-n" => {
            let trials = trials.unwrap_or(200);
            require(trials >= 1, "trials must be >= 1")?;
            let csv = studies::rate_vs_n(trials, seed)?;
            (csv, json!({"name": name, "trials": trials}))
        }
        "init-quality" => {
            let n = n.unwrap_or(50);
            let m = m.unwrap_or(20 * n);
            let seeds = trials.unwrap_or(100);
            require(n >= 1 && m >= 1 && seeds >= 1, "n, m, trials must be >= 1")?;
            let csv = studies::init_quality(n, m, seeds, seed)?;
            (csv, json!({"name": name, "n": n, "m": m, "seeds": seeds}))
        }
        other => {
            return Err(CliError::Validation(format!("unknown study `{other}`")));
        }
    };
    write_file(&with_ext(out, ".csv"), &csv)?;
    write_file(
        &with_ext(out, ".json"),
        &summary_json("study", resolved, seed, json!({}), started),
    )?;
    println!("study {name}: wrote {}.csv", out.display());
    Ok(())
}
