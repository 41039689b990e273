//! Command line front end. Every subcommand reads a JSON config; `--seed`
//! and `--out` override the corresponding keys.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::Error;
use crate::gmac::Schedule;
use crate::optimizer::{optimize_protograph, SearchConfig};
use crate::pexit::{pexit_threshold, Estimator, EvolutionOptions, StateInfoMode, ThresholdConfig};
use crate::protograph::{lift, write_alist, Protograph};
use crate::sim::{run_fer_sweep, write_fer_csv_file, CodeSource, Layout, SimConfig, Sweep};
use crate::spreading::generate_signatures;

const CODE_KEYS: &str = "  code                object, one of
                        {\"kind\": \"protograph\", \"path\": FILE, \"z\": INT, \"seed\": INT}
                        {\"kind\": \"alist\", \"path\": FILE}
                        {\"kind\": \"baseline\", \"z\": INT, \"seed\": INT}
                      (baseline = lifted [[3, 3]] code with every bit sent twice)";

const SWEEP_KEYS: &str = "  users               number of users T
  ebn0_db             {\"start\": dB, \"stop\": dB, \"step\": dB}, inclusive
  frames              frames per point
  stop_after_errors   stop a point after this many frame errors (default 100, 0 = never)
  outer_iterations    functional-node rounds (default 30)
  inner_iterations    sum-product iterations per user per round (default 2)
  seed                master seed (default 0)";

const LIFT_HELP: &str = "\
Config keys:
  protograph          protograph text file
  z                   lifting size
  seed                shift seed (default 0)
  out                 alist output (default code.alist)";

const PEXIT_HELP: &str = "\
Config keys:
  protograph          protograph text file
  users               number of users T
  estimator           mixture (default), mode-matched or mean-matched
  samples             Monte-Carlo samples per state-node estimate (default 10000)
  state_info          monte-carlo (default) or tabulated
  lo_db, hi_db        search interval (default -2, 12)
  resolution_db       bisection resolution (default 0.01)
  max_iterations      PEXIT iterations per evolution (default 1000)
  seed                master seed (default 0)
  out                 trajectory CSV (default trajectory.csv)

Prints threshold_db=<value>.";

const OPTIMIZE_HELP: &str = "\
Config keys:
  rows, cols          base matrix shape (default 3, 4)
  users               number of users T
  max_multiplicity    largest entry (default 3)
  start               starting protograph file (default: [[3, 3]] repeated, 3x4 only)
  initial_temperature annealing start temperature in dB (default 0.5)
  cooling             temperature factor per step (default 0.98)
  steps               moves per chain (default 300)
  chains              independent chains (default 1)
  estimator           mixture (default), mode-matched or mean-matched
  samples             Monte-Carlo samples per state-node estimate (default 10000)
  state_info          tabulated (default) or monte-carlo
  lo_db, hi_db        threshold search interval (default -2, 12)
  resolution_db       threshold resolution (default 0.01)
  max_iterations      PEXIT iterations per evolution (default 1000)
  seed                master seed (default 0)
  out                 winning protograph (default protograph.txt)
  log                 JSON search log (default: out with .log.json appended)";

fn simulate_help() -> String {
    format!(
        "Config keys:\n{CODE_KEYS}\n{SWEEP_KEYS}\n  n_prime             optional slot length for sparse spreading\n  out                 FER CSV (default fer.csv)"
    )
}

fn spread_help() -> String {
    format!(
        "Config keys:\n{CODE_KEYS}\n{SWEEP_KEYS}\n  n_prime             slot length in chips\n  strategy            spread (default) or split\n  groups              groups for split (default 2); each group gets n chips\n  signatures_out      optional JSON export of the signatures\n  out                 FER CSV (default fer.csv)"
    )
}

#[derive(Parser, Debug)]
#[command(
    name = "gmac-ldpc",
    version,
    about = "LDPC codes for the Gaussian multiple access channel",
    after_help = "Relative paths inside a config resolve against the config's directory.\nExit status: 0 success, 1 usage error, 2 runtime error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lift a protograph and write the parity-check matrix as alist
    #[command(after_help = LIFT_HELP)]
    Lift(Common),
    /// Measure FER over an Eb/N0 sweep
    #[command(after_help = simulate_help())]
    Simulate(Common),
    /// PEXIT threshold and trajectory of a protograph
    #[command(after_help = PEXIT_HELP)]
    Pexit(Common),
    /// Anneal a base matrix for a low PEXIT threshold
    #[command(after_help = OPTIMIZE_HELP)]
    Optimize(Common),
    /// FER with sparse spreading or slot splitting
    #[command(after_help = spread_help())]
    SpreadSim(Common),
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Spreading(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Lift(c) => cmd_lift(c),
        Command::Simulate(c) => cmd_simulate(c, false),
        Command::Pexit(c) => cmd_pexit(c),
        Command::Optimize(c) => cmd_optimize(c),
        Command::SpreadSim(c) => cmd_simulate(c, true),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            2
        }
    }
}

fn load<C: DeserializeOwned>(path: &Path) -> std::result::Result<(C, PathBuf), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let cfg = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// `--out` wins and is taken as given; a config path resolves against the
/// config directory.
fn output(common: &Common, base: &Path, configured: Option<&Path>, default: &str) -> PathBuf {
    match (&common.out, configured) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => base.join(p),
        (None, None) => base.join(default),
    }
}

fn write(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn read_protograph(base: &Path, path: &Path) -> std::result::Result<Protograph, Failure> {
    let p = base.join(path);
    let text = std::fs::read_to_string(&p).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", p.display())))?;
    Protograph::parse(&text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftFile {
    protograph: PathBuf,
    z: usize,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
}

fn cmd_lift(c: &Common) -> CliResult {
    let (cfg, base): (LiftFile, _) = load(&c.config)?;
    let p = read_protograph(&base, &cfg.protograph)?;
    let code = lift(&p, cfg.z, c.seed.unwrap_or(cfg.seed))?;
    let out = output(c, &base, cfg.out.as_deref(), "code.alist");
    write(&out, &write_alist(code.h()))?;
    println!(
        "n={} k={} four_cycles={}",
        code.n(),
        code.k(),
        code.h().count_four_cycles()
    );
    Ok(())
}

fn default_stop() -> usize {
    100
}
fn default_outer() -> usize {
    30
}
fn default_inner() -> usize {
    2
}
fn default_groups() -> usize {
    2
}

#[derive(Deserialize, Default, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum Strategy {
    #[default]
    Spread,
    Split,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    code: CodeSource,
    users: usize,
    ebn0_db: Sweep,
    frames: usize,
    #[serde(default = "default_stop")]
    stop_after_errors: usize,
    #[serde(default = "default_outer")]
    outer_iterations: usize,
    #[serde(default = "default_inner")]
    inner_iterations: usize,
    #[serde(default)]
    seed: u64,
    n_prime: Option<usize>,
    #[serde(default)]
    strategy: Option<Strategy>,
    groups: Option<usize>,
    signatures_out: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn cmd_simulate(c: &Common, spread: bool) -> CliResult {
    let (cfg, base): (SimFile, _) = load(&c.config)?;
    if !spread && (cfg.strategy.is_some() || cfg.groups.is_some() || cfg.signatures_out.is_some()) {
        return Err(Failure::Usage(
            "strategy, groups and signatures_out belong to spread-sim".into(),
        ));
    }
    let seed = c.seed.unwrap_or(cfg.seed);
    let layout = match (spread, cfg.strategy.unwrap_or_default(), cfg.n_prime) {
        (false, _, None) => Layout::Unspread,
        (_, Strategy::Spread, Some(n_prime)) => Layout::Spread { n_prime },
        (true, Strategy::Spread, None) => return Err(Failure::Usage("spread-sim needs n_prime".into())),
        (true, Strategy::Split, _) => Layout::Split {
            groups: cfg.groups.unwrap_or_else(default_groups),
        },
        (false, Strategy::Split, Some(_)) => unreachable!("strategy rejected above"),
    };
    let code = cfg.code.build(&base)?;
    let sim = SimConfig {
        users: cfg.users,
        ebn0_db: cfg.ebn0_db.points()?,
        frames: cfg.frames,
        stop_after_errors: cfg.stop_after_errors,
        schedule: Schedule {
            outer: cfg.outer_iterations,
            inner: cfg.inner_iterations,
        },
        seed,
        layout,
    };
    sim.validate()?;
    if let (Some(p), Layout::Spread { n_prime }) = (&cfg.signatures_out, layout) {
        let sig = generate_signatures(cfg.users, code.n(), n_prime, crate::rng::derive_seed(seed, &[0x6c61_796f]))?;
        write(&base.join(p), &sig.to_json()?)?;
    }
    let points = run_fer_sweep(&code, &sim)?;
    let out = output(c, &base, cfg.out.as_deref(), "fer.csv");
    write_fer_csv_file(&out, &points)?;
    for p in &points {
        println!(
            "ebn0_db={} frames={} frame_errors={} fer={} ber={}",
            p.ebn0_db, p.frames, p.frame_errors, p.fer, p.ber
        );
    }
    Ok(())
}

fn default_samples() -> usize {
    10_000
}
fn default_lo() -> f64 {
    -2.0
}
fn default_hi() -> f64 {
    12.0
}
fn default_resolution() -> f64 {
    0.01
}
fn default_max_iterations() -> usize {
    1000
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PexitFile {
    protograph: PathBuf,
    users: usize,
    #[serde(default)]
    estimator: Estimator,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    state_info: StateInfoMode,
    #[serde(default = "default_lo")]
    lo_db: f64,
    #[serde(default = "default_hi")]
    hi_db: f64,
    #[serde(default = "default_resolution")]
    resolution_db: f64,
    #[serde(default = "default_max_iterations")]
    max_iterations: usize,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
}

fn cmd_pexit(c: &Common) -> CliResult {
    let (cfg, base): (PexitFile, _) = load(&c.config)?;
    if cfg.users == 0 {
        return Err(Failure::Usage("users must be at least 1".into()));
    }
    let p = read_protograph(&base, &cfg.protograph)?;
    let tc = ThresholdConfig {
        users: cfg.users,
        estimator: cfg.estimator,
        samples: cfg.samples,
        evolution: EvolutionOptions {
            max_iters: cfg.max_iterations,
            ..EvolutionOptions::default()
        },
        lo_db: cfg.lo_db,
        hi_db: cfg.hi_db,
        resolution_db: cfg.resolution_db,
        seed: c.seed.unwrap_or(cfg.seed),
        mode: cfg.state_info,
    };
    let t = pexit_threshold(&p, &tc)?;
    let out = output(c, &base, cfg.out.as_deref(), "trajectory.csv");
    write(&out, &t.evolution.trajectory_csv())?;
    println!("threshold_db={}", t.ebn0_db);
    Ok(())
}

fn default_rows() -> usize {
    3
}
fn default_cols() -> usize {
    4
}
fn default_mult() -> u32 {
    3
}
fn default_temperature() -> f64 {
    0.5
}
fn default_cooling() -> f64 {
    0.98
}
fn default_steps() -> usize {
    300
}
fn default_chains() -> usize {
    1
}
fn default_tabulated() -> StateInfoMode {
    StateInfoMode::Tabulated
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeFile {
    #[serde(default = "default_rows")]
    rows: usize,
    #[serde(default = "default_cols")]
    cols: usize,
    users: usize,
    #[serde(default = "default_mult")]
    max_multiplicity: u32,
    start: Option<PathBuf>,
    #[serde(default = "default_temperature")]
    initial_temperature: f64,
    #[serde(default = "default_cooling")]
    cooling: f64,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_chains")]
    chains: usize,
    #[serde(default)]
    estimator: Estimator,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_tabulated")]
    state_info: StateInfoMode,
    #[serde(default = "default_lo")]
    lo_db: f64,
    #[serde(default = "default_hi")]
    hi_db: f64,
    #[serde(default = "default_resolution")]
    resolution_db: f64,
    #[serde(default = "default_max_iterations")]
    max_iterations: usize,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
}

fn cmd_optimize(c: &Common) -> CliResult {
    let (cfg, base): (OptimizeFile, _) = load(&c.config)?;
    let start = cfg.start.as_ref().map(|p| read_protograph(&base, p)).transpose()?;
    let search = SearchConfig {
        rows: cfg.rows,
        cols: cfg.cols,
        max_multiplicity: cfg.max_multiplicity,
        users: cfg.users,
        initial_temperature: cfg.initial_temperature,
        cooling: cfg.cooling,
        steps: cfg.steps,
        chains: cfg.chains,
        seed: c.seed.unwrap_or(cfg.seed),
        start,
        estimator: cfg.estimator,
        samples: cfg.samples,
        mode: cfg.state_info,
        lo_db: cfg.lo_db,
        hi_db: cfg.hi_db,
        resolution_db: cfg.resolution_db,
        evolution: EvolutionOptions {
            max_iters: cfg.max_iterations,
            ..EvolutionOptions::default()
        },
    };
    let result = optimize_protograph(&search)?;
    let out = output(c, &base, cfg.out.as_deref(), "protograph.txt");
    let log = match &cfg.log {
        Some(p) if c.out.is_none() => base.join(p),
        _ => {
            let mut s = out.clone().into_os_string();
            s.push(".log.json");
            PathBuf::from(s)
        }
    };
    write(&out, &result.protograph.to_text())?;
    write(&log, &result.log.to_json()?)?;
    println!("threshold_db={}", result.threshold_db);
    print!("{}", result.protograph.to_text());
    Ok(())
}
