//! Command-line front end.
//!
//! Exit codes: `0` success, `1` numerical failure (non-convergence under
//! `--strict`), `2` usage errors and malformed input.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_phase_transition, run_rip_sweep, rip_records_to_csv, summary_to_csv, ExperimentSpec, Task};
use crate::error::Error;
use crate::measurements::{estimate_rip, FactorInner, MapSpec, MeasurementKind, MeasurementMap, RankOneScale, RipMode};
use crate::projections::{
    exact_project, head_anchor, head_joint, head_psd_lowrank, head_rowcol, head_square,
    head_square_variant, tail_bisparse, tail_joint, ProjectionOutcome,
};
use crate::recovery::{recover, step_beta_with_seed, Algorithm, HeadChoice, RecoveryConfig, BETA_SEED};
use crate::textio::{read_matrix, read_vector, write_matrix, write_vector};

#[derive(Parser, Debug)]
#[command(
    name = "bisparse",
    version,
    about = "Projections, measurements and recovery for jointly low-rank and bisparse symmetric matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply a projection to a matrix (text format on a file or stdin).
    Project(ProjectArgs),
    /// Sample a measurement map and measure a matrix.
    Measure(MeasureArgs),
    /// Recover a matrix from a map header and measurements.
    Recover(RecoverArgs),
    /// Estimate restricted-isometry constants of a map.
    Rip(RipArgs),
    /// Run a benchmark spec and write its CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum ProjectionOp {
    Exact,
    TailBisparse,
    TailJoint,
    HeadSquare,
    HeadRowcol,
    HeadAnchor,
    HeadPsd,
    HeadJoint,
    HeadSquareVariant,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long, value_enum)]
    op: ProjectionOp,
    #[arg(long)]
    s: usize,
    /// Rank; required by exact, tail-joint, head-joint and head-square-variant,
    /// optional override for head-psd.
    #[arg(long)]
    r: Option<usize>,
    /// Matrix file; stdin when omitted.
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[arg(long, value_parser = parse_with::<MeasurementKind>)]
    kind: MeasurementKind,
    #[arg(long)]
    m: usize,
    /// Sketch size of factorized maps.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_parser = parse_with::<FactorInner>, default_value = "matrices")]
    inner: FactorInner,
    #[arg(long, value_parser = parse_with::<RankOneScale>, default_value = "normalized")]
    scale: RankOneScale,
    #[arg(long)]
    seed: u64,
    /// Where to write the map header; stderr-only echo when omitted.
    #[arg(long)]
    map_out: Option<PathBuf>,
    /// Matrix file to measure; stdin when omitted.
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    /// Map header file.
    #[arg(long)]
    map: PathBuf,
    /// Measurement vector file; stdin when omitted.
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long, value_parser = parse_with::<Algorithm>)]
    algo: Algorithm,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_parser = parse_with::<HeadChoice>, default_value = "square")]
    head: HeadChoice,
    /// Step parameter of rank-one recovery; estimated when omitted.
    #[arg(long)]
    beta: Option<f64>,
    /// Seed of the probes that estimate the step parameter.
    #[arg(long, default_value_t = BETA_SEED)]
    seed: u64,
    /// Normalized step size in the low-rank stage of two-step recovery.
    #[arg(long)]
    normalized_step: bool,
    /// Exit with status 1 when the solver does not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct RipArgs {
    /// Map header file.
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, value_parser = parse_with::<RipMode>, default_value = "l2")]
    mode: RipMode,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-cell success table (recovery sweeps only).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads; the output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a subcommand with its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) | Error::Domain(_) => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure { code: 2, message: format!("{}: {e}", path.display()) }
}

fn read_input(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| io_failure(p, e)),
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure { code: 2, message: format!("stdin: {e}") })?;
            Ok(s)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure { code: 2, message: format!("stdout: {e}") }),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// Renders a projection result: support line, objective line, matrix block.
pub fn format_projection(out: &ProjectionOutcome) -> String {
    format!("{}\n{:e}\n{}", out.support, out.objective, write_matrix(&out.matrix))
}

fn project(args: &ProjectArgs) -> Result<(), Failure> {
    let (m, _) = read_matrix(&read_input(args.input.as_deref())?)?;
    let rank = || args.r.ok_or_else(|| usage(format!("--r is required for {:?}", args.op)));
    let out = match args.op {
        ProjectionOp::Exact => exact_project(&m, args.s, rank()?)?,
        ProjectionOp::TailBisparse => tail_bisparse(&m, args.s)?,
        ProjectionOp::TailJoint => tail_joint(&m, args.s, rank()?)?,
        ProjectionOp::HeadSquare => head_square(&m, args.s)?,
        ProjectionOp::HeadRowcol => head_rowcol(&m, args.s)?,
        ProjectionOp::HeadAnchor => head_anchor(&m, args.s)?,
        ProjectionOp::HeadPsd => head_psd_lowrank(&m, args.s, args.r)?,
        ProjectionOp::HeadJoint => head_joint(&m, args.s, rank()?)?,
        ProjectionOp::HeadSquareVariant => head_square_variant(&m, args.s, rank()?)?,
    };
    write_output(None, &format_projection(&out))
}

fn measure(args: &MeasureArgs) -> Result<(), Failure> {
    let (x, _) = read_matrix(&read_input(args.input.as_deref())?)?;
    let n = x.dim();
    let mut spec = match args.kind {
        MeasurementKind::Factorized => {
            let p = args.p.ok_or_else(|| usage("--p is required for factorized maps"))?;
            MapSpec::factorized(n, args.m, p, args.inner, args.seed)
        }
        kind => MapSpec::new(kind, n, args.m, args.seed),
    };
    spec.scale = args.scale;
    eprintln!("seed = {}", args.seed);
    let map = MeasurementMap::sample(&spec)?;
    let y = map.apply(&x)?;
    match &args.map_out {
        Some(path) => write_output(Some(path), &spec.to_header())?,
        None => eprint!("{}", spec.to_header()),
    }
    write_output(None, &write_vector(&y))
}

fn load_map(path: &Path) -> Result<MeasurementMap, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let spec = MapSpec::from_header(&text)?;
    eprintln!("seed = {}", spec.seed);
    Ok(MeasurementMap::sample(&spec)?)
}

fn recover_cmd(args: &RecoverArgs) -> Result<(), Failure> {
    let map = load_map(&args.map)?;
    let y = read_vector(&read_input(args.y.as_deref())?)?;
    let mut cfg = RecoveryConfig {
        max_iters: args.max_iters,
        tol_residual: args.tol,
        head_choice: args.head,
        step_beta: args.beta,
        normalized_step: args.normalized_step,
        ..RecoveryConfig::default()
    };
    if args.algo == Algorithm::RankOne && cfg.step_beta.is_none() {
        eprintln!("beta seed = {}", args.seed);
        cfg.step_beta = Some(step_beta_with_seed(&map, 2 * args.s, 2 * args.r, args.seed)?);
    }
    let res = recover(args.algo, &map, &y, args.s, args.r, &cfg)?;
    let text = format!(
        "converged = {}\niterations = {}\nresidual = {:e}\nsupport = {}\n{}",
        res.converged,
        res.iterations,
        res.final_residual(),
        res.support,
        write_matrix(&res.estimate)
    );
    write_output(None, &text)?;
    if args.strict && !res.converged {
        return Err(Failure {
            code: 1,
            message: format!("no convergence after {} iterations ({:?})", res.iterations, res.stop),
        });
    }
    Ok(())
}

fn rip(args: &RipArgs) -> Result<(), Failure> {
    let map = load_map(&args.map)?;
    eprintln!("probe seed = {}", args.seed);
    let est = estimate_rip(&map, args.s, args.r, args.trials, args.mode, args.seed)?;
    let text = format!(
        "mode = {}\ntrials = {}\ndelta_lower = {:e}\nalpha_hat = {:e}\nbeta_hat = {:e}\nratio = {:e}\n",
        est.mode,
        est.trials,
        est.delta_lower,
        est.alpha_hat,
        est.beta_hat,
        est.condition_ratio()
    );
    write_output(None, &text)
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.spec).map_err(|e| io_failure(&args.spec, e))?;
    let spec = ExperimentSpec::parse(&text)?;
    eprintln!("base_seed = {}", spec.base_seed);
    let run = || -> Result<(String, Option<String>), Error> {
        match spec.algo {
            Task::Rip => Ok((rip_records_to_csv(&run_rip_sweep(&spec)?), None)),
            Task::Recovery(_) => {
                let pt = run_phase_transition(&spec)?;
                Ok((pt.to_csv(), Some(summary_to_csv(&pt.summary))))
            }
        }
    };
    let (csv, summary) = match args.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| usage(format!("cannot start {k} threads: {e}")))?
            .install(run)?,
        None => run()?,
    };
    write_output(args.out.as_deref(), &csv)?;
    if let Some(path) = &args.summary {
        let table = summary.ok_or_else(|| usage("--summary applies to recovery sweeps only"))?;
        write_output(Some(path), &table)?;
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Project(a) => project(a),
        Command::Measure(a) => measure(a),
        Command::Recover(a) => recover_cmd(a),
        Command::Rip(a) => rip(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
