//! The `vqd-sched` binary: batch harness over the library.
//!
//! Subcommands: `gen` (random workload to TOML), `simulate` (one policy,
//! schedule CSV plus metrics), `compare` (all three policies side by
//! side), `sweep` (scaling study over a qubit range, CSV with theoretical
//! reference columns), `oracle` (exhaustive ground truth on a tiny
//! instance).
//!
//! Exit codes are stable: 0 success, 2 usage, 3 file I/O, 4 invalid
//! workload, 5 solver failure, 6 oracle refusal. Diagnostics and advisory
//! notes go to stderr; stdout carries only data.
//!
//! Every output is deterministic for fixed inputs and seeds except
//! wall-clock fields, which are confined to dedicated columns
//! (`elapsed_ms`) or files so the remaining bytes reproduce exactly.
//! The default per-gap time budget is 500 ms, overridable per run with
//! `--time-budget-ms` or globally with the env var named by
//! [`TIME_BUDGET_ENV`] (the flag wins).

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::coda::{
    coda_schedule, pigeonhole_floor, stirling_bound, Backend, CodaError, CodaOutcome,
    GapAttempt, SolverConfig, VerdictKind,
};
use crate::metrics::{compare_policies, compute_metrics, MetricsReport};
use crate::oracle::{brute_force_with_cap, OracleError, DEFAULT_LEAF_CAP};
use crate::policy::{schedule_mls, schedule_rr, AllocationMap};
use crate::workload::{
    generate_workload, parse_workload, serialize_workload, Workload, WorkloadError,
    WorkloadGenSpec,
};

pub const TIME_BUDGET_ENV: &str = "VQD_SCHED_TIME_BUDGET_MS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const WORKLOAD: i32 = 4;
    pub const SOLVER: i32 = 5;
    pub const ORACLE: i32 = 6;
}

#[derive(Parser)]
#[command(
    name = "vqd-sched",
    about = "Schedule a shared pool of QEC decoders across logical qubits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random workload file.
    Gen(GenArgs),
    /// Run one policy over a workload; emit the schedule and its metrics.
    Simulate(SimulateArgs),
    /// Run rr, mls, and the solver on the same workload, side by side.
    Compare(CompareArgs),
    /// Scaling study: solver wall time across a range of qubit counts.
    Sweep(SweepArgs),
    /// Exhaustive enumeration ground truth for a small workload.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(usize))]
    qubits: usize,
    #[arg(long)]
    slices: usize,
    #[arg(long)]
    decoders: usize,
    /// Per qubit-slice probability of a T gate.
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Rr,
    Mls,
    Coda,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Search,
    Sat,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Search => Backend::CompleteSearch,
            BackendArg::Sat => Backend::SatEncoding,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Per-gap wall-clock budget in milliseconds (default: env var, else 500).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    time_budget_ms: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    gap_start: usize,
    /// Largest gap to try; the horizon length when omitted.
    #[arg(long)]
    gap_max: Option<usize>,
    #[arg(long, value_enum, default_value = "search")]
    backend: BackendArg,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, CliError> {
        Ok(SolverConfig {
            gap_start: self.gap_start,
            gap_max: self.gap_max,
            per_gap_budget: resolve_time_budget(
                self.time_budget_ms,
                std::env::var(TIME_BUDGET_ENV).ok().as_deref(),
            )
            .map_err(CliError::Usage)?,
            backend: self.backend.into(),
            rng_seed: 0,
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    workload: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// Schedule CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics CSV path; without it metrics go to stdout as text (or to
    /// stderr when the schedule already owns stdout).
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    bytes_per_syndrome: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    workload: PathBuf,
    /// Comparison CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-gap solver log CSV (the only timing-bearing compare output).
    #[arg(long)]
    log_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    bytes_per_syndrome: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Inclusive qubit range as start:stop:step.
    #[arg(long, default_value = "5:40:5")]
    qubits: String,
    #[arg(long, default_value_t = 16, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    slices: usize,
    /// Decoders per point: M = max(1, ceil(N / ratio)).
    #[arg(long, default_value_t = 4, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    decoder_ratio: usize,
    /// Fixed decoder count per point, overriding --decoder-ratio.
    #[arg(long, conflicts_with = "decoder_ratio")]
    decoders: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long, default_value_t = 3, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel worker threads; row order is deterministic regardless.
    #[arg(long, default_value_t = 1, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    jobs: usize,
    /// Sweep CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    workload: PathBuf,
    /// Largest gap to tabulate; L - 1 (at least 1) when omitted.
    #[arg(long, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    g_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_LEAF_CAP)]
    leaf_cap: u64,
    /// Optimal witness schedule CSV.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Io(String),
    Workload(WorkloadError),
    Solver(String),
    Oracle(OracleError),
}

impl CliError {
    fn io(path: &Path, err: std::io::Error) -> CliError {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::IO,
            CliError::Workload(_) => exit::WORKLOAD,
            CliError::Solver(_) => exit::SOLVER,
            CliError::Oracle(_) => exit::ORACLE,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Solver(m) => m.clone(),
            CliError::Workload(e) => e.to_string(),
            CliError::Oracle(e) => e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

impl From<CodaError> for CliError {
    fn from(e: CodaError) -> CliError {
        CliError::Solver(e.to_string())
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    };
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn resolve_time_budget(
    flag_ms: Option<u64>,
    env_value: Option<&str>,
) -> Result<Duration, String> {
    let ms = match (flag_ms, env_value) {
        (Some(ms), _) => ms,
        (None, Some(raw)) => raw
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&ms| ms > 0)
            .ok_or_else(|| format!("{TIME_BUDGET_ENV} must be a positive integer, got {raw:?}"))?,
        (None, None) => 500,
    };
    Ok(Duration::from_millis(ms))
}

fn load_workload(path: &Path) -> Result<Workload, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_workload(&text).map_err(CliError::Workload)
}

fn write_out(path: Option<&PathBuf>, bytes: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{bytes}");
            std::io::stdout().flush().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn real(x: f64) -> String {
    format!("{x:.6}")
}

fn millis(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

fn schedule_csv(a: &AllocationMap) -> String {
    let mut out = String::from("slice,decoder,qubit\n");
    for (t, d, q) in a.iter_all() {
        let _ = writeln!(out, "{t},{d},{q}");
    }
    out
}

fn metrics_csv_row(r: &MetricsReport, g_final: Option<usize>) -> Vec<String> {
    vec![
        r.workload.clone(),
        r.policy.clone(),
        g_final.map(|g| g.to_string()).unwrap_or_default(),
        r.longest_undecoded.to_string(),
        real(r.avg_used_decoders_per_slice),
        real(r.decoder_utilization),
        r.peak_memory_bytes.to_string(),
        real(r.avg_undecoded_run_length),
        r.runs_at_or_above_avg.to_string(),
    ]
}

const METRICS_HEADER: [&str; 9] = [
    "workload",
    "policy",
    "g_final",
    "longest_undecoded",
    "avg_used_decoders_per_slice",
    "decoder_utilization",
    "peak_memory_bytes",
    "avg_undecoded_run_length",
    "runs_at_or_above_avg",
];

fn metrics_text(r: &MetricsReport, g_final: Option<usize>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "workload: {}", r.workload);
    let _ = writeln!(out, "policy: {}", r.policy);
    if let Some(g) = g_final {
        let _ = writeln!(out, "g_final: {g}");
    }
    let _ = writeln!(out, "longest_undecoded: {}", r.longest_undecoded);
    let _ = writeln!(
        out,
        "avg_used_decoders_per_slice: {}",
        real(r.avg_used_decoders_per_slice)
    );
    let _ = writeln!(out, "decoder_utilization: {}", real(r.decoder_utilization));
    let _ = writeln!(out, "peak_memory_bytes: {}", r.peak_memory_bytes);
    let _ = writeln!(
        out,
        "avg_undecoded_run_length: {}",
        real(r.avg_undecoded_run_length)
    );
    let _ = writeln!(out, "runs_at_or_above_avg: {}", r.runs_at_or_above_avg);
    out
}

fn gap_log_csv(log: &[GapAttempt]) -> String {
    let mut out = String::from("gap,verdict,elapsed_ms,nodes,conflicts\n");
    for a in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            a.gap,
            a.verdict.as_str(),
            millis(a.elapsed),
            a.nodes,
            a.conflicts
        );
    }
    out
}

/// Advisory notes about a finished solver run, on stderr so data streams
/// stay clean.
fn solver_notes(w: &Workload, g_final: usize, log: &[GapAttempt]) {
    let timeouts = log
        .iter()
        .filter(|a| a.verdict == VerdictKind::Timeout)
        .count();
    if timeouts > 0 {
        eprintln!(
            "note: {timeouts} gap check(s) timed out before g_final = {g_final}; \
             minimality is not proven for this run"
        );
    }
    let floor = pigeonhole_floor(w.num_qubits(), w.num_decoders());
    if g_final < floor {
        eprintln!(
            "note: g_final = {g_final} sits below the ceil(N/M) = {floor} floor; \
             that bound is conservative under the zero-start backlog convention"
        );
    }
}

fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let w = generate_workload(&WorkloadGenSpec {
        num_qubits: a.qubits,
        num_slices: a.slices,
        num_decoders: a.decoders,
        tgate_density: a.density,
        rng_seed: a.seed,
    })
    .map_err(CliError::Workload)?;
    write_out(a.out.as_ref(), &serialize_workload(&w))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let w = load_workload(&a.workload)?;
    let (schedule, g_final) = match a.policy {
        PolicyArg::Rr => (schedule_rr(&w), None),
        PolicyArg::Mls => (schedule_mls(&w), None),
        PolicyArg::Coda => match coda_schedule(&w, &a.solver.config()?)? {
            CodaOutcome::Solved(sol) => {
                solver_notes(&w, sol.g_final, &sol.log);
                (sol.schedule, Some(sol.g_final))
            }
            CodaOutcome::Exhausted { log } => {
                return Err(CliError::Solver(format!(
                    "no feasible gap in range after {} attempts (timeouts: {})",
                    log.len(),
                    log.iter()
                        .filter(|x| x.verdict == VerdictKind::Timeout)
                        .count()
                )));
            }
        },
    };
    let policy_name = match a.policy {
        PolicyArg::Rr => "rr",
        PolicyArg::Mls => "mls",
        PolicyArg::Coda => "coda",
    };
    let report = compute_metrics(&w, &schedule, policy_name, a.bytes_per_syndrome)
        .expect("freshly produced schedule must validate");
    write_out(a.out.as_ref(), &schedule_csv(&schedule))?;
    match &a.metrics_out {
        Some(path) => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(METRICS_HEADER)?;
            wtr.write_record(metrics_csv_row(&report, g_final))?;
            let bytes = wtr.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        }
        None => {
            let text = metrics_text(&report, g_final);
            if a.out.is_some() {
                print!("{text}");
            } else {
                eprint!("{text}");
            }
        }
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let w = load_workload(&a.workload)?;
    let cmp = compare_policies(&w, &a.solver.config()?, a.bytes_per_syndrome)?;
    match cmp.coda_g_final {
        Some(g) => solver_notes(&w, g, &cmp.coda_log),
        None => eprintln!(
            "note: solver exhausted its gap range without a feasible verdict; \
             report carries baseline rows only"
        ),
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(METRICS_HEADER)?;
    for row in &cmp.rows {
        let g = (row.policy == "coda").then_some(cmp.coda_g_final).flatten();
        wtr.write_record(metrics_csv_row(row, g))?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_out(
        a.out.as_ref(),
        std::str::from_utf8(&bytes).expect("csv output is utf-8"),
    )?;
    if let Some(path) = &a.log_out {
        fs::write(path, gap_log_csv(&cmp.coda_log)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<(), CliError> {
    let w = load_workload(&a.workload)?;
    let g_max = a.g_max.unwrap_or_else(|| (w.num_slices() - 1).max(1));
    let result = brute_force_with_cap(&w, g_max, a.leaf_cap).map_err(CliError::Oracle)?;
    let mut out = String::new();
    let _ = writeln!(out, "workload: {}", w.name());
    let _ = writeln!(out, "g_max: {g_max}");
    let _ = writeln!(
        out,
        "min_feasible_g: {}",
        result
            .min_feasible_g
            .map(|g| g.to_string())
            .unwrap_or_else(|| "none".into())
    );
    for (g, count) in &result.feasible_count_by_g {
        let _ = writeln!(out, "count[g={g}]: {count}");
    }
    match (&result.witness, &a.witness_out) {
        (Some(witness), Some(path)) => {
            fs::write(path, schedule_csv(witness)).map_err(|e| CliError::io(path, e))?;
        }
        (None, Some(_)) => eprintln!("note: no witness to write"),
        _ => {}
    }
    write_out(None, &out)
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderRule {
    Fixed(usize),
    /// M = max(1, ceil(N / ratio)), holding pressure steady as N grows.
    Ratio(usize),
}

impl DecoderRule {
    fn decoders_for(&self, n: usize) -> usize {
        match *self {
            DecoderRule::Fixed(m) => m,
            DecoderRule::Ratio(k) => n.div_ceil(k).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub qubit_start: usize,
    pub qubit_stop: usize,
    pub qubit_step: usize,
    pub num_slices: usize,
    pub decoder_rule: DecoderRule,
    pub tgate_density: f64,
    pub reps: usize,
    pub per_gap_budget: Duration,
    pub backend: Backend,
    pub base_seed: u64,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub num_qubits: usize,
    pub num_decoders: usize,
    pub rep: usize,
    pub seed: u64,
    /// "solved", "exhausted", or an in-row failure description; the sweep
    /// never aborts over one point.
    pub status: String,
    pub g_final: Option<usize>,
    pub gaps_tried: usize,
    pub timeouts: usize,
    /// Wall-clock solver time. The only nondeterministic field.
    pub elapsed_ms: f64,
    /// Theoretical reference columns for plotting: 2^N and the
    /// sqrt(2/(pi N)) 2^N central-binomial estimate.
    pub pow2_n: f64,
    pub stirling_2n: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn sweep_point(spec: &SweepSpec, n: usize, rep: usize, index: u64) -> SweepRow {
    let m = spec.decoder_rule.decoders_for(n);
    let seed = splitmix64(spec.base_seed.wrapping_add(index));
    let mut row = SweepRow {
        num_qubits: n,
        num_decoders: m,
        rep,
        seed,
        status: String::new(),
        g_final: None,
        gaps_tried: 0,
        timeouts: 0,
        elapsed_ms: 0.0,
        pow2_n: (n as f64).exp2(),
        stirling_2n: stirling_bound(n),
    };
    let w = match generate_workload(&WorkloadGenSpec {
        num_qubits: n,
        num_slices: spec.num_slices,
        num_decoders: m,
        tgate_density: spec.tgate_density,
        rng_seed: seed,
    }) {
        Ok(w) => w,
        Err(e) => {
            row.status = format!("gen-error: {e}");
            return row;
        }
    };
    let cfg = SolverConfig {
        per_gap_budget: spec.per_gap_budget,
        backend: spec.backend,
        ..SolverConfig::default()
    };
    let started = Instant::now();
    let outcome = coda_schedule(&w, &cfg);
    row.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(outcome) => {
            let log = outcome.log();
            row.gaps_tried = log.len();
            row.timeouts = log
                .iter()
                .filter(|a| a.verdict == VerdictKind::Timeout)
                .count();
            match outcome {
                CodaOutcome::Solved(sol) => {
                    row.status = "solved".into();
                    row.g_final = Some(sol.g_final);
                }
                CodaOutcome::Exhausted { .. } => row.status = "exhausted".into(),
            }
        }
        Err(e) => row.status = format!("solver-fault: {e}"),
    }
    row
}

/// Runs every (qubit count, repetition) point and returns rows in point
/// order, independent of worker scheduling. Failures stay in-row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, String> {
    if spec.qubit_step == 0 {
        return Err("qubit step must be positive".into());
    }
    if spec.qubit_start == 0 || spec.qubit_start > spec.qubit_stop {
        return Err("qubit range must be non-empty and start at 1 or more".into());
    }
    if spec.reps == 0 {
        return Err("reps must be at least 1".into());
    }
    if let DecoderRule::Fixed(0) = spec.decoder_rule {
        return Err("fixed decoder count must be at least 1".into());
    }

    let mut points = Vec::new();
    let mut n = spec.qubit_start;
    while n <= spec.qubit_stop {
        for rep in 0..spec.reps {
            points.push((n, rep));
        }
        n += spec.qubit_step;
    }

    let results: Vec<Mutex<Option<SweepRow>>> =
        points.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let workers = spec.jobs.max(1).min(points.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(&(n, rep)) = points.get(i) else {
                    break;
                };
                let row = sweep_point(spec, n, rep, i as u64);
                *results[i].lock().unwrap() = Some(row);
            });
        }
    });
    Ok(results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every point visited"))
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "n,m,rep,seed,status,g_final,gaps_tried,timeouts,elapsed_ms,pow2_n,stirling_2n\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3},{:.6e},{:.6e}",
            r.num_qubits,
            r.num_decoders,
            r.rep,
            r.seed,
            r.status,
            r.g_final.map(|g| g.to_string()).unwrap_or_default(),
            r.gaps_tried,
            r.timeouts,
            r.elapsed_ms,
            r.pow2_n,
            r.stirling_2n
        );
    }
    out
}

fn parse_qubit_range(raw: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got {raw:?}"));
    };
    let parse = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("{what} in {raw:?} is not a number"))
    };
    let (start, stop, step) = (
        parse(start, "start")?,
        parse(stop, "stop")?,
        parse(step, "step")?,
    );
    if step == 0 || start == 0 || start > stop {
        return Err(format!(
            "range {raw:?} must satisfy 1 <= start <= stop with step >= 1"
        ));
    }
    Ok((start, stop, step))
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let (start, stop, step) = parse_qubit_range(&a.qubits).map_err(CliError::Usage)?;
    let spec = SweepSpec {
        qubit_start: start,
        qubit_stop: stop,
        qubit_step: step,
        num_slices: a.slices,
        decoder_rule: match a.decoders {
            Some(m) => DecoderRule::Fixed(m),
            None => DecoderRule::Ratio(a.decoder_ratio),
        },
        tgate_density: a.density,
        reps: a.reps,
        per_gap_budget: a.solver.config()?.per_gap_budget,
        backend: a.solver.backend.into(),
        base_seed: a.seed,
        jobs: a.jobs,
    };
    let rows = run_sweep(&spec).map_err(CliError::Usage)?;
    write_out(a.out.as_ref(), &sweep_csv(&rows))
}
