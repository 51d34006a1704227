//! The `diffsum` command line: `plan`, `simulate`, `reproduce-table`,
//! `audit` and `serve`.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::audit::{self, CandidateId, Decision, Interpretation};
use crate::bravo::bravo_expected_size;
use crate::sampling::{BallotManifest, EscalationSchedule, SeededRng, Truth};
use crate::service::{self, build_params};
use crate::session::{read_log, replay, AuditSession, EventLog, SessionError, SessionStore, DEFAULT_LIVE_SCHEDULE};
use crate::simulator::{
    self, reproduce_delta_table, run_simulation_with_threads, DiffSumTarget, RuleConfig, SimulationConfig,
    SimulationReport,
};
use crate::Error;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 2024;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "diffsum", version, about = "DiffSum ballot-polling audits")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// More logging on stderr (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive c and the risk bound, and estimate sample sizes.
    Plan(PlanArgs),
    /// Run a Monte Carlo experiment.
    Simulate(SimulateArgs),
    /// Measure wrong-acceptance rates on ties against the delta table.
    ReproduceTable(TableArgs),
    /// Run an audit interactively from the terminal.
    Audit(AuditArgs),
    /// Serve the session HTTP API and the web UI.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Ballots cast.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=4))]
    pub delta: u32,
    /// Expected margin, as a fraction of valid votes.
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleName {
    Diffsum,
    Bravo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetName {
    ReportedWinner,
    SampleLeader,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; other experiment flags are then ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    /// True margin of the reported winner; 0 (the default) is a tie.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    #[arg(long, value_enum, default_value_t = RuleName::Diffsum)]
    pub rule: RuleName,
    #[arg(long, conflicts_with = "delta")]
    pub c: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=4))]
    pub delta: Option<u32>,
    #[arg(long, value_enum, default_value_t = TargetName::ReportedWinner)]
    pub target: TargetName,
    /// BRAVO risk limit.
    #[arg(long, default_value_t = 0.10)]
    pub alpha: f64,
    /// BRAVO reported winner share; defaults to (1 + margin) / 2, or 0.6 on a tie.
    #[arg(long)]
    pub p_w: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = simulator::DEFAULT_TRIALS)]
    pub trials: u64,
    /// `per-ballot`, `step:K` or `geometric:F`.
    #[arg(long, default_value = "per-ballot")]
    pub schedule: EscalationSchedule,
    #[arg(long, default_value_t = audit::DEFAULT_INITIAL_SAMPLE_SIZE)]
    pub initial: u64,
    /// Stop trials at this fraction of n with a cutover recommendation.
    #[arg(long)]
    pub cutover: Option<f64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = simulator::DEFAULT_TRIALS)]
    pub trials: u64,
    /// Electorate sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub deltas: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Ballot manifest CSV (`ballot_id[,label]`).
    #[arg(long, required_unless_present = "resume")]
    pub manifest: Option<PathBuf>,
    /// Ballots cast; defaults to the manifest length and must match it.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_delimiter = ',', required_unless_present = "resume")]
    pub candidates: Vec<CandidateId>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=4), conflicts_with = "c")]
    pub delta: Option<u32>,
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Retrieval batches after the initial sample.
    #[arg(long, default_value_t = DEFAULT_LIVE_SCHEDULE)]
    pub schedule: EscalationSchedule,
    #[arg(long)]
    pub initial: Option<u64>,
    #[arg(long)]
    pub cutover: Option<f64>,
    /// Event log to create.
    #[arg(long, default_value = "audit.jsonl")]
    pub log: PathBuf,
    /// Continue the session recorded in this log.
    #[arg(long, conflicts_with_all = ["manifest", "candidates", "delta", "c"])]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Session logs and manifests live here.
    #[arg(long, env = "DIFFSUM_DATA_DIR", default_value = "diffsum-data")]
    pub data_dir: PathBuf,
    /// Built web UI assets.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Invalid(e) => e.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command. `stdin` feeds `audit`; results go to
/// `stdout` unless `--output` is given. Returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() { write!(stderr, "{}", e.render()) } else { write!(stdout, "{}", e.render()) };
            return e.exit_code();
        }
    };
    init_logging(cli.global.verbose);
    let result = match &cli.global.output {
        Some(path) => {
            File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))).and_then(|f| {
                let mut out = BufWriter::new(f);
                dispatch(&cli, stdin, &mut out)?;
                Ok(out.flush()?)
            })
        }
        None => dispatch(&cli, stdin, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

/// Logs go to stderr; `RUST_LOG` overrides the `-v` level.
fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into());
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).with_env_filter(filter).try_init();
}

fn dispatch(cli: &Cli, stdin: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let seed = cli.global.seed.unwrap_or(DEFAULT_SEED);
    let format = cli.global.format;
    match &cli.command {
        Command::Plan(args) => cmd_plan(args, format.unwrap_or(Format::Text), out),
        Command::Simulate(args) => cmd_simulate(args, cli.global.seed, format.unwrap_or(Format::Json), out),
        Command::ReproduceTable(args) => cmd_reproduce_table(args, seed, format.unwrap_or(Format::Csv), out),
        Command::Audit(args) => cmd_audit(args, seed, stdin, out),
        Command::Serve(args) => cmd_serve(args, out),
    }
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> CliResult {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSummary {
    pub n: u64,
    pub d: u32,
    pub delta: u32,
    pub c: u64,
    pub max_error_rate: f64,
    pub margin: Option<f64>,
    pub diffsum_expected_size: Option<f64>,
    pub bravo_expected_size: Option<f64>,
}

pub fn plan(n: u64, delta: u32, margin: Option<f64>) -> crate::Result<PlanSummary> {
    let risk = audit::max_error_rate(delta)?;
    let c = audit::choose_c(n, delta)?;
    let (diffsum, bravo) = match margin {
        Some(m) => (Some(audit::expected_stop_size(c, m)?), Some(bravo_expected_size(risk, m)?)),
        None => (None, None),
    };
    Ok(PlanSummary {
        n,
        d: audit::decimal_digits(n)?,
        delta,
        c,
        max_error_rate: risk,
        margin,
        diffsum_expected_size: diffsum,
        bravo_expected_size: bravo,
    })
}

fn cmd_plan(args: &PlanArgs, format: Format, out: &mut dyn Write) -> CliResult {
    let p = plan(args.n, args.delta, args.margin)?;
    match format {
        Format::Json => write_json(out, &p),
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_default();
            writeln!(out, "n,d,delta,c,max_error_rate,margin,diffsum_expected_size,bravo_expected_size")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.n,
                p.d,
                p.delta,
                p.c,
                p.max_error_rate,
                p.margin.map(|m| m.to_string()).unwrap_or_default(),
                opt(p.diffsum_expected_size),
                opt(p.bravo_expected_size)
            )?;
            Ok(())
        }
        Format::Text => {
            writeln!(out, "n = {}  d = {}  delta = {}  c = {}", p.n, p.d, p.delta, p.c)?;
            writeln!(out, "risk (max error rate) = {:.0}%", p.max_error_rate * 100.0)?;
            if let (Some(m), Some(ds), Some(b)) = (p.margin, p.diffsum_expected_size, p.bravo_expected_size) {
                writeln!(out, "expected ballots at margin {m}:")?;
                writeln!(out, "  DiffSum (c/m^2)           {ds:.1}")?;
                writeln!(out, "  BRAVO (alpha = {:.2})     {b:.1}", p.max_error_rate)?;
            }
            Ok(())
        }
    }
}

fn simulation_config(args: &SimulateArgs, seed: Option<u64>) -> CliResult<SimulationConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SimulationConfig>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let n = args.n.ok_or_else(|| CliError::Usage("--n is required without --config".into()))?;
            let truth = if args.margin == 0.0 { Truth::tie() } else { Truth::margin(args.margin) };
            let rule = match args.rule {
                RuleName::Diffsum => {
                    let target = match args.target {
                        TargetName::ReportedWinner => DiffSumTarget::ReportedWinner,
                        TargetName::SampleLeader => DiffSumTarget::SampleLeader,
                    };
                    match (args.c, args.delta) {
                        (None, None) => return Err(CliError::Usage("diffsum needs --c or --delta".into())),
                        (c, delta) => RuleConfig::DiffSum { c, delta, target },
                    }
                }
                RuleName::Bravo => {
                    let p_w = args.p_w.unwrap_or(if args.margin == 0.0 { 0.6 } else { (1.0 + args.margin) / 2.0 });
                    RuleConfig::bravo(args.alpha, p_w)
                }
            };
            let mut config = SimulationConfig::new(n, truth, rule)
                .with_trials(args.trials)
                .with_schedule(args.schedule)
                .with_initial_sample_size(args.initial)
                .with_seed(DEFAULT_SEED);
            if let Some(fraction) = args.cutover {
                config = config.with_cutover(fraction);
            }
            config
        }
    };
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>, format: Format, out: &mut dyn Write) -> CliResult {
    let config = simulation_config(args, seed)?;
    let mut report =
        run_simulation_with_threads(&config, args.threads).map_err(|e| CliError::Runtime(e.to_string()))?;
    if !args.timing {
        report = report.without_timing();
    }
    match format {
        Format::Json => write_json(out, &report),
        Format::Csv => Ok(simulator::write_reports_csv(std::slice::from_ref(&report), out)?),
        Format::Text => write_report_text(&report, out),
    }
}

fn write_report_text(r: &SimulationReport, out: &mut dyn Write) -> CliResult {
    let cfg = &r.config;
    writeln!(
        out,
        "n = {}  rule = {} ({})  trials = {}  seed = {}",
        cfg.n,
        cfg.rule.name(),
        r.rule_params(),
        r.trials,
        cfg.master_seed
    )?;
    writeln!(
        out,
        "wrong acceptances: {} ({:.4}, 95% CI {:.4}..{:.4})",
        r.wrong_acceptances, r.wrong_acceptance_rate, r.wrong_acceptance_ci.low, r.wrong_acceptance_ci.high
    )?;
    writeln!(
        out,
        "accepted {:.4}  full count {:.4}  cutover {:.4}",
        r.acceptance_rate, r.full_count_rate, r.cutover_rate
    )?;
    let s = &r.stopped_at;
    writeln!(
        out,
        "ballots examined: mean {:.1}  median {}  p90 {}  min {}  max {}",
        s.mean, s.median, s.p90, s.min, s.max
    )?;
    if let Some(t) = r.elapsed_seconds {
        writeln!(out, "elapsed {t:.2}s")?;
    }
    Ok(())
}

fn cmd_reproduce_table(args: &TableArgs, seed: u64, format: Format, out: &mut dyn Write) -> CliResult {
    for &delta in &args.deltas {
        audit::max_error_rate(delta)?;
    }
    let rows = reproduce_delta_table(&args.n, &args.deltas, args.trials, seed)?;
    for (n, lo, hi) in simulator::monotonicity_violations(&rows) {
        tracing::warn!(n, "rate rises from delta {lo} to {hi} by more than 2 sigma");
    }
    match format {
        Format::Csv => Ok(simulator::write_delta_table_csv(&rows, out)?),
        Format::Json => write_json(out, &rows),
        Format::Text => {
            writeln!(
                out,
                "{:>8} {:>2} {:>5} {:>3} {:>8} {:>17} {:>6} {:>9}  verdict",
                "n", "d", "delta", "c", "rate", "95% CI", "bound", "mean"
            )?;
            for r in &rows {
                writeln!(
                    out,
                    "{:>8} {:>2} {:>5} {:>3} {:>8.4} {:>8.4}..{:<7.4} {:>6.2} {:>9.1}  {}",
                    r.n,
                    r.d,
                    r.delta,
                    r.c,
                    r.wrong_acceptance_rate,
                    r.ci_low,
                    r.ci_high,
                    r.bound,
                    r.mean_size,
                    r.verdict.as_str()
                )?;
            }
            Ok(())
        }
    }
}

fn open_audit(args: &AuditArgs, seed: u64) -> CliResult<(AuditSession, EventLog)> {
    if let Some(path) = &args.resume {
        let events = read_log(path).map_err(|e| match e {
            SessionError::Io(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => CliError::Runtime(other.to_string()),
        })?;
        let mut session = replay(&events)?;
        let before = session.events().len();
        session.settle()?;
        let mut log = EventLog::open_append(path)?;
        log.append(&session.events()[before..])?;
        return Ok((session, log));
    }
    let path = args.manifest.as_deref().expect("clap requires --manifest");
    let manifest = BallotManifest::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let n = args.n.unwrap_or(manifest.len() as u64);
    let delta = if args.c.is_none() && args.delta.is_none() { Some(0) } else { args.delta };
    let params = build_params(n, args.candidates.clone(), delta, args.c, args.initial, args.cutover)?;
    let session =
        AuditSession::create(params, &manifest.unlabeled(), &SeededRng::new(seed, args.stream), args.schedule)?;
    let mut log = EventLog::create(&args.log).map_err(|e| CliError::Runtime(format!("{}: {e}", args.log.display())))?;
    log.append(session.events())?;
    Ok((session, log))
}

fn cmd_audit(args: &AuditArgs, seed: u64, stdin: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let (mut session, mut log) = open_audit(args, seed)?;
    run_audit_loop(&mut session, &mut log, stdin, out)
}

fn print_progress(session: &AuditSession, out: &mut dyn Write) -> CliResult {
    let v = session.status_view();
    let counts: Vec<String> = v.counts.iter().map(|(k, n)| format!("{k}={n}")).collect();
    writeln!(
        out,
        "drawn {}  {}  invalid={}  a={} b={}  (a-b)^2 = {}  c(a+b) = {}  decision: {}",
        v.total_drawn,
        counts.join(" "),
        v.invalid,
        v.a,
        v.b,
        v.statistic,
        v.threshold,
        v.decision
    )?;
    Ok(())
}

fn print_pending(session: &AuditSession, out: &mut dyn Write) -> CliResult {
    let pending = session.pending();
    if !pending.is_empty() {
        writeln!(out, "retrieve {} ballots: {}", pending.len(), pending.join(" "))?;
    }
    Ok(())
}

const AUDIT_HELP: &str =
    "enter a candidate id or `invalid` for the next ballot, `<ballot_id> <label>` for a specific one, \
`status`, or `quit`";

/// The terminal audit loop, reading one command per line. Stops on a
/// terminal decision, on `quit` (which closes the session) or at end of
/// input (which leaves it open for `--resume`).
pub fn audit_loop(
    session: &mut AuditSession,
    log: &mut EventLog,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> std::result::Result<(), std::io::Error> {
    run_audit_loop(session, log, input, out).map_err(|e| match e {
        CliError::Usage(m) | CliError::Runtime(m) => std::io::Error::other(m),
    })
}

fn run_audit_loop(
    session: &mut AuditSession,
    log: &mut EventLog,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> CliResult {
    let p = session.params();
    writeln!(
        out,
        "session {}  n = {}  d = {}  c = {}  candidates: {}",
        session.id(),
        p.n(),
        p.d(),
        p.c(),
        p.candidates().join(", ")
    )?;
    writeln!(out, "{AUDIT_HELP}")?;
    print_progress(session, out)?;
    if !matches!(session.status(), crate::session::SessionStatus::Open) {
        writeln!(out, "session is {}", session.status().name())?;
        return Ok(());
    }
    print_pending(session, out)?;
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out, "input ended; session left open")?;
            log.sync()?;
            return Ok(());
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let (ballot, label) = match words.as_slice() {
            [] => continue,
            ["quit"] => {
                let before = session.events().len();
                session.close("quit")?;
                log.append(&session.events()[before..])?;
                log.sync()?;
                writeln!(out, "session closed")?;
                return Ok(());
            }
            ["status"] => {
                print_progress(session, out)?;
                print_pending(session, out)?;
                continue;
            }
            ["help"] => {
                writeln!(out, "{AUDIT_HELP}")?;
                continue;
            }
            [label] => match session.pending().first() {
                Some(id) => (id.clone(), *label),
                None => {
                    writeln!(out, "nothing pending")?;
                    continue;
                }
            },
            [id, label] => (id.to_string(), *label),
            _ => {
                writeln!(out, "? {AUDIT_HELP}")?;
                continue;
            }
        };
        let interpretation = match Interpretation::try_from(label.to_string()) {
            Ok(i) => i,
            Err(e) => {
                writeln!(out, "rejected: {e}")?;
                continue;
            }
        };
        let before = session.events().len();
        match session.record_interpretation(&ballot, interpretation) {
            Ok(decision) => {
                log.append(&session.events()[before..])?;
                writeln!(out, "{ballot}: {label}")?;
                print_progress(session, out)?;
                if decision.is_terminal() {
                    writeln!(out, "{decision}")?;
                    return Ok(());
                }
                if let Decision::RecommendCutover { reason } = &decision {
                    writeln!(out, "cutover recommended: {reason}; continue or `quit`")?;
                }
                if session.events()[before..].iter().any(|e| e.kind.name() == "draw_planned") {
                    print_pending(session, out)?;
                }
            }
            Err(e @ (SessionError::CorruptLog { .. } | SessionError::Io(_))) => return Err(e.into()),
            Err(e) => writeln!(out, "rejected: {e}")?,
        }
    }
}

fn cmd_serve(args: &ServeArgs, out: &mut dyn Write) -> CliResult {
    let store = Arc::new(SessionStore::open(&args.data_dir).map_err(|e| match e {
        SessionError::Io(m) => CliError::Runtime(format!("{}: {m}", args.data_dir.display())),
        other => CliError::Runtime(other.to_string()),
    })?);
    let ui_dir = args.ui_dir.clone().or_else(|| default_ui_dir(&args.data_dir));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.bind)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {}: {e}", args.bind)))?;
        writeln!(out, "listening on http://{}", listener.local_addr()?)?;
        out.flush()?;
        service::serve(listener, store, ui_dir, shutdown_signal()).await?;
        Ok(())
    })
}

fn default_ui_dir(data_dir: &Path) -> Option<PathBuf> {
    let dir = data_dir.join("ui");
    dir.is_dir().then_some(dir)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}
