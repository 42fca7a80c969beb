//! `wtcpir` command-line front end.
//!
//! Exit codes: 0 success or PASS, 1 audit or decode FAIL, 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{self, BoundsError, Evaluator};
use crate::planner::{self, BuildOptions, PlanError, QueryPlan};
use crate::ratio::{self, Rational};
use crate::rates::{self, EavesdropProfile, GroupSequence, RatesError};
use crate::simulator::{self, MessageStore, SimError, Verdict, REPORT_SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_BUDGET: u128 = 10_000;

#[derive(Debug, Parser)]
#[command(name = "wtcpir", version, about = "Secure PIR over wiretap channel II: bounds, schemes, plans and audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upper bound, best achievable rate and their gap.
    Capacity {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        output: Output,
    },
    /// Best group sequence with its repetition factor and answer lengths.
    Scheme {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        output: Output,
    },
    /// Build a query plan; `--out` writes JSON plus a markdown table next to it.
    Plan {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        build: Build,
        #[command(flatten)]
        output: Output,
    },
    /// Run one retrieval over a stored plan.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        /// Key seed; messages are drawn from `--store-seed`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        store_seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Privacy, security and decodability audits of a plan.
    Audit {
        /// Stored plan; otherwise one is built from -M/-N/--mu.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        build: Build,
        #[arg(long, env = "WTCPIR_BUDGET", default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate bounds over a sorted μ grid.
    Sweep {
        #[arg(short = 'M', long = "messages")]
        messages: usize,
        #[arg(short = 'N', long = "databases")]
        databases: usize,
        #[arg(long, default_value = "1/20")]
        step: String,
        #[arg(long, default_value = "19/20")]
        max: String,
        /// Print exact rationals instead of 6-place decimals.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Instance {
    #[arg(short = 'M', long = "messages")]
    pub messages: Option<usize>,
    #[arg(short = 'N', long = "databases")]
    pub databases: Option<usize>,
    /// Comma-separated exact rationals, e.g. `1/4,1/2` or `0.25,0.5`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<String>>,
    /// Sort μ ascending instead of rejecting unsorted input.
    #[arg(long)]
    pub sort_mu: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Build {
    /// Group sequence `n_0,…,n_{M-1}`; defaults to the best scheme.
    #[arg(long = "n", value_delimiter = ',')]
    pub seq: Option<Vec<usize>>,
    /// 1-based desired message index.
    #[arg(long, default_value_t = 1)]
    pub desired: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub field_q: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

impl From<RatesError> for CliError {
    fn from(e: RatesError) -> Self {
        let hint = match e {
            RatesError::Unsorted { .. } => " (pass --sort-mu to sort automatically)",
            RatesError::MuOutOfRange { .. } => " (every μ_n must lie in [0, 1))",
            _ => "",
        };
        usage(format!("{e}{hint}"))
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Rates(r) => r.into(),
            e => usage(e),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Rates(r) => r.into(),
            e => usage(e),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Plan(p) => p.into(),
            e => usage(e),
        }
    }
}

/// Exact value with its 6-place rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Value {
    pub exact: String,
    pub decimal: String,
}

impl From<&Rational> for Value {
    fn from(r: &Rational) -> Self {
        Self {
            exact: ratio::to_exact_string(r),
            decimal: ratio::to_decimal_string(r, 6),
        }
    }
}

fn values(v: &[Rational]) -> Vec<Value> {
    v.iter().map(Value::from).collect()
}

#[derive(Debug, Serialize)]
pub struct CapacityOutput {
    pub schema_version: u32,
    #[serde(rename = "M")]
    pub messages: usize,
    #[serde(rename = "N")]
    pub databases: usize,
    pub mu: EavesdropProfile,
    pub upper_bound: Value,
    pub best_rate: Value,
    pub gap: Value,
    pub argmax_tau: Vec<Value>,
    pub active_sequences: Vec<Vec<usize>>,
    pub best_n: Vec<usize>,
    pub active_idx: usize,
}

#[derive(Debug, Serialize)]
pub struct SchemeOutput {
    pub schema_version: u32,
    #[serde(rename = "M")]
    pub messages: usize,
    #[serde(rename = "N")]
    pub databases: usize,
    pub mu: EavesdropProfile,
    pub n: Vec<usize>,
    pub nu: u64,
    pub t: Vec<u64>,
    pub key_len: Vec<u64>,
    /// Answer-length shares `t_n / Σ t`.
    pub tau: Vec<Value>,
    #[serde(rename = "L")]
    pub message_len: u64,
    pub rate: Value,
}

#[derive(Debug, Serialize)]
pub struct SimulateOutput {
    pub schema_version: u32,
    pub verdict: Verdict,
    pub error: Option<String>,
    pub transcript: Option<simulator::Transcript>,
}

#[derive(Debug, Serialize)]
pub struct AuditOutput {
    pub schema_version: u32,
    pub verdict: Verdict,
    pub privacy: Section<simulator::PrivacyReport>,
    pub security: Section<simulator::SecurityReport>,
    pub decodability: Section<simulator::DecodabilityReport>,
}

/// An audit either produces a report or fails outright.
#[derive(Debug, Serialize)]
pub struct Section<T> {
    pub verdict: Verdict,
    pub report: Option<T>,
    pub error: Option<String>,
}

impl<T> Section<T> {
    fn from_result(r: Result<T, SimError>, verdict: impl Fn(&T) -> Verdict) -> Self {
        match r {
            Ok(rep) => Self {
                verdict: verdict(&rep),
                report: Some(rep),
                error: None,
            },
            Err(e) => Self {
                verdict: Verdict::Fail,
                report: None,
                error: Some(e.to_string()),
            },
        }
    }
}

fn parse_profile(instance: &Instance, databases: usize) -> Result<EavesdropProfile, CliError> {
    let Some(raw) = &instance.mu else {
        return Ok(EavesdropProfile::zeros(databases));
    };
    let mu = raw
        .iter()
        .map(|s| ratio::parse_rational(s).map_err(usage))
        .collect::<Result<Vec<_>, _>>()?;
    if mu.len() != databases {
        return Err(usage(format!("--mu has {} entries but N = {databases}", mu.len())));
    }
    Ok(if instance.sort_mu {
        EavesdropProfile::new_sorted(mu)?
    } else {
        EavesdropProfile::new(mu)?
    })
}

fn resolve(instance: &Instance) -> Result<(usize, usize, EavesdropProfile), CliError> {
    let m = instance.messages.ok_or_else(|| usage("-M is required"))?;
    let n = instance.databases.ok_or_else(|| usage("-N is required"))?;
    if m == 0 || n == 0 {
        return Err(usage("-M and -N must be positive"));
    }
    let mu = parse_profile(instance, n)?;
    Ok((m, n, mu))
}

fn build_from(instance: &Instance, build: &Build) -> Result<QueryPlan, CliError> {
    let (m, n, mu) = resolve(instance)?;
    let g = match &build.seq {
        Some(seq) => GroupSequence::new(m, n, seq.clone())?,
        None => rates::best_scheme(m, n, &mu)?.0,
    };
    if build.desired == 0 || build.desired > m {
        return Err(usage(format!("--desired must be in 1..={m}")));
    }
    let opts = BuildOptions {
        field_q: build.field_q,
        ..Default::default()
    };
    Ok(planner::build_plan_with(&g, &mu, build.desired - 1, build.seed, opts)?)
}

fn load_plan(path: &Path) -> Result<QueryPlan, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(QueryPlan::from_json(&text)?)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

fn emit(output: &Output, body: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn format_or(output: &Output, default: Format, allowed: &[Format]) -> Result<Format, CliError> {
    let f = output.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(usage(format!("--format {f:?} is not supported here").to_lowercase()));
    }
    Ok(f)
}

fn csv_header(databases: usize) -> String {
    let mut h: Vec<String> = (1..=databases).map(|i| format!("mu_{i}")).collect();
    h.extend(["upper", "lower", "gap", "active_idx"].map(String::from));
    h.join(",")
}

fn csv_row(mu: &EavesdropProfile, upper: &Rational, lower: &Rational, gap: &Rational, idx: usize, exact: bool) -> String {
    let show = |r: &Rational| {
        if exact {
            ratio::to_exact_string(r)
        } else {
            ratio::to_decimal_string(r, 6)
        }
    };
    let mut cells: Vec<String> = mu.values().iter().map(show).collect();
    cells.extend([show(upper), show(lower), show(gap), idx.to_string()]);
    cells.join(",")
}

/// JSON shape of a capacity report.
pub fn capacity_output(report: &bounds::CapacityReport, mu: &EavesdropProfile) -> CapacityOutput {
    CapacityOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        messages: report.best.messages(),
        databases: report.best.databases(),
        mu: mu.clone(),
        upper_bound: (&report.upper.value).into(),
        best_rate: (&report.lower).into(),
        gap: (&report.gap).into(),
        argmax_tau: values(&report.upper.argmax_tau),
        active_sequences: report.upper.active_sequences.clone(),
        best_n: report.best.seq().to_vec(),
        active_idx: report.best_index,
    }
}

fn cmd_capacity(instance: &Instance, output: &Output, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (m, n, mu) = resolve(instance)?;
    let fmt = format_or(output, Format::Json, &[Format::Json, Format::Csv, Format::Table])?;
    let report = bounds::capacity(m, n, &mu)?;
    let out = capacity_output(&report, &mu);
    let body = match fmt {
        Format::Json => to_json(&out),
        Format::Csv => format!(
            "{}\n{}\n",
            csv_header(n),
            csv_row(&mu, &report.upper.value, &report.lower, &report.gap, report.best_index, false)
        ),
        Format::Table => {
            let mut s = String::new();
            let _ = writeln!(s, "M = {m}, N = {n}, mu = {mu}");
            for (name, v) in [("upper bound", &out.upper_bound), ("best rate", &out.best_rate), ("gap", &out.gap)] {
                let _ = writeln!(s, "{name:<12} {} ({})", v.exact, v.decimal);
            }
            let tau: Vec<&str> = out.argmax_tau.iter().map(|v| v.exact.as_str()).collect();
            let _ = writeln!(s, "{:<12} ({})", "argmax tau", tau.join(", "));
            let _ = writeln!(s, "{:<12} {}", "best n", report.best);
            s
        }
    };
    emit(output, &body, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_scheme(instance: &Instance, output: &Output, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (m, n, mu) = resolve(instance)?;
    let fmt = format_or(output, Format::Json, &[Format::Json, Format::Table])?;
    let (g, rate) = rates::best_scheme(m, n, &mu)?;
    let dims = rates::repetition_factor(&g, &mu)?;
    let total = dims.t.iter().sum::<u64>() as i64;
    let tau: Vec<Rational> = dims.t.iter().map(|&t| ratio::rat(t as i64, total.max(1))).collect();
    let out = SchemeOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        messages: m,
        databases: n,
        mu,
        n: g.seq().to_vec(),
        nu: dims.nu,
        t: dims.t.clone(),
        key_len: dims.key_len.clone(),
        tau: values(&tau),
        message_len: dims.message_len(),
        rate: (&rate).into(),
    };
    let body = match fmt {
        Format::Json => to_json(&out),
        _ => {
            let list = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
            let mut s = String::new();
            let _ = writeln!(s, "n        {g}");
            let _ = writeln!(s, "nu       {}", dims.nu);
            let _ = writeln!(s, "t        ({})", list(&dims.t));
            let _ = writeln!(s, "key_len  ({})", list(&dims.key_len));
            let _ = writeln!(s, "L        {}", dims.message_len());
            let _ = writeln!(s, "rate     {} ({})", out.rate.exact, out.rate.decimal);
            s
        }
    };
    emit(output, &body, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_plan(instance: &Instance, build: &Build, output: &Output, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fmt = format_or(output, Format::Json, &[Format::Json, Format::Table])?;
    let plan = build_from(instance, build)?;
    let table = planner::plan_to_table(&plan).to_string();
    let json = plan.to_json() + "\n";
    match &output.out {
        Some(path) => {
            let md = path.with_extension("md");
            std::fs::write(path, &json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            std::fs::write(&md, &table).map_err(|e| CliError::Io(format!("{}: {e}", md.display())))?;
        }
        None => {
            let body = if fmt == Format::Table { table } else { json };
            emit(output, &body, stdout)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(
    plan: &Path,
    seed: u64,
    store_seed: Option<u64>,
    output: &Output,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    format_or(output, Format::Json, &[Format::Json])?;
    let plan = load_plan(plan)?;
    let store = MessageStore::for_plan(&plan, store_seed.unwrap_or(seed))?;
    let out = match simulator::run_retrieval(&plan, &store, seed) {
        Ok(tr) => SimulateOutput {
            schema_version: REPORT_SCHEMA_VERSION,
            verdict: Verdict::from_bool(tr.correct),
            error: None,
            transcript: Some(tr),
        },
        Err(e @ (SimError::Unresolvable { .. } | SimError::MissingSymbol { .. } | SimError::MissingNoise { .. })) => {
            SimulateOutput {
                schema_version: REPORT_SCHEMA_VERSION,
                verdict: Verdict::Fail,
                error: Some(e.to_string()),
                transcript: None,
            }
        }
        Err(e) => return Err(e.into()),
    };
    emit(output, &to_json(&out), stdout)?;
    Ok(if out.verdict.passed() { EXIT_OK } else { EXIT_FAIL })
}

/// Runs the three audits; any audit error counts as FAIL for that section.
pub fn audit_plan(plan: &QueryPlan, budget: u128, trials: usize, seed: u64) -> AuditOutput {
    let privacy = Section::from_result(simulator::audit_privacy_plan(plan), |r| r.verdict);
    let security = Section::from_result(simulator::audit_security(plan, budget), |r| r.verdict);
    let decodability = Section::from_result(simulator::audit_decodability(plan, trials, seed), |r| r.verdict);
    let verdict = Verdict::from_bool(privacy.verdict.passed() && security.verdict.passed() && decodability.verdict.passed());
    AuditOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        verdict,
        privacy,
        security,
        decodability,
    }
}

fn render_audit(out: &AuditOutput) -> String {
    let mut s = String::new();
    let line = |s: &mut String, name: &str, v: Verdict, detail: String| {
        let _ = writeln!(s, "{name:<13} {v:?} {detail}");
    };
    let detail = |e: &Option<String>| e.clone().unwrap_or_default();
    line(
        &mut s,
        "privacy",
        out.privacy.verdict,
        out.privacy
            .report
            .as_ref()
            .and_then(|r| r.first_difference.clone())
            .unwrap_or_else(|| detail(&out.privacy.error)),
    );
    let sec = match &out.security.report {
        Some(r) => r
            .databases
            .iter()
            .map(|d| {
                format!(
                    "DB{}: {} sets{}{}",
                    d.database + 1,
                    d.tested_sets,
                    if d.exhaustive { " (exhaustive)" } else { " (sampled)" },
                    d.failing_set
                        .as_ref()
                        .map(|f| format!(" rank-deficient at {f:?}"))
                        .unwrap_or_default()
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
        None => detail(&out.security.error),
    };
    line(&mut s, "security", out.security.verdict, sec);
    let dec = match &out.decodability.report {
        Some(r) => format!(
            "{}/{} trials{}",
            r.successes,
            r.trials,
            r.first_failure.as_ref().map(|f| format!(", {f}")).unwrap_or_default()
        ),
        None => detail(&out.decodability.error),
    };
    line(&mut s, "decodability", out.decodability.verdict, dec);
    let _ = writeln!(s, "overall       {:?}", out.verdict);
    s.replace("Pass", "PASS").replace("Fail", "FAIL")
}

#[allow(clippy::too_many_arguments)]
fn cmd_audit(
    plan: Option<&Path>,
    instance: &Instance,
    build: &Build,
    budget: u128,
    trials: usize,
    output: &Output,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let fmt = format_or(output, Format::Json, &[Format::Json, Format::Table])?;
    let plan = match plan {
        Some(p) => load_plan(p)?,
        None => build_from(instance, build)?,
    };
    let out = audit_plan(&plan, budget, trials, build.seed);
    let body = match fmt {
        Format::Json => to_json(&out),
        _ => render_audit(&out),
    };
    emit(output, &body, stdout)?;
    Ok(if out.verdict.passed() { EXIT_OK } else { EXIT_FAIL })
}

#[derive(Debug, Serialize)]
struct SweepJsonRow {
    mu: EavesdropProfile,
    upper: Value,
    lower: Value,
    gap: Value,
    active_idx: usize,
}

fn cmd_sweep(
    m: usize,
    n: usize,
    step: &str,
    max: &str,
    exact: bool,
    output: &Output,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let fmt = format_or(output, Format::Csv, &[Format::Csv, Format::Json])?;
    let step = ratio::parse_rational(step).map_err(usage)?;
    let max = ratio::parse_rational(max).map_err(usage)?;
    let grid = bounds::mu_grid(n, &step, &max)?;
    let evaluator = Evaluator::new(m, n)?;
    let rows = bounds::sweep(&evaluator, &grid)?;
    let body = match fmt {
        Format::Json => {
            let rows: Vec<SweepJsonRow> = rows
                .iter()
                .map(|r| SweepJsonRow {
                    mu: r.mu.clone(),
                    upper: (&r.upper).into(),
                    lower: (&r.lower).into(),
                    gap: (&r.gap).into(),
                    active_idx: r.active_idx,
                })
                .collect();
            to_json(&serde_json::json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "M": m,
                "N": n,
                "rows": rows,
            }))
        }
        _ => {
            let mut s = csv_header(n);
            s.push('\n');
            for r in &rows {
                s.push_str(&csv_row(&r.mu, &r.upper, &r.lower, &r.gap, r.active_idx, exact));
                s.push('\n');
            }
            s
        }
    };
    emit(output, &body, stdout)?;
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Capacity { instance, output } => cmd_capacity(instance, output, stdout),
        Command::Scheme { instance, output } => cmd_scheme(instance, output, stdout),
        Command::Plan { instance, build, output } => cmd_plan(instance, build, output, stdout),
        Command::Simulate {
            plan,
            seed,
            store_seed,
            output,
        } => cmd_simulate(plan, *seed, *store_seed, output, stdout),
        Command::Audit {
            plan,
            instance,
            build,
            budget,
            trials,
            output,
        } => cmd_audit(plan.as_deref(), instance, build, *budget, *trials, output, stdout),
        Command::Sweep {
            messages,
            databases,
            step,
            max,
            exact,
            output,
        } => cmd_sweep(*messages, *databases, step, max, *exact, output, stdout),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}
