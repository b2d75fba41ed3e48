//! Command-line front end: exact tables, simulations, oracle sweeps and the
//! two figure presets, written as CSV with optional SVG line charts.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 a simulated point fell
//! outside tolerance, 4 an oracle disagreed with a closed form, 1 I/O failure.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::channel::{erasure_curve, ChannelError, Epsilon};
use crate::gf::{prime_power, FieldSpec, GfError, Modulus};
use crate::partial::{
    decode_profile, p_atleast_units_given_rank, p_exact_units_given_rank, Mode, PartialError, RecoveryTables,
    Scenario,
};
use crate::prob::{format_float, ProbExact};
use crate::rankstats::rank_pmf;
use crate::simulator::{
    exhaustive_oracle_ns, exhaustive_oracle_sys, simulate_erasure, simulate_ns, simulate_sys, SimError,
    TrialReport, Verdict,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} simulated point(s) outside tolerance")]
    Tolerance(usize),
    #[error("oracle mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Tolerance(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

macro_rules! config_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Config(e.to_string())
            }
        }
    )*};
}
config_from!(GfError, PartialError, ChannelError, SimError);

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "rlnc-partial", version, about = "Partial decoding probabilities for random linear network coding")]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, env = "RLNC_THREADS", default_value_t = 0, global = true)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact rank distribution of a random n x k matrix.
    RankDist(RankDistArgs),
    /// Exact P(|X| >= x) for a fixed number of received packets.
    Partial(PartialArgs),
    /// Exact P(|X| >= x) against n_T over an erasure channel.
    ErasureCurve(ErasureArgs),
    /// Monte Carlo estimate compared with the exact values.
    Simulate(SimulateArgs),
    /// Exhaustive enumeration checked against the closed forms.
    Verify(VerifyArgs),
    /// Regenerate the data behind a figure preset.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ns,
    Sys,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Ns => Mode::NonSystematic,
            ModeArg::Sys => Mode::Systematic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Significant digits in floating-point columns.
    #[arg(long, default_value_t = 12)]
    pub precision: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Field order, a prime power.
    #[arg(long, default_value_t = 2)]
    pub q: u64,
    /// Modulus coefficients, lowest degree first, e.g. 1,1,0,1.
    #[arg(long)]
    pub modulus: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RankDistArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub k: u32,
    /// Received packets: a value, an inclusive range a:b, or a comma list.
    #[arg(long)]
    pub n: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PartialArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Ns)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub n: String,
    /// Transmitted packets (systematic mode).
    #[arg(long)]
    pub nt: Option<u32>,
    /// Thresholds; all of 0..=k when omitted.
    #[arg(long)]
    pub x: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ErasureArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Ns)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub k: u32,
    /// Erasure probability, decimal or a/b.
    #[arg(long)]
    pub eps: String,
    #[arg(long)]
    pub x: String,
    /// Transmitted packets, usually a range a:b.
    #[arg(long)]
    pub nt: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Ns)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub k: u32,
    /// Received packets (omit with --eps).
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub nt: Option<u32>,
    /// Simulate erasures of n_T transmissions instead of a fixed n.
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long, default_value_t = 60_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the line-delimited JSON summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Check one case instead of the built-in sweep.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub nt: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub preset: Preset,
    #[arg(long, default_value_t = 60_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `5`, `2:6` (inclusive) or comma lists of either, in the given order.
pub fn parse_list(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Config(format!("cannot parse `{s}` as a value, range a:b, or comma list"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part.split_once(':') {
            Some((a, b)) => {
                let a: u32 = a.trim().parse().map_err(|_| bad())?;
                let b: u32 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

fn parse_range(s: &str) -> Result<RangeInclusive<u32>, CliError> {
    let values = parse_list(s)?;
    let (lo, hi) = (values[0], *values.last().unwrap());
    if values.len() as u64 != (hi as u64 - lo as u64 + 1) || values.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(CliError::Config(format!("`{s}` must be a contiguous range a:b")));
    }
    Ok(lo..=hi)
}

fn parse_eps(s: &str) -> Result<Epsilon, CliError> {
    Ok(s.parse::<Epsilon>()?)
}

fn check_order(q: u64) -> Result<(), CliError> {
    if prime_power(q).is_none() {
        return Err(CliError::Config(format!("field order {q} is not a prime power")));
    }
    Ok(())
}

fn build_field(args: &FieldArgs) -> Result<FieldSpec, CliError> {
    check_order(args.q)?;
    let modulus = match &args.modulus {
        None => Modulus::Default,
        Some(s) => {
            let coeffs = s
                .split(',')
                .map(|c| c.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Config(format!("cannot parse modulus `{s}`")))?;
            Modulus::Coefficients(coeffs)
        }
    };
    Ok(FieldSpec::from_order_with(args.q, modulus)?)
}

fn thresholds(x: Option<&str>, k: u32) -> Result<Vec<u32>, CliError> {
    let xs = match x {
        Some(s) => parse_list(s)?,
        None => (0..=k).collect(),
    };
    if let Some(&bad) = xs.iter().find(|&&x| x > k) {
        return Err(PartialError::ThresholdTooLarge { x: bad, k }.into());
    }
    Ok(xs)
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_with_header<T: Serialize>(rows: &[T], header: &str) -> Result<String, CliError> {
    if rows.is_empty() {
        Ok(format!("{header}\n"))
    } else {
        csv_string(rows)
    }
}

/// Where CSV and SVG output go, checked before any work is done.
struct Sink {
    out: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn new(args: &OutputArgs, svg_panels: usize) -> Result<Self, CliError> {
        if args.format == Format::Both && args.out.is_none() {
            return Err(CliError::Config("--format both needs --out".into()));
        }
        if args.format == Format::Svg && args.out.is_none() && svg_panels > 1 {
            return Err(CliError::Config("several SVG panels need --out".into()));
        }
        if args.precision == 0 {
            return Err(CliError::Config("--precision must be at least 1".into()));
        }
        Ok(Sink { out: args.out.clone(), format: args.format })
    }

    fn wants_svg(&self) -> bool {
        self.format != Format::Csv
    }

    fn svg_path(&self, base: &Path, suffix: Option<&str>) -> PathBuf {
        let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let name = match suffix {
            Some(sfx) => format!("{stem}-{sfx}.svg"),
            None => format!("{stem}.svg"),
        };
        base.with_file_name(name)
    }

    fn emit(&self, csv: &str, svgs: &[(String, String)]) -> Result<(), CliError> {
        if self.format != Format::Svg {
            match &self.out {
                Some(p) => fs::write(p, csv)?,
                None => print!("{csv}"),
            }
        }
        if self.wants_svg() {
            match &self.out {
                Some(p) => {
                    for (suffix, svg) in svgs {
                        let sfx = (svgs.len() > 1).then_some(suffix.as_str());
                        fs::write(self.svg_path(p, sfx), svg)?;
                    }
                }
                None => {
                    for (_, svg) in svgs {
                        print!("{svg}");
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs a parsed command line on a pool sized by `--threads` / `RLNC_THREADS`.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::RankDist(a) => cmd_rank_dist(&a),
        Command::Partial(a) => cmd_partial(&a),
        Command::ErasureCurve(a) => cmd_erasure_curve(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Figure(a) => cmd_figure(&a),
    })
}

#[derive(Serialize)]
struct RankRow {
    q: u64,
    k: u32,
    n: u32,
    r: u32,
    prob_exact: String,
    prob_float: String,
}

fn cmd_rank_dist(a: &RankDistArgs) -> Result<(), CliError> {
    build_field(&a.field)?;
    let sink = Sink::new(&a.output, 1)?;
    if a.k == 0 {
        return Err(PartialError::NoSourcePackets.into());
    }
    let ns = parse_list(&a.n)?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &n in &ns {
        let pmf = rank_pmf(a.field.q, a.k, n);
        let mut pts = Vec::new();
        for (r, p) in pmf.iter() {
            pts.push((r as f64, p.to_f64()));
            rows.push(RankRow {
                q: a.field.q,
                k: a.k,
                n,
                r,
                prob_exact: p.to_string(),
                prob_float: p.to_decimal(a.output.precision),
            });
        }
        series.push(Series { label: format!("n={n}"), points: pts, markers: true });
    }
    let csv = csv_with_header(&rows, "q,k,n,r,prob_exact,prob_float")?;
    let title = format!("Rank distribution, q={}, k={}", a.field.q, a.k);
    let svg = line_chart(&title, "r", "probability", &series);
    sink.emit(&csv, &[("rank".into(), svg)])
}

#[derive(Serialize)]
struct PartialRow {
    mode: &'static str,
    q: u64,
    k: u32,
    #[serde(rename = "n_T")]
    n_t: Option<u32>,
    n: u32,
    x: u32,
    prob_exact: String,
    prob_float: String,
}

fn cmd_partial(a: &PartialArgs) -> Result<(), CliError> {
    build_field(&a.field)?;
    let sink = Sink::new(&a.output, 1)?;
    let mode = Mode::from(a.mode);
    let ns = parse_list(&a.n)?;
    let xs = thresholds(a.x.as_deref(), a.k)?;
    let n_t = match mode {
        Mode::NonSystematic => None,
        Mode::Systematic => Some(a.nt.ok_or_else(|| CliError::Config("systematic mode needs --nt".into()))?),
    };
    let scenarios: Vec<Scenario> = ns
        .iter()
        .map(|&n| match n_t {
            None => Scenario::non_systematic(a.field.q, a.k, n),
            Some(n_t) => Scenario::systematic(a.field.q, a.k, n_t, n),
        })
        .collect();
    for s in &scenarios {
        s.validate()?;
    }
    let mut rows = Vec::new();
    let mut series: Vec<Series> = xs
        .iter()
        .map(|x| Series { label: format!("x={x}"), points: Vec::new(), markers: false })
        .collect();
    for s in &scenarios {
        let profile = decode_profile(s)?;
        for (i, &x) in xs.iter().enumerate() {
            let p = profile.at_least(x);
            series[i].points.push((s.n().unwrap_or(0) as f64, p.to_f64()));
            rows.push(PartialRow {
                mode: mode.as_str(),
                q: s.q,
                k: s.k,
                n_t,
                n: s.n().unwrap_or(0),
                x,
                prob_exact: p.to_string(),
                prob_float: p.to_decimal(a.output.precision),
            });
        }
    }
    let csv = csv_with_header(&rows, "mode,q,k,n_T,n,x,prob_exact,prob_float")?;
    let title = format!("{} q={} k={}", mode.as_str(), a.field.q, a.k);
    let svg = line_chart(&title, "n", "P(|X| >= x)", &series);
    sink.emit(&csv, &[("partial".into(), svg)])
}

#[derive(Serialize)]
struct CurveRow {
    mode: &'static str,
    q: u64,
    k: u32,
    eps: String,
    #[serde(rename = "n_T")]
    n_t: u32,
    x: u32,
    prob_exact: String,
    prob_float: String,
}

fn curve_rows(
    q: u64,
    k: u32,
    eps: &Epsilon,
    mode: Mode,
    xs: &[u32],
    n_ts: RangeInclusive<u32>,
    precision: usize,
) -> Result<(Vec<CurveRow>, Vec<Series>), CliError> {
    let points = erasure_curve(q, k, eps, mode, xs, n_ts)?;
    let mut series: Vec<Series> = xs
        .iter()
        .map(|x| Series { label: format!("x={x}"), points: Vec::new(), markers: false })
        .collect();
    let rows = points
        .into_iter()
        .map(|pt| {
            let i = xs.iter().position(|&x| x == pt.x).expect("x from the grid");
            series[i].points.push((pt.n_t as f64, pt.prob.to_f64()));
            CurveRow {
                mode: mode.as_str(),
                q,
                k,
                eps: eps.to_string(),
                n_t: pt.n_t,
                x: pt.x,
                prob_exact: pt.prob.to_string(),
                prob_float: pt.prob.to_decimal(precision),
            }
        })
        .collect();
    Ok((rows, series))
}

fn cmd_erasure_curve(a: &ErasureArgs) -> Result<(), CliError> {
    build_field(&a.field)?;
    let sink = Sink::new(&a.output, 1)?;
    let eps = parse_eps(&a.eps)?;
    let xs = thresholds(Some(&a.x), a.k)?;
    let n_ts = parse_range(&a.nt)?;
    let mode = Mode::from(a.mode);
    let (rows, series) = curve_rows(a.field.q, a.k, &eps, mode, &xs, n_ts, a.output.precision)?;
    let csv = csv_with_header(&rows, "mode,q,k,eps,n_T,x,prob_exact,prob_float")?;
    let title = format!("{} q={} k={} eps={}", mode.as_str(), a.field.q, a.k, eps);
    let svg = line_chart(&title, "n_T", "P(|X| >= x)", &series);
    sink.emit(&csv, &[("curve".into(), svg)])
}

#[derive(Serialize)]
struct SimRow {
    mode: &'static str,
    q: u64,
    k: u32,
    #[serde(rename = "n_T")]
    n_t: Option<u32>,
    n: Option<u32>,
    eps: Option<String>,
    x: u32,
    trials: u64,
    seed: u64,
    count: u64,
    empirical: String,
    analytic: String,
    gap: String,
    se: String,
    status: &'static str,
}

fn run_simulation(a: &SimulateArgs, field: &FieldSpec) -> Result<TrialReport, CliError> {
    let mode = Mode::from(a.mode);
    let need = |v: Option<u32>, flag: &str| v.ok_or_else(|| CliError::Config(format!("this simulation needs {flag}")));
    let report = match (&a.eps, mode) {
        (Some(eps), _) => {
            if a.n.is_some() {
                return Err(CliError::Config("--n is random under --eps; give --nt only".into()));
            }
            simulate_erasure(field, a.k, need(a.nt, "--nt")?, &parse_eps(eps)?, mode, a.trials, a.seed)?
        }
        (None, Mode::NonSystematic) => simulate_ns(field, a.k, need(a.n, "--n")?, a.trials, a.seed)?,
        (None, Mode::Systematic) => {
            simulate_sys(field, a.k, need(a.nt, "--nt")?, need(a.n, "--n")?, a.trials, a.seed)?
        }
    };
    Ok(report)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let field = build_field(&a.field)?;
    let sink = Sink::new(&a.output, 1)?;
    let xs = thresholds(a.x.as_deref(), a.k)?;
    if a.trials == 0 {
        return Err(SimError::NoTrials.into());
    }
    let report = run_simulation(a, &field)?;
    let exact = decode_profile(&report.scenario)?;
    let checks = report.compare(&exact);
    let p = a.output.precision;
    let s = &report.scenario;
    let mut rows = Vec::new();
    let mut failures = 0;
    let mut sim = Series { label: "simulated".into(), points: Vec::new(), markers: true };
    let mut ana = Series { label: "exact".into(), points: Vec::new(), markers: false };
    for &x in &xs {
        let c = &checks[x as usize];
        if c.verdict == Verdict::Fail {
            failures += 1;
        }
        sim.points.push((x as f64, c.empirical.to_f64()));
        ana.points.push((x as f64, c.analytic.to_f64()));
        rows.push(SimRow {
            mode: s.mode().as_str(),
            q: s.q,
            k: s.k,
            n_t: s.n_t(),
            n: s.n(),
            eps: s.eps().map(|e| e.to_string()),
            x,
            trials: report.trials,
            seed: report.seed,
            count: report.atleast_count(x),
            empirical: c.empirical.to_decimal(p),
            analytic: c.analytic.to_decimal(p),
            gap: format_float(c.gap, p),
            se: format_float(c.se, p),
            status: c.verdict.as_str(),
        });
    }
    let csv = csv_with_header(
        &rows,
        "mode,q,k,n_T,n,eps,x,trials,seed,count,empirical,analytic,gap,se,status",
    )?;
    let svg = line_chart(&format!("{s}, {} trials", report.trials), "x", "P(|X| >= x)", &[ana, sim]);
    sink.emit(&csv, &[("simulate".into(), svg)])?;
    if let Some(path) = &a.summary {
        fs::write(path, report.summary_lines())?;
    }
    if failures > 0 {
        return Err(CliError::Tolerance(failures));
    }
    Ok(())
}

/// One oracle-versus-closed-form comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseOutcome {
    pub label: String,
    /// Full-recovery value from the oracle and the closed form.
    pub full: (ProbExact, ProbExact),
    /// First disagreement: what was compared, oracle value, closed-form value.
    pub mismatch: Option<(String, ProbExact, ProbExact)>,
}

fn first_mismatch<I>(pairs: I) -> Option<(String, ProbExact, ProbExact)>
where
    I: IntoIterator<Item = (String, ProbExact, ProbExact)>,
{
    pairs.into_iter().find(|(_, a, b)| a != b)
}

/// Non-systematic case: profile, rank pmf and rank-conditioned unit counts.
pub fn verify_ns(field: &FieldSpec, k: u32, n: u32) -> Result<CaseOutcome, CliError> {
    let q = field.order() as u64;
    let oracle = exhaustive_oracle_ns(field, k, n)?;
    let exact = decode_profile(&Scenario::non_systematic(q, k, n))?;
    let mut pairs = Vec::new();
    for x in 0..=k {
        pairs.push((format!("P(|X|>={x})"), oracle.profile.at_least(x), exact.at_least(x)));
    }
    let pmf = rank_pmf(q, k, n);
    for (r, p) in oracle.rank_probs().into_iter().enumerate() {
        pairs.push((format!("P(R={r})"), p, pmf.prob(r as u32)));
    }
    for r in 0..=n.min(k) {
        for x in 0..=k {
            let label = |rel: &str| format!("P(|X|{rel}{x}|R={r})");
            let (exact_eq, exact_ge) = if x <= r {
                (p_exact_units_given_rank(q, k, r, x)?, p_atleast_units_given_rank(q, k, r, x)?)
            } else {
                // a rank-r row space holds at most r unit vectors
                (ProbExact::zero(), ProbExact::zero())
            };
            if let Some(o) = oracle.p_exact_given_rank(r, x) {
                pairs.push((label("="), o, exact_eq));
            }
            if let Some(o) = oracle.p_atleast_given_rank(r, x) {
                pairs.push((label(">="), o, exact_ge));
            }
        }
    }
    Ok(CaseOutcome {
        label: format!("ns  q={q} k={k} n={n}"),
        full: (oracle.profile.at_least(k), exact.at_least(k)),
        mismatch: first_mismatch(pairs),
    })
}

pub fn verify_sys(field: &FieldSpec, k: u32, n_t: u32, n: u32) -> Result<CaseOutcome, CliError> {
    let q = field.order() as u64;
    let oracle = exhaustive_oracle_sys(field, k, n_t, n)?;
    let exact = decode_profile(&Scenario::systematic(q, k, n_t, n))?;
    let pairs = (0..=k).map(|x| (format!("P(|X|>={x})"), oracle.at_least(x), exact.at_least(x)));
    Ok(CaseOutcome {
        label: format!("sys q={q} k={k} n_T={n_t} n={n}"),
        full: (oracle.at_least(k), exact.at_least(k)),
        mismatch: first_mismatch(pairs),
    })
}

/// The built-in sweep: q in {2, 3}, k and n up to 3, systematic n_T up to 4.
pub fn default_sweep() -> Result<Vec<CaseOutcome>, CliError> {
    let mut out = Vec::new();
    for q in [2u64, 3] {
        let field = FieldSpec::from_order(q)?;
        for k in 1..=3 {
            for n in 0..=3 {
                out.push(verify_ns(&field, k, n)?);
            }
        }
        for k in 1..=3 {
            for n_t in 1..=4 {
                for n in 0..=n_t {
                    out.push(verify_sys(&field, k, n_t, n)?);
                }
            }
        }
    }
    Ok(out)
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let custom = a.q.is_some() || a.k.is_some() || a.n.is_some() || a.nt.is_some() || a.mode.is_some();
    let cases = if custom {
        let q = a.q.unwrap_or(2);
        check_order(q)?;
        let field = FieldSpec::from_order(q)?;
        let k = a.k.ok_or_else(|| CliError::Config("verify needs --k with custom parameters".into()))?;
        let n = a.n.ok_or_else(|| CliError::Config("verify needs --n with custom parameters".into()))?;
        match a.mode.map(Mode::from).unwrap_or(Mode::NonSystematic) {
            Mode::NonSystematic => vec![verify_ns(&field, k, n)?],
            Mode::Systematic => {
                let n_t = a.nt.ok_or_else(|| CliError::Config("systematic verify needs --nt".into()))?;
                vec![verify_sys(&field, k, n_t, n)?]
            }
        }
    } else {
        default_sweep()?
    };
    for c in &cases {
        let verdict = if c.mismatch.is_none() { "exact-equal" } else { "MISMATCH" };
        println!("{:<28} {verdict:<11} P(|X|>=k): oracle {} vs formula {}", c.label, c.full.0, c.full.1);
    }
    if let Some(c) = cases.iter().find(|c| c.mismatch.is_some()) {
        let (what, o, f) = c.mismatch.as_ref().unwrap();
        let msg = format!("{}: {what} oracle {o} vs formula {f}", c.label);
        println!("first mismatch: {msg}");
        return Err(CliError::Mismatch(msg));
    }
    println!("all {} cases exact-equal", cases.len());
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
struct FigureRow {
    panel: String,
    mode: &'static str,
    q: u64,
    k: u32,
    #[serde(rename = "n_T")]
    n_t: Option<u32>,
    n: Option<u32>,
    eps: Option<String>,
    x: u32,
    provenance: &'static str,
    trials: Option<u64>,
    prob_exact: String,
    prob_float: String,
}

const FIGURE_HEADER: &str = "panel,mode,q,k,n_T,n,eps,x,provenance,trials,prob_exact,prob_float";

/// CSV rows and one chart per panel for a figure preset.
///
/// `fig1`: q=2, k=20, n_T=30, x in {1,5,10,20}, n = 1..=30, exact and
/// simulated, both modes. `fig2`: eps=1/5, panels (k, q) in {(20,2), (30,2),
/// (30,8)} for both modes, x at 10/20/50/80/100 % of k, n_T from the smallest
/// x up to 3k.
pub fn figure_data(
    preset: Preset,
    trials: u64,
    seed: u64,
    precision: usize,
) -> Result<(String, Vec<(String, String)>), CliError> {
    let mut rows = Vec::new();
    let mut charts = Vec::new();
    match preset {
        Preset::Fig1 => {
            if trials == 0 {
                return Err(SimError::NoTrials.into());
            }
            let (q, k, n_t) = (2u64, 20u32, 30u32);
            let xs = [1u32, 5, 10, 20];
            let field = FieldSpec::from_order(q)?;
            let tables = RecoveryTables::new(q);
            for mode in [Mode::NonSystematic, Mode::Systematic] {
                let panel = mode.as_str().to_string();
                let mut sim_rows = Vec::new();
                let mut series: Vec<Series> = Vec::new();
                for &x in &xs {
                    series.push(Series { label: format!("x={x}"), points: Vec::new(), markers: false });
                    series.push(Series { label: format!("x={x} sim"), points: Vec::new(), markers: true });
                }
                for n in 1..=n_t {
                    let (exact, report) = match mode {
                        Mode::NonSystematic => (tables.ns_profile_values(k, n), simulate_ns(&field, k, n, trials, seed)?),
                        Mode::Systematic => (
                            tables.sys_profile_values(k, n_t, n),
                            simulate_sys(&field, k, n_t, n, trials, seed)?,
                        ),
                    };
                    let shown_nt = (mode == Mode::Systematic).then_some(n_t);
                    for (i, &x) in xs.iter().enumerate() {
                        let e = &exact[x as usize];
                        let s = report.frequency(x);
                        series[2 * i].points.push((n as f64, e.to_f64()));
                        series[2 * i + 1].points.push((n as f64, s.to_f64()));
                        let row = |provenance, trials, p: &ProbExact| FigureRow {
                            panel: panel.clone(),
                            mode: mode.as_str(),
                            q,
                            k,
                            n_t: shown_nt,
                            n: Some(n),
                            eps: None,
                            x,
                            provenance,
                            trials,
                            prob_exact: p.to_string(),
                            prob_float: p.to_decimal(precision),
                        };
                        rows.push(row("analytic", None, e));
                        sim_rows.push(row("simulated", Some(trials), &s));
                    }
                }
                rows.extend(sim_rows);
                let title = format!("{} q={q} k={k} n_T={n_t}", mode.as_str());
                charts.push((panel, line_chart(&title, "n", "P(|X| >= x)", &series)));
            }
        }
        Preset::Fig2 => {
            let eps = Epsilon::from_fraction(1, 5)?;
            for mode in [Mode::NonSystematic, Mode::Systematic] {
                for (k, q) in [(20u32, 2u64), (30, 2), (30, 8)] {
                    let xs: Vec<u32> = [1u32, 2, 5, 8, 10].iter().map(|f| f * k / 10).collect();
                    let panel = format!("{}-k{k}-q{q}", mode.as_str());
                    let (curve, series) = curve_rows(q, k, &eps, mode, &xs, xs[0]..=3 * k, precision)?;
                    rows.extend(curve.into_iter().map(|c| FigureRow {
                        panel: panel.clone(),
                        mode: c.mode,
                        q,
                        k,
                        n_t: Some(c.n_t),
                        n: None,
                        eps: Some(c.eps),
                        x: c.x,
                        provenance: "analytic",
                        trials: None,
                        prob_exact: c.prob_exact,
                        prob_float: c.prob_float,
                    }));
                    let title = format!("{} q={q} k={k} eps={eps}", mode.as_str());
                    charts.push((panel, line_chart(&title, "n_T", "P(|X| >= x)", &series)));
                }
            }
        }
    }
    Ok((csv_with_header(&rows, FIGURE_HEADER)?, charts))
}

fn cmd_figure(a: &FigureArgs) -> Result<(), CliError> {
    let panels = match a.preset {
        Preset::Fig1 => 2,
        Preset::Fig2 => 6,
    };
    let sink = Sink::new(&a.output, panels)?;
    let (csv, charts) = figure_data(a.preset, a.trials, a.seed, a.output.precision)?;
    sink.emit(&csv, &charts)
}

/// One polyline (or marker set) in a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Minimal SVG line chart with a fixed [0, 1] y axis.
///
/// Marker series reuse the colour of the line series before them, so an
/// exact curve and its simulated points match.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (64.0, 130.0, 36.0, 52.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x_min, mut x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x_min.is_finite() {
        (x_min, x_max) = (0.0, 1.0);
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let sx = |x: f64| left + (x - x_min) / (x_max - x_min) * pw;
    let sy = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * ph;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg += &format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n");
    svg += &format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        left + pw / 2.0,
        xml_escape(title)
    );
    svg += &format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    );
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        svg += &format!(
            "<line x1=\"{left}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#ddd\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{y}</text>\n",
            left + pw,
            left - 6.0,
            sy(y) + 4.0,
            py = sy(y)
        );
    }
    for i in 0..=5 {
        let x = x_min + (x_max - x_min) * i as f64 / 5.0;
        svg += &format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            sx(x),
            top + ph + 18.0,
            format_float(x, 4)
        );
    }
    svg += &format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        left + pw / 2.0,
        h - 12.0,
        xml_escape(x_label)
    );
    svg += &format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
        top + ph / 2.0,
        top + ph / 2.0,
        xml_escape(y_label)
    );

    let mut colour = 0usize;
    for (i, s) in series.iter().enumerate() {
        if i > 0 && !(s.markers && !series[i - 1].markers) {
            colour += 1;
        }
        let c = PALETTE[colour % PALETTE.len()];
        if s.markers {
            for &(x, y) in &s.points {
                svg += &format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"none\" stroke=\"{c}\"/>\n",
                    sx(x),
                    sy(y)
                );
            }
        } else if !s.points.is_empty() {
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            svg += &format!(
                "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                pts.join(" ")
            );
        }
        let ly = top + 14.0 + 16.0 * i as f64;
        let lx = left + pw + 12.0;
        if s.markers {
            svg += &format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"none\" stroke=\"{c}\"/>", lx + 9.0, ly - 4.0);
        } else {
            svg += &format!(
                "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{c}\" stroke-width=\"2\"/>",
                ly - 4.0,
                lx + 18.0,
                ly - 4.0
            );
        }
        svg += &format!("<text x=\"{:.2}\" y=\"{ly:.2}\">{}</text>\n", lx + 24.0, xml_escape(&s.label));
    }
    svg += "</svg>\n";
    svg
}
