//! Command-line subcommands.
//!
//! Every command returns an [`Outcome`]; the binary maps it to the exit
//! status 0 (accept), 2 (rerun recommended) or 1 (error).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rjd_core::problems;
use rjd_core::scaling::{radius_scaling_row, ScalingRow};
use rjd_core::{decision_rule, stream_rng, ProblemDefinition, Recommendation, RunConfig, Stream};

use crate::report::{self, fmt_f64, write_atomic, RunSummary, SequenceTable, TimedRun};

pub const OUTPUT_DIR_ENV: &str = "RJD_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "rjd",
    version,
    about = "Nested sampling with the relative jump distance diagnostic"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run nested sampling once and write its trace, histogram and summary.
    Run(RunArgs),
    /// Run a doubling schedule of step counts and tabulate the results.
    Sequence(SequenceArgs),
    /// Tabulate the reference radius against live points and dimension.
    RadiusScaling(ScalingArgs),
    /// Recompute the diagnostics of an existing trace file.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Problem name, e.g. gauss-4, rosenbrock-20, eggbox, eightschools.
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 400)]
    pub nlive: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "rjd-output")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bins_per_decade: usize,
    /// Iterations between reference-radius updates; chosen from K and d
    /// when omitted.
    #[arg(long)]
    pub radius_update_interval: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub termination_frac: f64,
    #[arg(long, default_value_t = 30)]
    pub bootstrap_rounds: usize,
    /// Suppress progress lines on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Slice-sampling steps per replacement; defaults to the dimension.
    #[arg(long)]
    pub nsteps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SequenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Explicit step counts; otherwise doubling from the dimension.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Vec<usize>,
    /// First step count of the doubling schedule (default: dimension).
    #[arg(long)]
    pub start_steps: Option<usize>,
    /// Number of doubling-schedule entries.
    #[arg(long, default_value_t = 4)]
    pub schedule_len: usize,
    /// Drop schedule entries above this many steps.
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,400")]
    pub nlive: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,128")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 40)]
    pub repeats: usize,
    #[arg(long, default_value_t = 30)]
    pub bootstrap_rounds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "rjd-output")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Trace file in the delimited format written by `run`.
    pub trace: PathBuf,
    #[arg(long)]
    pub previous: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accept,
    Rerun,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Accept => 0,
            Outcome::Rerun => 2,
        }
    }

    fn from_recommendation(rec: Recommendation) -> Self {
        match rec {
            Recommendation::Accept | Recommendation::AcceptWithCaution => Outcome::Accept,
            Recommendation::RerunDoubled => Outcome::Rerun,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sequence(a) => cmd_sequence(a),
        Command::RadiusScaling(a) => cmd_radius_scaling(a),
        Command::Check(a) => cmd_check(a),
    }
}

/// Name of the output directory of one run.
pub fn run_dir_name(problem: &str, num_live: usize, num_steps: usize, seed: u64) -> String {
    format!("{problem}-K{num_live}-M{num_steps}-seed{seed}")
}

fn config(common: &CommonArgs, num_steps: usize, seed: u64) -> RunConfig {
    RunConfig {
        termination_frac: common.termination_frac,
        bootstrap_rounds: common.bootstrap_rounds,
        radius_update_interval: common.radius_update_interval,
        ..RunConfig::new(common.nlive, num_steps, seed)
    }
}

fn timed_run(problem: &ProblemDefinition, cfg: &RunConfig) -> Result<TimedRun> {
    let start = Instant::now();
    let result = rjd_core::run(problem, cfg).with_context(|| {
        format!(
            "{} with K={} M={} seed={}",
            problem.name(),
            cfg.num_live,
            cfg.num_steps,
            cfg.seed
        )
    })?;
    Ok(TimedRun {
        result,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Write `trace.csv`, `trace.jsonl`, `histogram.csv` and `summary.json` of
/// one run into `dir`.
pub fn write_run_artifacts(
    dir: &Path,
    run: &TimedRun,
    summary: &RunSummary,
    bins_per_decade: usize,
) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let r = &run.result;
    write_atomic(&dir.join("trace.csv"), |w| report::write_trace(r, w))?;
    write_atomic(&dir.join("trace.jsonl"), |w| {
        report::write_trace_jsonl(r, w)
    })?;
    write_atomic(&dir.join("histogram.csv"), |w| {
        report::write_histogram(&r.records, bins_per_decade, w)
    })?;
    write_atomic(&dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, summary).map_err(std::io::Error::from)?;
        Ok(writeln!(w)?)
    })?;
    Ok(())
}

fn verdict_line(s: &RunSummary) -> String {
    format!(
        "{} K={} M={} seed={}: logz={:.4}±{:.4} gm_rjd={:.4} frac_rjd>1={:.4} ks_p={:.4} verdict={} recommendation={}",
        s.problem,
        s.num_live,
        s.num_steps,
        s.seed,
        s.logz,
        s.logz_err,
        s.geometric_mean_rjd,
        s.frac_rjd_above_1,
        s.ks_p_value,
        s.verdict,
        s.recommendation,
    )
}

pub fn cmd_run(args: &RunArgs) -> Result<Outcome> {
    let c = &args.common;
    let problem = problems::by_name(&c.problem)?;
    let num_steps = args.nsteps.unwrap_or(problem.dim());
    let cfg = config(c, num_steps, c.seed);
    cfg.validate(problem.dim())?;
    if c.bins_per_decade == 0 {
        bail!("--bins-per-decade must be at least 1");
    }
    let run = timed_run(&problem, &cfg)?;
    let r = &run.result;
    let summary = rjd_core::summarize(&r.records)?;
    let rec = decision_rule(&summary, None, r.logz, r.logz_err);
    let summary = RunSummary::new(&run, problem.true_logz(), rec)?;
    let dir = c
        .out
        .join(run_dir_name(problem.name(), c.nlive, num_steps, c.seed));
    write_run_artifacts(&dir, &run, &summary, c.bins_per_decade)?;
    println!("{}", verdict_line(&summary));
    Ok(Outcome::from_recommendation(rec))
}

/// Step counts to run: the explicit list, or `len` doublings from `start`,
/// capped at `max_steps`.
pub fn schedule(
    explicit: &[usize],
    start: usize,
    len: usize,
    max_steps: Option<usize>,
) -> Result<Vec<usize>> {
    let mut steps: Vec<usize> = if explicit.is_empty() {
        (0..len).map(|i| start << i).collect()
    } else {
        explicit.to_vec()
    };
    if let Some(cap) = max_steps {
        steps.retain(|&m| m <= cap);
    }
    if steps.is_empty() || steps.contains(&0) {
        bail!("schedule must contain at least one positive step count");
    }
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}

/// Results of [`run_sequence`].
#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub runs: Vec<TimedRun>,
    pub table: SequenceTable,
    /// Decision for each run against the one before it.
    pub recommendations: Vec<Recommendation>,
}

/// Run the schedule, writing per-run artifacts and the table after every run.
pub fn run_sequence(args: &SequenceArgs) -> Result<SequenceOutcome> {
    let c = &args.common;
    let problem = problems::by_name(&c.problem)?;
    let start = args.start_steps.unwrap_or(problem.dim());
    let steps = schedule(&args.schedule, start, args.schedule_len, args.max_steps)?;
    for &m in &steps {
        config(c, m, c.seed).validate(problem.dim())?;
    }
    let dir = c.out.join(format!(
        "{}-K{}-sequence-seed{}",
        problem.name(),
        c.nlive,
        c.seed
    ));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let table_path = dir.join("sequence.csv");

    let mut runs: Vec<TimedRun> = Vec::with_capacity(steps.len());
    let mut recommendations = Vec::with_capacity(steps.len());
    let mut previous: Option<(rjd_core::DiagnosticSummary, f64, f64)> = None;
    for (index, &m) in steps.iter().enumerate() {
        let seed = c.seed.wrapping_add(index as u64);
        if !c.quiet {
            eprintln!("running {} K={} M={m} seed={seed}", problem.name(), c.nlive);
        }
        let run = timed_run(&problem, &config(c, m, seed))?;
        let r = &run.result;
        let s = rjd_core::summarize(&r.records)?;
        let rec = decision_rule(
            &s,
            previous.as_ref().map(|(p, z, e)| (p, *z, *e)),
            r.logz,
            r.logz_err,
        );
        let summary = RunSummary::new(&run, problem.true_logz(), rec)?;
        write_run_artifacts(
            &dir.join(run_dir_name(problem.name(), c.nlive, m, seed)),
            &run,
            &summary,
            c.bins_per_decade,
        )?;
        println!("{}", verdict_line(&summary));
        previous = Some((s, r.logz, r.logz_err));
        recommendations.push(rec);
        runs.push(run);
        write_atomic(&table_path, |w| report::write_sequence_table(&runs, w))?;
    }
    let table = report::sequence_table(&runs)?;
    Ok(SequenceOutcome {
        runs,
        table,
        recommendations,
    })
}

pub fn cmd_sequence(args: &SequenceArgs) -> Result<Outcome> {
    let out = run_sequence(args)?;
    print!("{}", out.table.to_csv());
    let last = *out.recommendations.last().expect("schedule is nonempty");
    println!("final recommendation: {}", last.as_str());
    Ok(Outcome::from_recommendation(last))
}

/// Compute every `(K, d)` row of the radius-scaling table.
pub fn radius_scaling_table(args: &ScalingArgs) -> Result<Vec<ScalingRow>> {
    if args.nlive.is_empty() || args.dims.is_empty() || args.repeats == 0 {
        bail!("live-point list, dimension list and repeats must be nonempty");
    }
    let mut rng = stream_rng(args.seed, Stream::Harness);
    let mut rows = Vec::new();
    for &k in &args.nlive {
        for &d in &args.dims {
            rows.push(
                radius_scaling_row(k, d, args.repeats, args.bootstrap_rounds, &mut rng)
                    .with_context(|| format!("K={k} d={d}"))?,
            );
        }
    }
    Ok(rows)
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("num_live,dim,repeats,mean_r,std_r,predicted_r\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.num_live,
            r.dim,
            r.repeats,
            fmt_f64(r.mean_r),
            fmt_f64(r.std_r),
            fmt_f64(r.predicted)
        ));
    }
    out
}

pub fn cmd_radius_scaling(args: &ScalingArgs) -> Result<Outcome> {
    let rows = radius_scaling_table(args)?;
    let dir = args.out.join(format!("radius-scaling-seed{}", args.seed));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let text = scaling_csv(&rows);
    write_atomic(&dir.join("radius_scaling.csv"), |w| {
        Ok(w.write_all(text.as_bytes())?)
    })?;
    print!("{text}");
    Ok(Outcome::Accept)
}

fn load_audit(path: &Path) -> Result<(report::TraceAudit, f64, f64)> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let trace = report::parse_trace(std::io::BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))?;
    let audit =
        report::audit_trace(&trace).with_context(|| format!("auditing {}", path.display()))?;
    let records: Vec<_> = trace.iter().map(report::TraceRecord::iteration).collect();
    let logz = rjd_core::math::log_sum_exp(records.iter().map(|r| r.logw));
    let err = rjd_core::logz_uncertainty(&records, audit.num_live)?;
    Ok((audit, logz, err))
}

/// Diagnose a trace on its own. The evidence recomputed here covers the
/// dead points only, so it is a lower bound on the full estimate.
pub fn cmd_check(args: &CheckArgs) -> Result<Outcome> {
    let (audit, logz, err) = load_audit(&args.trace)?;
    let previous = args.previous.as_deref().map(load_audit).transpose()?;
    let rec = decision_rule(
        &audit.summary,
        previous.as_ref().map(|(a, z, e)| (&a.summary, *z, *e)),
        logz,
        err,
    );
    let s = &audit.summary;
    println!(
        "{} K={} M={} records={}: dead_logz={:.4}±{:.4} gm_rjd={:.4} frac_rjd>1={:.4} ks_p={:.4} verdict={} recommendation={}",
        audit.problem,
        audit.num_live,
        audit.num_steps,
        audit.records,
        logz,
        err,
        s.geometric_mean_rjd,
        s.frac_rjd_above_1,
        audit.insertion.p_value,
        s.verdict.as_str(),
        rec.as_str()
    );
    Ok(Outcome::from_recommendation(rec))
}
