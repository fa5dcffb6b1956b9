//! `flipmatch`: generate instances, run flip strategies, search for extremal
//! flip sequences, audit potentials and render matchings.
//!
//! Exit codes: 0 success, 2 input error, 3 strategy inapplicable,
//! 4 search limits, enumeration caps or step cap reached, 1 internal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use flipmatch::format::{instance_from_json, instance_to_json, parse_segment, trace_from_csv, trace_to_csv, ReportFile};
use flipmatch::potentials::PotentialError;
use flipmatch::search::{extremal_estimates, DEFAULT_ENUMERATION_CAP};
use flipmatch::{
    decrement_audit, find_crossings, gen_convex, gen_random, gen_two_line, longest_flip_sequence, run_strategy,
    shear_to_distinct_x, shortest_flip_sequence, svg, Adversary, BBox, ChoiceRegime, CrossingPair, FlipChoice,
    FlipTrace, Instance, Permutation, SearchError, SearchLimits, Strategy,
};

mod sweep;

#[derive(Parser)]
#[command(name = "flipmatch", version, about = "Crossing-removal flips on straight-line perfect matchings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Output path; standard output when absent.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Run a flip strategy to a non-crossing matching.
    Run(RunArgs),
    /// Exact longest (f) and shortest (h) flip sequences.
    Search(SearchArgs),
    /// Aggregate search results over an instance family.
    Sweep(sweep::SweepArgs),
    /// Potential decrement audit for the current crossings.
    Audit(AuditArgs),
    /// Render an instance or the frames of a trace as SVG.
    Render(RenderArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// Two-line instance realizing a permutation, e.g. `--perm 2,1,0`.
    TwoLine {
        #[arg(long)]
        perm: String,
    },
    /// Convex instance with n - 1 initial crossings.
    Convex {
        #[arg(long)]
        n: usize,
    },
    /// Seeded random points with a random perfect matching.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// `min_x,min_y,max_x,max_y`
        #[arg(long, default_value = "0,0,100,100")]
        bbox: String,
    },
}

#[derive(Args)]
struct RunArgs {
    instance: PathBuf,
    /// greedy-x | bubble | random[:SEED] | first | adversary:random[:SEED] | adversary:first | adversary:max
    #[arg(long)]
    strategy: String,
    /// Reconnection rule answering an adversary; only `greedy-x` is supported.
    #[arg(long)]
    respond: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    /// Trace CSV output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also record the perturbed-line potential (cost grows as n^3 per step).
    #[arg(long)]
    phi_l: bool,
    /// Shear the points to distinct x-coordinates first.
    #[arg(long)]
    shear: bool,
    /// Where to save the sheared instance.
    #[arg(long, requires = "shear")]
    save_instance: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub(crate) struct LimitArgs {
    #[arg(long, default_value_t = 10_000_000)]
    max_states: usize,
    #[arg(long, default_value_t = 1_000_000)]
    max_depth: usize,
    /// Seconds per search.
    #[arg(long, default_value_t = 60.0)]
    time_budget: f64,
    /// Admissible reconnections: both | A | B | x-greedy.
    #[arg(long, default_value = "both")]
    regime: String,
}

impl LimitArgs {
    pub(crate) fn limits(&self) -> Result<SearchLimits, Failure> {
        let regime = self.regime.parse::<ChoiceRegime>().map_err(|e| Failure::input(anyhow!(e)))?;
        if !(self.time_budget.is_finite() && self.time_budget > 0.0) {
            return Err(Failure::input(anyhow!("time budget must be positive")));
        }
        Ok(SearchLimits {
            max_states: self.max_states,
            max_depth: self.max_depth,
            time_budget: Duration::from_secs_f64(self.time_budget),
            regime,
        })
    }
}

#[derive(Args)]
struct SearchArgs {
    instance: PathBuf,
    /// f | h | both
    #[arg(long, default_value = "both")]
    which: String,
    /// Report JSON path; witness traces are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also compute the maxima of f and h over every matching of the point set.
    #[arg(long)]
    exhaustive: bool,
    /// Largest n accepted by --exhaustive.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: usize,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args)]
struct AuditArgs {
    instance: PathBuf,
    /// Restrict to one crossing, written `i-j,k-l`.
    #[arg(long)]
    crossing: Option<String>,
    /// Restrict to one reconnection: A | B.
    #[arg(long)]
    choice: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    instance: PathBuf,
    /// Trace CSV to render frame by frame.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Render only this frame of the trace.
    #[arg(long, requires = "trace")]
    frame: Option<usize>,
    /// SVG file, or a directory receiving `frame_NNN.svg` for a whole trace.
    #[arg(long)]
    out: PathBuf,
}

/// An error with the exit code it maps to.
pub(crate) struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    pub(crate) fn input(err: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, err: err.into() }
    }

    fn internal(err: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, err: err.into() }
    }

    fn search(err: SearchError) -> Self {
        let code = match &err {
            SearchError::LimitsExceeded { .. } | SearchError::CapExceeded { .. } | SearchError::StepCapReached { .. } => 4,
            SearchError::StrategyInapplicable(_) | SearchError::Potential(PotentialError::DuplicateX(..)) => 3,
            _ => 1,
        };
        Failure { code, err: err.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { kind, out } => cmd_gen(kind, out.as_deref()),
        Command::Run(args) => cmd_run(args),
        Command::Search(args) => cmd_search(args),
        Command::Sweep(args) => sweep::cmd_sweep(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Render(args) => cmd_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(Failure::input),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub(crate) fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::input)?;
    instance_from_json(&text).with_context(|| format!("loading {}", path.display())).map_err(Failure::input)
}

fn cmd_gen(kind: GenKind, out: Option<&Path>) -> CmdResult {
    let inst = match kind {
        GenKind::TwoLine { perm } => {
            let perm: Permutation = perm.parse().map_err(Failure::input)?;
            gen_two_line(&perm)
        }
        GenKind::Convex { n } => gen_convex(n),
        GenKind::Random { n, seed, bbox } => {
            let bbox: BBox = bbox.parse().map_err(Failure::input)?;
            gen_random(n, seed, bbox)
        }
    }
    .map_err(Failure::input)?;
    write_out(out, &instance_to_json(&inst))
}

fn parse_strategy(s: &str) -> Result<Strategy, Failure> {
    let seed = |v: Option<&str>| -> Result<u64, Failure> {
        v.map_or(Ok(0), |v| v.parse().map_err(|_| Failure::input(anyhow!("bad seed {v:?} in strategy {s:?}"))))
    };
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts[..] {
        ["greedy-x"] => Strategy::GreedyX,
        ["bubble"] => Strategy::BubbleAdjacent,
        ["first"] => Strategy::FirstCrossing,
        ["random"] => Strategy::Random(0),
        ["random", v] => Strategy::Random(seed(Some(v))?),
        ["adversary", "random"] => Strategy::AdversaryImposed(Adversary::Random(0)),
        ["adversary", "random", v] => Strategy::AdversaryImposed(Adversary::Random(seed(Some(v))?)),
        ["adversary", "first"] => Strategy::AdversaryImposed(Adversary::FirstCrossing),
        ["adversary", "max"] => Strategy::AdversaryImposed(Adversary::MaxCrossing),
        _ => return Err(Failure::input(anyhow!("unknown strategy {s:?}"))),
    })
}

fn drops(pairs: impl Iterator<Item = Option<(u64, u64)>>) -> String {
    let d: Option<Vec<i64>> = pairs.map(|p| p.map(|(b, a)| b as i64 - a as i64)).collect();
    match d {
        Some(d) if !d.is_empty() => {
            let mean = d.iter().sum::<i64>() as f64 / d.len() as f64;
            format!("{} {mean:.3}", d.iter().min().unwrap())
        }
        _ => "- -".into(),
    }
}

/// `steps=.. final_crossings=.. phi_l_drop_min=.. phi_l_drop_mean=.. phi_k_drop_min=.. phi_k_drop_mean=..`
fn summary(inst: &Instance, trace: &FlipTrace) -> String {
    let pl = drops(trace.records.iter().map(|r| r.phi_l_before.zip(r.phi_l_after)));
    let pk = drops(trace.records.iter().map(|r| r.phi_k_before.zip(r.phi_k_after)));
    let (pl_min, pl_mean) = pl.split_once(' ').unwrap();
    let (pk_min, pk_mean) = pk.split_once(' ').unwrap();
    format!(
        "steps={} final_crossings={} phi_l_drop_min={pl_min} phi_l_drop_mean={pl_mean} phi_k_drop_min={pk_min} phi_k_drop_mean={pk_mean}",
        trace.len(),
        find_crossings(&inst.points, &trace.final_matching).len()
    )
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let mut inst = load_instance(&args.instance)?;
    let strategy = parse_strategy(&args.strategy)?;
    if let Some(r) = &args.respond {
        if r != "greedy-x" {
            return Err(Failure::input(anyhow!("unsupported response rule {r:?}; only greedy-x is available")));
        }
        if !matches!(strategy, Strategy::AdversaryImposed(_)) {
            return Err(Failure::input(anyhow!("--respond only applies to adversary strategies")));
        }
    }
    if args.shear {
        let points = shear_to_distinct_x(&inst.points).map_err(Failure::input)?;
        let notes = format!("{} (sheared to distinct x)", inst.notes).trim().to_string();
        inst = Instance::new(points, inst.matching.clone(), inst.provenance.clone(), notes).map_err(Failure::input)?;
        if let Some(p) = &args.save_instance {
            write_out(Some(p), &instance_to_json(&inst))?;
        }
    }
    let (trace, outcome) = match run_strategy(&inst, strategy, args.max_steps, args.phi_l) {
        Ok(t) => (t, Ok(())),
        Err(SearchError::StepCapReached { max_steps, trace }) => {
            (*trace, Err(Failure { code: 4, err: anyhow!("step cap of {max_steps} reached with crossings remaining") }))
        }
        Err(e) => return Err(Failure::search(e)),
    };
    if let Some(p) = &args.trace {
        let csv = trace_to_csv(&inst.points, &trace).map_err(Failure::internal)?;
        write_out(Some(p), &csv)?;
    }
    println!("{}", summary(&inst, &trace));
    outcome
}

fn witness_path(report: &Path, tag: &str) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    report.with_file_name(format!("{stem}.{tag}.csv"))
}

fn cmd_search(args: SearchArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let limits = args.limits.limits()?;
    let (want_f, want_h) = match args.which.as_str() {
        "f" => (true, false),
        "h" => (false, true),
        "both" => (true, true),
        w => return Err(Failure::input(anyhow!("--which must be f, h or both, got {w:?}"))),
    };
    let mut report = ReportFile::default();
    let mut hit: Option<Failure> = None;
    let mut record_limit = |e: SearchError, report: &mut ReportFile| -> Result<Option<usize>, Failure> {
        let lower = match &e {
            SearchError::LimitsExceeded { states_expanded, lower_bound, .. } => {
                report.states_expanded += states_expanded;
                *lower_bound
            }
            SearchError::CapExceeded { .. } => None,
            _ => return Err(Failure::search(e)),
        };
        report.limits_hit = true;
        hit.get_or_insert(Failure::search(e));
        Ok(lower)
    };
    let save_witness = |tag: &str, trace: &FlipTrace| -> Result<String, Failure> {
        let path = witness_path(&args.out, tag);
        write_out(Some(&path), &trace_to_csv(&inst.points, trace).map_err(Failure::internal)?)?;
        Ok(path.display().to_string())
    };
    if want_f {
        match longest_flip_sequence(&inst, limits) {
            Ok(r) => {
                report.f = Some(r.value);
                report.states_expanded += r.states_expanded;
                report.witness_trace = Some(save_witness("f", &r.witness)?);
            }
            Err(e) => report.f_lower_bound = record_limit(e, &mut report)?,
        }
    }
    if want_h {
        match shortest_flip_sequence(&inst, limits) {
            Ok(r) => {
                report.h = Some(r.value);
                report.states_expanded += r.states_expanded;
                let path = save_witness("h", &r.witness)?;
                if want_f {
                    report.witness_trace_h = Some(path);
                } else {
                    report.witness_trace = Some(path);
                }
            }
            Err(e) => {
                record_limit(e, &mut report)?;
            }
        }
    }
    if args.exhaustive {
        match extremal_estimates(&inst.points, limits, args.cap) {
            Ok(est) => {
                report.g_hat = Some(est.g_hat);
                report.k_hat = Some(est.k_hat);
                report.states_expanded += est.states_expanded;
            }
            Err(e) => {
                record_limit(e, &mut report)?;
            }
        }
    }
    let json = serde_json::to_string_pretty(&report).map_err(Failure::internal)?;
    write_out(Some(&args.out), &(json + "\n"))?;
    match hit {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn cmd_audit(args: AuditArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let ps = &inst.points;
    let mut crossings = find_crossings(ps, &inst.matching);
    if let Some(spec) = &args.crossing {
        let (a, b) = spec.split_once(',').ok_or_else(|| Failure::input(anyhow!("--crossing wants i-j,k-l")))?;
        let c = CrossingPair::new(parse_segment(a).map_err(Failure::input)?, parse_segment(b).map_err(Failure::input)?);
        if !crossings.contains(&c) {
            return Err(Failure::input(anyhow!("{c} is not a crossing of the instance matching")));
        }
        crossings = vec![c];
    }
    let choices = match &args.choice {
        Some(s) => vec![FlipChoice::from_label(s).ok_or_else(|| Failure::input(anyhow!("--choice must be A or B")))?],
        None => FlipChoice::BOTH.to_vec(),
    };
    let mut audits = Vec::new();
    for c in &crossings {
        for &choice in &choices {
            audits.push(decrement_audit(ps, &inst.matching, c, choice).map_err(Failure::internal)?);
        }
    }
    let json = serde_json::to_string_pretty(&audits).map_err(Failure::internal)?;
    write_out(args.out.as_deref(), &(json + "\n"))
}

fn cmd_render(args: RenderArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let ps = &inst.points;
    let Some(trace_path) = &args.trace else {
        return write_out(Some(&args.out), &svg::render(ps, &inst.matching, &[], &[]));
    };
    let text = fs::read_to_string(trace_path)
        .with_context(|| format!("reading {}", trace_path.display()))
        .map_err(Failure::input)?;
    let trace = trace_from_csv(ps, &inst.id(), &inst.matching, &text)
        .with_context(|| format!("replaying {}", trace_path.display()))
        .map_err(Failure::input)?;
    let frames = svg::render_trace(ps, &trace).map_err(Failure::input)?;
    match args.frame {
        Some(k) => {
            let frame = frames
                .get(k)
                .ok_or_else(|| Failure::input(anyhow!("frame {k} out of range; the trace has {} frames", frames.len())))?;
            write_out(Some(&args.out), frame)
        }
        None => {
            fs::create_dir_all(&args.out)?;
            for (k, frame) in frames.iter().enumerate() {
                write_out(Some(&args.out.join(format!("frame_{k:03}.svg"))), frame)?;
            }
            println!("frames={}", frames.len());
            Ok(())
        }
    }
}
