//! `flipmatch sweep`: one CSV row per generated instance.
//!
//! For n up to `--exhaustive-max-n` every matching of the point set is solved
//! (`mode=exhaustive`, with g_hat and k_hat); beyond that only the generated
//! matching is searched (`mode=single`). Failures are recorded in the row.

use std::fs;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use flipmatch::potentials::{phi_lines_bound, phi_vertical_bound_square};
use flipmatch::search::extremal_estimates;
use flipmatch::{
    gen_convex, gen_random, gen_two_line, longest_flip_sequence, phi_lines, phi_vertical, run_strategy,
    shortest_flip_sequence, BBox, Instance, Permutation, SearchError, SearchLimits, Strategy,
};

use crate::{Failure, LimitArgs};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub(crate) enum Family {
    /// Seed 0 is the reversed permutation, other seeds shuffle.
    TwoLine,
    /// Deterministic; seeds are ignored.
    Convex,
    Random,
}

#[derive(Args)]
pub(crate) struct SweepArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Inclusive range such as `2..6`, or a single value.
    #[arg(long)]
    n: String,
    /// Inclusive seed range.
    #[arg(long, default_value = "0")]
    seeds: String,
    /// Receives `sweep.csv`.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    exhaustive_max_n: usize,
    /// Bounding box for the random family.
    #[arg(long, default_value = "0,0,1000,1000")]
    bbox: String,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Debug, Default, Serialize)]
struct Row {
    family: String,
    n: usize,
    seed: Option<u64>,
    instance: String,
    mode: &'static str,
    f: Option<usize>,
    f_lower: Option<usize>,
    h: Option<usize>,
    g_hat: Option<usize>,
    k_hat: Option<usize>,
    phi_l: Option<u64>,
    phi_l_bound: u64,
    phi_k: Option<u64>,
    phi_k_bound: u64,
    states_expanded: usize,
    status: String,
}

fn parse_range<T: std::str::FromStr + Copy>(s: &str) -> Result<RangeInclusive<T>, Failure> {
    let bad = || Failure::input(anyhow!("bad range {s:?}; expected a..b or a single value"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    Ok(a.trim().parse().map_err(|_| bad())?..=b.trim().parse().map_err(|_| bad())?)
}

fn generate(family: Family, n: usize, seed: u64, bbox: BBox) -> Result<Instance, String> {
    match family {
        Family::TwoLine => {
            let perm = if seed == 0 {
                Permutation::reverse(n)
            } else {
                let mut images: Vec<usize> = (0..n).collect();
                images.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                Permutation::new(images).map_err(|e| e.to_string())?
            };
            gen_two_line(&perm)
        }
        Family::Convex => gen_convex(n),
        Family::Random => gen_random(n, seed, bbox),
    }
    .map_err(|e| e.to_string())
}

fn note(row: &mut Row, status: String) {
    if row.status == "ok" {
        row.status = status;
    }
}

fn limit_hit(row: &mut Row, e: SearchError) -> Option<usize> {
    match e {
        SearchError::LimitsExceeded { kind, states_expanded, lower_bound, .. } => {
            row.states_expanded += states_expanded;
            note(row, format!("limits_hit:{kind:?}"));
            lower_bound
        }
        e => {
            note(row, format!("error: {e}"));
            None
        }
    }
}

fn compute(family: Family, n: usize, seed: Option<u64>, bbox: BBox, limits: SearchLimits, exhaustive_max_n: usize) -> Row {
    let mut row = Row {
        family: family.to_possible_value().expect("no skipped variants").get_name().to_string(),
        n,
        seed,
        phi_l_bound: phi_lines_bound(n),
        phi_k_bound: phi_vertical_bound_square(n),
        status: "ok".into(),
        ..Row::default()
    };
    let inst = match generate(family, n, seed.unwrap_or(0), bbox) {
        Ok(inst) => inst,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    let ps = &inst.points;
    row.instance = inst.id();
    row.phi_l = Some(phi_lines(ps, &inst.matching));
    row.phi_k = phi_vertical(ps, &inst.matching).ok();
    if n <= exhaustive_max_n {
        row.mode = "exhaustive";
        match extremal_estimates(ps, limits, exhaustive_max_n) {
            Ok(est) => {
                row.g_hat = Some(est.g_hat);
                row.k_hat = Some(est.k_hat);
                row.states_expanded += est.states_expanded;
                let own = est.per_matching.iter().find(|v| v.matching == inst.matching).expect("every matching enumerated");
                row.f = Some(own.f);
                row.h = Some(own.h);
            }
            Err(e) => row.f_lower = limit_hit(&mut row, e),
        }
    } else {
        row.mode = "single";
        match longest_flip_sequence(&inst, limits) {
            Ok(r) => {
                row.f = Some(r.value);
                row.states_expanded += r.states_expanded;
            }
            Err(e) => row.f_lower = limit_hit(&mut row, e),
        }
        match shortest_flip_sequence(&inst, limits) {
            Ok(r) => {
                row.h = Some(r.value);
                row.states_expanded += r.states_expanded;
            }
            Err(e) => {
                limit_hit(&mut row, e);
            }
        }
    }
    // Any completed run is a flip sequence, so its length bounds f from below.
    let mut lower = row.f.or(row.f_lower).unwrap_or(0);
    if matches!(family, Family::TwoLine) {
        match run_strategy(&inst, Strategy::BubbleAdjacent, usize::MAX, false) {
            Ok(t) => lower = lower.max(t.len()),
            Err(e) => note(&mut row, format!("error: bubble: {e}")),
        }
    }
    row.f_lower = Some(lower);
    row
}

pub(crate) fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let ns = parse_range::<usize>(&args.n)?;
    let seeds: Vec<Option<u64>> = match args.family {
        Family::Convex => vec![None],
        _ => parse_range::<u64>(&args.seeds)?.map(Some).collect(),
    };
    let bbox: BBox = args.bbox.parse().map_err(Failure::input)?;
    let limits = args.limits.limits()?;
    let jobs: Vec<(usize, Option<u64>)> = ns.flat_map(|n| seeds.iter().map(move |&s| (n, s))).collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(n, seed)| compute(args.family, n, seed, bbox, limits, args.exhaustive_max_n))
        .collect();
    fs::create_dir_all(&args.out_dir)?;
    let path = args.out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(Failure::input)?;
    for row in &rows {
        w.serialize(row).map_err(Failure::input)?;
    }
    w.flush()?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    println!("rows={} failed={failed} out={}", rows.len(), path.display());
    Ok(())
}
