//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p flipmatch --test acceptance -- --nocapture --test-threads=1`
//! to see them in order.

use std::time::{Duration, Instant};

use flipmatch::matching::{crossing_count, LENGTH_REL_TOL};
use flipmatch::potentials::phi_lines_bound;
use flipmatch::search::{
    enumerate_all_matchings, extremal_estimates, phi_k_steps, run_strategy, Adversary, FlipDag, SearchError,
    Strategy,
};
use flipmatch::{
    decrement_audit, find_crossings, flip, gen_convex, gen_random, gen_two_line, is_noncrossing, longest_flip_sequence,
    phi_lines, segments_properly_cross, shortest_flip_sequence, BBox, CrossingPair, FlipChoice, Instance, Matching,
    Permutation, SearchLimits, Segment,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

fn report(id: &str, title: &str, ok: bool, detail: String) {
    println!("[{}] {id} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id} failed: {detail}");
}

fn choose(n: usize) -> usize {
    n * (n - 1) / 2
}

struct FuzzStats {
    flips: usize,
    choices_checked: usize,
    instances: usize,
    max_phi_l_ratio: f64,
    worst_delta_phi_l: i64,
    worst_delta_phi_k: i64,
    strict_float_decreases: usize,
    unsound: Vec<String>,
    potential: Vec<String>,
}

/// Random-flip runs on sheared random instances with n in [2, 10]. At every
/// step both choices are checked; one of them, picked at random, is applied.
fn fuzz_corpus(min_flips: usize) -> FuzzStats {
    let mut rng = ChaCha8Rng::seed_from_u64(2016);
    let mut s = FuzzStats {
        flips: 0,
        choices_checked: 0,
        instances: 0,
        max_phi_l_ratio: 0.0,
        worst_delta_phi_l: i64::MIN,
        worst_delta_phi_k: i64::MIN,
        strict_float_decreases: 0,
        unsound: Vec::new(),
        potential: Vec::new(),
    };
    while s.flips < min_flips {
        let n = 2 + s.instances % 9;
        let inst = common::sheared_random(n, rng.gen());
        s.instances += 1;
        let ps = &inst.points;
        let bound = phi_lines_bound(n);
        let mut current = inst.matching.clone();
        let phi0 = phi_lines(ps, &current);
        s.max_phi_l_ratio = s.max_phi_l_ratio.max(phi0 as f64 / bound as f64);
        if phi0 > bound {
            s.potential.push(format!("phi_l {phi0} > 4n^3 on {}", inst.id()));
        }
        loop {
            let crossings = find_crossings(ps, &current);
            if crossings.is_empty() {
                break;
            }
            let c = crossings[rng.gen_range(0..crossings.len())];
            let mut next = None;
            let pick = rng.gen_range(0..2);
            for (k, choice) in FlipChoice::BOTH.into_iter().enumerate() {
                s.choices_checked += 1;
                let (m, rec) = flip(ps, &current, &c, choice).expect("live crossing");
                if Matching::new(ps.len(), &m.as_index_pairs()).ok().as_ref() != Some(&m) {
                    s.unsound.push(format!("flip produced an invalid matching {m}"));
                }
                if segments_properly_cross(rec.new_e1, rec.new_e2, ps).unwrap() {
                    s.unsound.push(format!("new segments {} and {} cross", rec.new_e1, rec.new_e2));
                }
                // The tolerance only absorbs float noise in the monitor; the
                // decrease itself can be far below 1e-9 relative on sheared sets.
                if rec.length_after < rec.length_before {
                    s.strict_float_decreases += 1;
                } else if rec.length_after > rec.length_before * (1.0 + LENGTH_REL_TOL) {
                    s.unsound.push(format!("length {} -> {}", rec.length_before, rec.length_after));
                }
                match decrement_audit(ps, &current, &c, choice) {
                    Ok(a) => {
                        s.worst_delta_phi_l = s.worst_delta_phi_l.max(a.delta_phi_l);
                        let dk = a.delta_phi_k.expect("sheared sets have distinct x");
                        s.worst_delta_phi_k = s.worst_delta_phi_k.max(dk);
                        if a.delta_phi_l > -4 {
                            s.potential.push(format!("delta phi_l {} on {}", a.delta_phi_l, inst.id()));
                        }
                        if a.phi_l_after > bound {
                            s.potential.push(format!("phi_l {} > 4n^3", a.phi_l_after));
                        }
                    }
                    Err(e) => s.potential.push(format!("audit failed: {e}")),
                }
                if k == pick {
                    next = Some(m);
                }
            }
            current = next.unwrap();
            s.flips += 1;
        }
    }
    s
}

#[test]
fn ac01_ac02_flip_soundness_and_lines_potential_decrement() {
    let start = Instant::now();
    let s = fuzz_corpus(100_000);
    let elapsed = start.elapsed();
    for f in s.unsound.iter().chain(&s.potential).take(8) {
        println!("  {f}");
    }
    report(
        "AC-1",
        "flip soundness fuzz",
        s.flips >= 100_000 && s.unsound.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{} flips ({} choices checked, {} strictly shorter in f64) over {} instances in {:.1?}; {} failures",
            s.flips,
            s.choices_checked,
            s.strict_float_decreases,
            s.instances,
            elapsed,
            s.unsound.len()
        ),
    );
    report(
        "AC-2",
        "phi_L drops by >= 4 on every flip, no line gains",
        s.potential.is_empty() && s.worst_delta_phi_l <= -4,
        format!("largest delta phi_L over {} checked flips = {}", s.choices_checked, s.worst_delta_phi_l),
    );
}

#[test]
fn ac03_lines_potential_bound() {
    let mut sets = 0;
    let mut matchings = 0;
    let mut violations = 0;
    for n in [2, 3, 4, 4] {
        for seed in 0..10 {
            let base = gen_random(n, 3000 + seed + 100 * sets as u64, BBox::square(-200, 200)).unwrap();
            sets += 1;
            for m in enumerate_all_matchings(&base.points, 4).unwrap() {
                matchings += 1;
                if phi_lines(&base.points, &m) > phi_lines_bound(n) {
                    violations += 1;
                }
            }
        }
    }
    let fuzz = fuzz_corpus(5_000);
    report(
        "AC-3",
        "phi_L <= 4n^3",
        violations == 0 && sets >= 20 && fuzz.potential.is_empty(),
        format!(
            "{matchings} matchings on {sets} point sets, {violations} violations; fuzz corpus max phi_L/4n^3 = {:.3}",
            fuzz.max_phi_l_ratio
        ),
    );
}

#[test]
fn ac04_vertical_potential_decrement() {
    let mut greedy_steps = 0;
    let mut worst_greedy = i64::MIN;
    let mut runs = 0;
    let strategies = [
        Strategy::GreedyX,
        Strategy::AdversaryImposed(Adversary::Random(5)),
        Strategy::AdversaryImposed(Adversary::FirstCrossing),
        Strategy::AdversaryImposed(Adversary::MaxCrossing),
    ];
    let mut instances: Vec<Instance> = (0..300).map(|k| common::sheared_random(2 + k % 9, 7000 + k as u64)).collect();
    instances.extend((2..=8).map(|n| gen_convex(n).unwrap()));
    instances.extend((2..=8).map(|n| gen_two_line(&Permutation::reverse(n)).unwrap()));
    for inst in &instances {
        for strategy in strategies {
            let trace = run_strategy(inst, strategy, 10_000, false).expect("strategy terminates");
            runs += 1;
            for (before, after) in phi_k_steps(&trace.records).into_iter().map(|s| s.expect("instrumented")) {
                greedy_steps += 1;
                worst_greedy = worst_greedy.max(after as i64 - before as i64);
            }
        }
    }
    let fuzz = fuzz_corpus(20_000);
    report(
        "AC-4",
        "phi_K drops by >= 2 per x-greedy step and never rises",
        worst_greedy <= -2 && fuzz.worst_delta_phi_k <= 0,
        format!(
            "{greedy_steps} greedy/adversarial steps in {runs} runs, largest delta phi_K = {worst_greedy}; \
             arbitrary flips: largest delta phi_K = {} over {} checked",
            fuzz.worst_delta_phi_k, fuzz.choices_checked
        ),
    );
}

#[test]
fn ac05_bubble_sort_lower_bound() {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut ok = true;
    for n in 2..=8 {
        let inst = gen_two_line(&Permutation::reverse(n)).unwrap();
        let trace = run_strategy(&inst, Strategy::BubbleAdjacent, 1_000, false).unwrap();
        ok &= trace.len() == choose(n) && is_noncrossing(&inst.points, &trace.final_matching);
        rows.push(format!("n={n}:{}", trace.len()));
    }
    let elapsed = start.elapsed();
    report(
        "AC-5",
        "bubble flips on reversed two-line instance = C(n,2)",
        ok && elapsed < Duration::from_secs(5),
        format!("{} in {:.1?}", rows.join(" "), elapsed),
    );
}

#[test]
fn ac06_convex_shortest_is_n_minus_one() {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut ok = true;
    for n in 2..=5 {
        let h = shortest_flip_sequence(&gen_convex(n).unwrap(), SearchLimits::default()).unwrap();
        ok &= h.value == n - 1;
        rows.push(format!("n={n}:h={}", h.value));
    }
    let limits = SearchLimits { max_states: 10_000_000, ..SearchLimits::default() };
    match shortest_flip_sequence(&gen_convex(6).unwrap(), limits) {
        Ok(h) => {
            ok &= h.value == 5;
            rows.push(format!("n=6:h={} ({} states)", h.value, h.states_expanded));
        }
        Err(SearchError::LimitsExceeded { states_expanded, .. }) => {
            rows.push(format!("n=6: limit hit after {states_expanded} states"));
        }
        Err(e) => panic!("{e}"),
    }
    let elapsed = start.elapsed();
    report(
        "AC-6",
        "h(convex n) = n - 1",
        ok && elapsed < Duration::from_secs(120),
        format!("{} in {:.1?}", rows.join(" "), elapsed),
    );
}

#[test]
fn ac07_exhaustive_upper_bounds() {
    let start = Instant::now();
    let mut sets = 0;
    let mut ok = true;
    let mut worst = (0, 0);
    for seed in 0..12u64 {
        let n = 4;
        let base = gen_random(n, 500 + seed, BBox::square(0, 200)).unwrap();
        let est = extremal_estimates(&base.points, SearchLimits::default(), 4).unwrap();
        sets += 1;
        ok &= est.per_matching.len() == 105;
        ok &= est.g_hat <= n * n * n && est.k_hat <= (n * n).div_ceil(2);
        ok &= est.per_matching.iter().all(|v| v.h <= v.f);
        worst = (worst.0.max(est.g_hat), worst.1.max(est.k_hat));
    }
    let elapsed = start.elapsed();
    report(
        "AC-7",
        "g_hat <= n^3, k_hat <= ceil(n^2/2), h <= f",
        ok && sets >= 10 && elapsed < Duration::from_secs(600),
        format!("{sets} point sets with n=4: max g_hat={} (cap 64), max k_hat={} (cap 8) in {:.1?}", worst.0, worst.1, elapsed),
    );
}

#[test]
fn ac08_segment_disappears_and_reappears() {
    let inst = common::fixture("segment_reappears.json");
    let ps = &inst.points;
    let seg = |a, b| Segment::new(a, b).unwrap();
    let script = [
        (CrossingPair::new(seg(1, 4), seg(2, 3)), FlipChoice::ReconnectB),
        (CrossingPair::new(seg(0, 5), seg(1, 2)), FlipChoice::ReconnectA),
        (CrossingPair::new(seg(2, 5), seg(3, 4)), FlipChoice::ReconnectA),
    ];
    let mut states = vec![inst.matching.clone()];
    for (c, choice) in script {
        let (next, _) = flip(ps, states.last().unwrap(), &c, choice).unwrap();
        states.push(next);
    }
    let a = seg(2, 3);
    let presence: Vec<bool> = states.iter().map(|m| m.contains(a)).collect();
    let expected_final = Matching::new(6, &[(0, 1), (2, 3), (4, 5)]).unwrap();
    report(
        "AC-8",
        "segment 2-3 disappears and reappears",
        presence == [true, false, false, true] && is_noncrossing(ps, &states[3]) && states[3] == expected_final,
        format!("presence by step {presence:?}, final {}", states[3]),
    );
}

#[test]
fn ac09_crossings_can_increase() {
    let inst = common::fixture("crossings_1_to_3.json");
    let ps = &inst.points;
    let before = crossing_count(ps, &inst.matching);
    let c = CrossingPair::new(Segment::new(1, 5).unwrap(), Segment::new(4, 7).unwrap());
    let (next, _) = flip(ps, &inst.matching, &c, FlipChoice::ReconnectA).unwrap();
    let after = crossing_count(ps, &next);
    report(
        "AC-9",
        "a single flip raises crossings from 1 to 3",
        before == 1 && after == 3,
        format!("pinned instance: {before} -> {after} crossings"),
    );
}

#[test]
fn ac10_flip_graph_is_acyclic() {
    let mut enumerated = 0;
    let mut cycles = 0;
    for n in 2..=4 {
        for seed in 0..10 {
            let base = gen_random(n, 9000 + seed, BBox::square(0, 150)).unwrap();
            let mut dag = FlipDag::new(&base.points, SearchLimits::default());
            for m in enumerate_all_matchings(&base.points, 4).unwrap() {
                enumerated += 1;
                if let Err(SearchError::CycleDetected(_)) = dag.solve(&m) {
                    cycles += 1;
                }
            }
        }
    }
    let mut randoms = 0;
    let mut unterminated = 0;
    for k in 0..1000u64 {
        let inst = gen_random(2 + (k as usize % 5), 20_000 + k, BBox::square(0, 300)).unwrap();
        randoms += 1;
        match longest_flip_sequence(&inst, SearchLimits::default()) {
            Err(SearchError::CycleDetected(_)) => cycles += 1,
            Err(e) => panic!("{e}"),
            Ok(_) => {}
        }
        match run_strategy(&inst, Strategy::Random(k), 1_000_000, false) {
            Ok(t) if is_noncrossing(&inst.points, &t.final_matching) => {}
            _ => unterminated += 1,
        }
    }
    report(
        "AC-10",
        "no flip-graph cycle, random runs terminate",
        cycles == 0 && unterminated == 0,
        format!("{enumerated} enumerated starts, {randoms} random instances (n<=6): {cycles} cycles, {unterminated} unterminated runs"),
    );
}

#[test]
fn ac11_oracle_equivalence() {
    let mut checked = 0;
    let mut mismatches = 0;
    for n in [2, 3] {
        for seed in 0..5 {
            let base = gen_random(n, 600 + seed, BBox::square(0, 90)).unwrap();
            for m in enumerate_all_matchings(&base.points, 3).unwrap() {
                let inst = base.with_matching(m.clone());
                let f = longest_flip_sequence(&inst, SearchLimits::default()).unwrap().value;
                let h = shortest_flip_sequence(&inst, SearchLimits::default()).unwrap().value;
                checked += 1;
                if common::naive_values(&base.points, &m) != (f, h) {
                    mismatches += 1;
                }
            }
        }
    }
    report(
        "AC-11",
        "memoized f and BFS h match the naive recursion",
        mismatches == 0 && checked == 5 * (3 + 15),
        format!("{checked} matchings, {mismatches} mismatches"),
    );
}
