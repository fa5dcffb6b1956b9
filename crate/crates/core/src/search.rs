//! Flip-graph search: exact longest and shortest flip sequences, strategy
//! runners and exhaustive estimates over all matchings of a point set.
//!
//! Every flip strictly shortens the matching, so the flip graph is a DAG.
//! The depth-first traversal still tracks the nodes on its stack and treats
//! a revisit as a fatal invariant violation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::generators::{Instance, Provenance};
use crate::geometry::{PointSet, Segment};
use crate::matching::{
    find_crossings, flip_instrumented, is_noncrossing, successor, CrossingPair, EngineError, FlipChoice, FlipRecord,
    FlipTrace, Instrumentation, Matching,
};
use crate::potentials::{phi_vertical, x_greedy_choice, PotentialError};

/// Largest `n` that [`enumerate_all_matchings`] accepts by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_states: usize,
    pub max_depth: usize,
    pub time_budget: Duration,
    /// Which reconnections count as flips in `f` and `h`.
    pub regime: ChoiceRegime,
}

/// Admissible reconnections per crossing. Both are admissible by default;
/// the single-choice regimes exist for sensitivity experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChoiceRegime {
    #[default]
    Both,
    Only(FlipChoice),
    /// Only the x-greedy reconnection; needs distinct x-coordinates.
    XGreedy,
}

impl fmt::Display for ChoiceRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoiceRegime::Both => f.write_str("both"),
            ChoiceRegime::Only(c) => write!(f, "{}", c.label()),
            ChoiceRegime::XGreedy => f.write_str("x-greedy"),
        }
    }
}

impl FromStr for ChoiceRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "both" => Ok(ChoiceRegime::Both),
            "x-greedy" => Ok(ChoiceRegime::XGreedy),
            _ => FlipChoice::from_label(s)
                .map(ChoiceRegime::Only)
                .ok_or_else(|| format!("unknown choice regime {s:?}; expected both, A, B or x-greedy")),
        }
    }
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_states: 10_000_000,
            max_depth: 1_000_000,
            time_budget: Duration::from_secs(60),
            regime: ChoiceRegime::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    States,
    Depth,
    Time,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search limit ({kind:?}) exceeded after {states_expanded} states")]
    LimitsExceeded {
        kind: LimitKind,
        states_expanded: usize,
        /// Longest partial flip sequence seen; every such sequence extends to a full one.
        lower_bound: Option<usize>,
        frontier: Option<usize>,
    },
    #[error("flip graph cycle through {0}")]
    CycleDetected(Matching),
    #[error("enumeration of n = {n} exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("strategy not applicable: {0}")]
    StrategyInapplicable(String),
    #[error("step cap of {max_steps} reached with crossings remaining")]
    StepCapReached { max_steps: usize, trace: Box<FlipTrace> },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Outgoing flips of `m` in canonical order: crossings sorted, choice A before B.
pub fn successors(ps: &PointSet, m: &Matching) -> Result<Vec<(CrossingPair, FlipChoice, Matching)>, EngineError> {
    let mut out = Vec::new();
    for c in find_crossings(ps, m) {
        for choice in FlipChoice::BOTH {
            out.push((c, choice, successor(ps, m, &c, choice)?));
        }
    }
    Ok(out)
}

/// [`successors`] restricted to the reconnections admitted by `regime`.
pub fn regime_successors(
    ps: &PointSet,
    m: &Matching,
    regime: ChoiceRegime,
) -> Result<Vec<(CrossingPair, FlipChoice, Matching)>, SearchError> {
    let mut out = Vec::new();
    for c in find_crossings(ps, m) {
        let choices = match regime {
            ChoiceRegime::Both => vec![FlipChoice::ReconnectA, FlipChoice::ReconnectB],
            ChoiceRegime::Only(choice) => vec![choice],
            ChoiceRegime::XGreedy => vec![x_greedy_choice(ps, &c)?],
        };
        for choice in choices {
            out.push((c, choice, successor(ps, m, &c, choice)?));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeValues {
    /// Longest flip sequence to a non-crossing matching.
    pub longest: usize,
    /// Shortest flip sequence to a non-crossing matching.
    pub shortest: usize,
    best_long: Option<(CrossingPair, FlipChoice)>,
    best_short: Option<(CrossingPair, FlipChoice)>,
}

struct Frame {
    matching: Matching,
    succs: Vec<(CrossingPair, FlipChoice, Matching)>,
    next: usize,
}

/// Memoized longest/shortest suffix values over the flip DAG of one point set.
/// The memo persists across calls, so solving many start matchings shares work.
pub struct FlipDag<'a> {
    points: &'a PointSet,
    memo: HashMap<Matching, NodeValues>,
    limits: SearchLimits,
    started: Instant,
    expanded: usize,
}

impl<'a> FlipDag<'a> {
    pub fn new(points: &'a PointSet, limits: SearchLimits) -> Self {
        FlipDag { points, memo: HashMap::new(), limits, started: Instant::now(), expanded: 0 }
    }

    pub fn states_expanded(&self) -> usize {
        self.expanded
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn values(&self, m: &Matching) -> Option<NodeValues> {
        self.memo.get(m).copied()
    }

    fn check_limits(&self, depth: usize, lower_bound: usize) -> Result<(), SearchError> {
        let kind = if self.expanded > self.limits.max_states {
            Some(LimitKind::States)
        } else if depth > self.limits.max_depth {
            Some(LimitKind::Depth)
        } else if self.expanded.is_multiple_of(1024) && self.started.elapsed() > self.limits.time_budget {
            Some(LimitKind::Time)
        } else {
            None
        };
        match kind {
            Some(kind) => Err(SearchError::LimitsExceeded {
                kind,
                states_expanded: self.expanded,
                lower_bound: Some(lower_bound),
                frontier: None,
            }),
            None => Ok(()),
        }
    }

    /// Solves `root` and every matching reachable from it.
    pub fn solve(&mut self, root: &Matching) -> Result<NodeValues, SearchError> {
        if let Some(v) = self.memo.get(root) {
            return Ok(*v);
        }
        let mut on_stack: HashSet<Matching> = HashSet::new();
        let mut stack: Vec<Frame> = Vec::new();
        let mut deepest = 0;
        self.push(root.clone(), &mut stack, &mut on_stack)?;
        while let Some(top) = stack.last_mut() {
            if top.next < top.succs.len() {
                let child = top.succs[top.next].2.clone();
                top.next += 1;
                if self.memo.contains_key(&child) {
                    continue;
                }
                if on_stack.contains(&child) {
                    return Err(SearchError::CycleDetected(child));
                }
                deepest = deepest.max(stack.len());
                self.check_limits(stack.len(), deepest)?;
                self.push(child, &mut stack, &mut on_stack)?;
                continue;
            }
            let frame = stack.pop().expect("non-empty stack");
            on_stack.remove(&frame.matching);
            let mut values = NodeValues { longest: 0, shortest: 0, best_long: None, best_short: None };
            for (c, choice, child) in &frame.succs {
                let v = self.memo[child];
                if values.best_long.is_none() || v.longest + 1 > values.longest {
                    values.longest = v.longest + 1;
                    values.best_long = Some((*c, *choice));
                }
                if values.best_short.is_none() || v.shortest + 1 < values.shortest {
                    values.shortest = v.shortest + 1;
                    values.best_short = Some((*c, *choice));
                }
            }
            self.memo.insert(frame.matching, values);
        }
        Ok(self.memo[root])
    }

    fn push(&mut self, m: Matching, stack: &mut Vec<Frame>, on_stack: &mut HashSet<Matching>) -> Result<(), SearchError> {
        self.expanded += 1;
        let succs = regime_successors(self.points, &m, self.limits.regime)?;
        on_stack.insert(m.clone());
        stack.push(Frame { matching: m, succs, next: 0 });
        Ok(())
    }

    /// Follows memoized best moves from a solved `root`.
    pub fn witness(&self, instance_id: &str, root: &Matching, longest: bool) -> Result<FlipTrace, SearchError> {
        let mut trace = FlipTrace::empty(instance_id, root.clone());
        let mut current = root.clone();
        loop {
            let v = self.memo.get(&current).expect("witness requested for unsolved matching");
            let best = if longest { v.best_long } else { v.best_short };
            let Some((c, choice)) = best else { break };
            let (next, record) = flip_instrumented(self.points, &current, &c, choice, Instrumentation::NONE)?;
            trace.records.push(record);
            current = next;
        }
        trace.final_matching = current;
        Ok(trace)
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub value: usize,
    pub witness: FlipTrace,
    pub states_expanded: usize,
}

/// Exact `f(M)`: the longest flip sequence from the instance's matching.
pub fn longest_flip_sequence(inst: &Instance, limits: SearchLimits) -> Result<SearchResult, SearchError> {
    let mut dag = FlipDag::new(&inst.points, limits);
    let v = dag.solve(&inst.matching)?;
    Ok(SearchResult {
        value: v.longest,
        witness: dag.witness(&inst.id(), &inst.matching, true)?,
        states_expanded: dag.states_expanded(),
    })
}

/// Exact `h(M)` by breadth-first search with canonical successor order.
pub fn shortest_flip_sequence(inst: &Instance, limits: SearchLimits) -> Result<SearchResult, SearchError> {
    let ps = &inst.points;
    let root = inst.matching.clone();
    if is_noncrossing(ps, &root) {
        return Ok(SearchResult { value: 0, witness: FlipTrace::empty(inst.id(), root), states_expanded: 0 });
    }
    let started = Instant::now();
    let mut parent: HashMap<Matching, Option<(Matching, CrossingPair, FlipChoice)>> = HashMap::new();
    parent.insert(root.clone(), None);
    let mut queue: VecDeque<(Matching, usize)> = VecDeque::from([(root.clone(), 0)]);
    let mut expanded = 0usize;
    while let Some((m, depth)) = queue.pop_front() {
        expanded += 1;
        let kind = if parent.len() > limits.max_states {
            Some(LimitKind::States)
        } else if depth >= limits.max_depth {
            Some(LimitKind::Depth)
        } else if expanded.is_multiple_of(1024) && started.elapsed() > limits.time_budget {
            Some(LimitKind::Time)
        } else {
            None
        };
        if let Some(kind) = kind {
            return Err(SearchError::LimitsExceeded {
                kind,
                states_expanded: expanded,
                lower_bound: None,
                frontier: Some(queue.len() + 1),
            });
        }
        for (c, choice, next) in regime_successors(ps, &m, limits.regime)? {
            if parent.contains_key(&next) {
                continue;
            }
            parent.insert(next.clone(), Some((m.clone(), c, choice)));
            if is_noncrossing(ps, &next) {
                let mut steps = vec![(c, choice)];
                let mut cursor = m.clone();
                while let Some(Some((prev, c, choice))) = parent.get(&cursor) {
                    steps.push((*c, *choice));
                    cursor = prev.clone();
                }
                steps.reverse();
                let mut trace = FlipTrace::empty(inst.id(), root.clone());
                let mut current = root;
                for (c, choice) in steps {
                    let (n, r) = flip_instrumented(ps, &current, &c, choice, Instrumentation::NONE)?;
                    trace.records.push(r);
                    current = n;
                }
                trace.final_matching = current;
                return Ok(SearchResult { value: trace.len(), witness: trace, states_expanded: expanded });
            }
            queue.push_back((next, depth + 1));
        }
    }
    unreachable!("every flip sequence ends in a non-crossing matching")
}

/// Who picks the crossing in an adversarial run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    Random(u64),
    FirstCrossing,
    /// The crossing whose x-greedy response removes the fewest gap-line crossings.
    MaxCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// First crossing, reconnected as (two x-leftmost)(two x-rightmost).
    GreedyX,
    /// Leftmost adjacent inversion of a two-line instance, keeping every segment between the lines.
    BubbleAdjacent,
    /// Uniformly random crossing and choice.
    Random(u64),
    /// First crossing, `ReconnectA`.
    FirstCrossing,
    /// The adversary picks the crossing; the x-greedy rule picks the reconnection.
    AdversaryImposed(Adversary),
}

enum Picker {
    GreedyX,
    Bubble { n: usize },
    Random(ChaCha8Rng),
    First,
    Adversary(AdversaryPicker),
}

// One picker lives per run; boxing the RNG would buy nothing.
#[allow(clippy::large_enum_variant)]
enum AdversaryPicker {
    Random(ChaCha8Rng),
    First,
    Max,
}

fn bubble_move(ps: &PointSet, m: &Matching, n: usize) -> Result<Option<(CrossingPair, FlipChoice)>, SearchError> {
    let partner = m.partners();
    let mut top = Vec::with_capacity(n);
    for (i, &p) in partner.iter().enumerate().take(n) {
        if p < n {
            return Err(SearchError::StrategyInapplicable(format!(
                "matching pairs bottom points {i} and {p}; it no longer encodes a permutation"
            )));
        }
        top.push(p - n);
    }
    let Some(i) = (0..n.saturating_sub(1)).find(|&i| top[i] > top[i + 1]) else {
        return Ok(None);
    };
    let c = CrossingPair::new(Segment::of(i, partner[i]), Segment::of(i + 1, partner[i + 1]));
    for choice in FlipChoice::BOTH {
        let added = c.reconnect(ps, choice)?;
        if added.iter().all(|s| s.a < n && s.b >= n) {
            return Ok(Some((c, choice)));
        }
    }
    Err(SearchError::StrategyInapplicable(format!("no reconnection of {c} keeps both segments between the lines")))
}

impl Picker {
    fn pick(&mut self, ps: &PointSet, m: &Matching, crossings: &[CrossingPair]) -> Result<(CrossingPair, FlipChoice), SearchError> {
        Ok(match self {
            Picker::GreedyX => (crossings[0], x_greedy_choice(ps, &crossings[0])?),
            Picker::Bubble { n } => bubble_move(ps, m, *n)?.ok_or_else(|| {
                SearchError::StrategyInapplicable("crossings remain but the permutation is sorted".into())
            })?,
            Picker::Random(rng) => {
                let c = crossings[rng.gen_range(0..crossings.len())];
                (c, FlipChoice::BOTH[rng.gen_range(0..2)])
            }
            Picker::First => (crossings[0], FlipChoice::ReconnectA),
            Picker::Adversary(adv) => {
                let c = match adv {
                    AdversaryPicker::Random(rng) => crossings[rng.gen_range(0..crossings.len())],
                    AdversaryPicker::First => crossings[0],
                    AdversaryPicker::Max => {
                        let mut best = (crossings[0], u64::MAX);
                        for &c in crossings {
                            let drop = greedy_phi_k_drop(ps, m, &c)?;
                            if drop < best.1 {
                                best = (c, drop);
                            }
                        }
                        best.0
                    }
                };
                (c, x_greedy_choice(ps, &c)?)
            }
        })
    }
}

fn greedy_phi_k_drop(ps: &PointSet, m: &Matching, c: &CrossingPair) -> Result<u64, SearchError> {
    let next = successor(ps, m, c, x_greedy_choice(ps, c)?)?;
    Ok(phi_vertical(ps, m)? - phi_vertical(ps, &next)?)
}

/// Runs `strategy` until the matching is non-crossing or `max_steps` flips
/// have been made. Every record carries `phi_vertical` when the x-coordinates
/// are distinct, and `phi_lines` when requested.
pub fn run_strategy(
    inst: &Instance,
    strategy: Strategy,
    max_steps: usize,
    with_phi_lines: bool,
) -> Result<FlipTrace, SearchError> {
    let ps = &inst.points;
    let distinct_x = ps.has_distinct_x();
    let needs_distinct_x = matches!(strategy, Strategy::GreedyX | Strategy::AdversaryImposed(_));
    if needs_distinct_x && !distinct_x {
        return Err(SearchError::StrategyInapplicable(
            "x-greedy reconnection needs pairwise distinct x-coordinates".into(),
        ));
    }
    let mut picker = match strategy {
        Strategy::GreedyX => Picker::GreedyX,
        Strategy::BubbleAdjacent => match &inst.provenance {
            Provenance::TwoLine(p) => Picker::Bubble { n: p.len() },
            other => {
                return Err(SearchError::StrategyInapplicable(format!(
                    "bubble strategy needs a two-line instance, got {other}"
                )))
            }
        },
        Strategy::Random(seed) => Picker::Random(ChaCha8Rng::seed_from_u64(seed)),
        Strategy::FirstCrossing => Picker::First,
        Strategy::AdversaryImposed(adv) => Picker::Adversary(match adv {
            Adversary::Random(seed) => AdversaryPicker::Random(ChaCha8Rng::seed_from_u64(seed)),
            Adversary::FirstCrossing => AdversaryPicker::First,
            Adversary::MaxCrossing => AdversaryPicker::Max,
        }),
    };
    let instr = Instrumentation { phi_lines: with_phi_lines, phi_vertical: distinct_x };
    let mut trace = FlipTrace::empty(inst.id(), inst.matching.clone());
    let mut current = inst.matching.clone();
    loop {
        let crossings = find_crossings(ps, &current);
        if crossings.is_empty() {
            break;
        }
        if trace.records.len() >= max_steps {
            trace.final_matching = current;
            return Err(SearchError::StepCapReached { max_steps, trace: Box::new(trace) });
        }
        let (c, choice) = picker.pick(ps, &current, &crossings)?;
        let (next, record) = flip_instrumented(ps, &current, &c, choice, instr)?;
        trace.records.push(record);
        current = next;
    }
    trace.final_matching = current;
    Ok(trace)
}

/// Streams every perfect matching on `2n` points in canonical (lexicographic) order.
pub struct MatchingEnumerator {
    num_points: usize,
    used: Vec<bool>,
    stack: Vec<(usize, usize)>,
    started: bool,
    done: bool,
}

impl MatchingEnumerator {
    fn new(num_points: usize) -> Self {
        MatchingEnumerator { num_points, used: vec![false; num_points], stack: Vec::new(), started: false, done: false }
    }

    fn next_unused(&self, after: usize) -> Option<usize> {
        (after..self.num_points).find(|&i| !self.used[i])
    }

    fn fill(&mut self) {
        while let Some(first) = self.next_unused(0) {
            let partner = self.next_unused(first + 1).expect("an even number of points remain");
            self.used[first] = true;
            self.used[partner] = true;
            self.stack.push((first, partner));
        }
    }

    fn advance(&mut self) -> bool {
        while let Some((first, partner)) = self.stack.pop() {
            self.used[partner] = false;
            if let Some(next) = self.next_unused(partner + 1) {
                self.used[next] = true;
                self.stack.push((first, next));
                self.fill();
                return true;
            }
            self.used[first] = false;
        }
        false
    }
}

impl Iterator for MatchingEnumerator {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill();
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        let pairs = self.stack.iter().map(|&(a, b)| Segment { a, b }).collect();
        Some(Matching::from_sorted(pairs))
    }
}

/// All `(2n - 1)!!` perfect matchings of `ps`; refuses `n > cap`.
pub fn enumerate_all_matchings(ps: &PointSet, cap: usize) -> Result<MatchingEnumerator, SearchError> {
    if ps.n() > cap {
        return Err(SearchError::CapExceeded { n: ps.n(), cap });
    }
    Ok(MatchingEnumerator::new(ps.len()))
}

/// `(2n - 1)!!`.
pub fn matching_count(n: usize) -> u64 {
    (1..=n as u64).map(|k| 2 * k - 1).product()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingValues {
    pub matching: Matching,
    pub f: usize,
    pub h: usize,
}

#[derive(Debug, Clone)]
pub struct ExtremalEstimates {
    /// Largest `f(M)` over all matchings of the point set.
    pub g_hat: usize,
    /// Largest `h(M)` over all matchings of the point set.
    pub k_hat: usize,
    pub g_witness: Matching,
    pub k_witness: Matching,
    pub per_matching: Vec<MatchingValues>,
    pub states_expanded: usize,
}

/// Exact maxima of `f` and `h` over every matching of `ps`, sharing one memo.
pub fn extremal_estimates(ps: &PointSet, limits: SearchLimits, cap: usize) -> Result<ExtremalEstimates, SearchError> {
    let mut dag = FlipDag::new(ps, limits);
    let mut per_matching = Vec::new();
    for m in enumerate_all_matchings(ps, cap)? {
        let v = dag.solve(&m)?;
        per_matching.push(MatchingValues { matching: m, f: v.longest, h: v.shortest });
    }
    // Ties resolve to the canonically first matching.
    let g = per_matching.iter().rev().max_by_key(|v| v.f).expect("at least one matching");
    let k = per_matching.iter().rev().max_by_key(|v| v.h).expect("at least one matching");
    Ok(ExtremalEstimates {
        g_hat: g.f,
        k_hat: k.h,
        g_witness: g.matching.clone(),
        k_witness: k.matching.clone(),
        states_expanded: dag.states_expanded(),
        per_matching,
    })
}

/// Steps of a trace as `(before, after)` gap-line potential pairs, when recorded.
pub fn phi_k_steps(records: &[FlipRecord]) -> Vec<Option<(u64, u64)>> {
    records.iter().map(|r| r.phi_k_before.zip(r.phi_k_after)).collect()
}
