//! The two potentials that bound flip sequences.
//!
//! `phi_lines` counts crossings between matching segments and the lines lying
//! infinitesimally on either side of every supporting line through two
//! points. Those perturbed lines are never materialized: a line is the anchor
//! pair plus a side, and a point on the anchor line is assigned to the side
//! opposite the offset. `phi_vertical` counts crossings with vertical lines
//! placed in each of the `2n - 1` gaps of the x-sorted point order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PointSet, Segment};
use crate::matching::{checked_reconnect, CrossingPair, EngineError, FlipChoice, Matching};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PotentialError {
    #[error("points {0} and {1} share an x-coordinate; shear the point set first")]
    DuplicateX(usize, usize),
    #[error("points {0:?} are not in convex position")]
    NotConvex([usize; 4]),
    #[error("line {line:?} gains {delta} crossings with the flipped segments")]
    LineCountIncreased { line: PerturbedLine, delta: i64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Offset toward the points with positive orientation relative to `p -> q`.
    Plus,
    Minus,
}

/// A copy of the supporting line of `p, q` shifted infinitesimally to one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerturbedLine {
    pub p: usize,
    pub q: usize,
    pub side: Side,
}

impl PerturbedLine {
    pub fn new(p: usize, q: usize, side: Side) -> Self {
        assert_ne!(p, q, "anchor points must differ");
        PerturbedLine { p: p.min(q), q: p.max(q), side }
    }

    /// Side of the shifted line on which point `x` lies, as `+1` or `-1`.
    #[inline]
    pub fn adjusted_sign(&self, ps: &PointSet, x: usize) -> i8 {
        match ps.orient(self.p, self.q, x) {
            0 => match self.side {
                Side::Plus => -1,
                Side::Minus => 1,
            },
            s => s,
        }
    }
}

/// Every perturbed line over `num_points` points: two per unordered pair.
pub fn perturbed_lines(num_points: usize) -> impl Iterator<Item = PerturbedLine> {
    (0..num_points).flat_map(move |p| {
        (p + 1..num_points).flat_map(move |q| [Side::Plus, Side::Minus].map(|side| PerturbedLine { p, q, side }))
    })
}

pub fn crosses_perturbed_line(line: &PerturbedLine, s: Segment, ps: &PointSet) -> bool {
    line.adjusted_sign(ps, s.a) != line.adjusted_sign(ps, s.b)
}

/// Total number of (perturbed line, segment) crossings.
pub fn phi_lines(ps: &PointSet, m: &Matching) -> u64 {
    let n_pts = ps.len();
    let mut sigma = vec![0i8; n_pts];
    let mut total = 0u64;
    for p in 0..n_pts {
        for q in p + 1..n_pts {
            for (x, s) in sigma.iter_mut().enumerate() {
                *s = ps.orient(p, q, x);
            }
            for seg in m.pairs() {
                let (sa, sb) = (sigma[seg.a], sigma[seg.b]);
                total += match (sa, sb) {
                    (0, 0) => 0,
                    // One endpoint on the anchor line: only one of the two copies separates them.
                    (0, _) | (_, 0) => 1,
                    _ if sa != sb => 2,
                    _ => 0,
                };
            }
        }
    }
    total
}

/// Number of perturbed lines, `2 * C(2n, 2)`.
pub fn perturbed_line_count(n: usize) -> u64 {
    let pts = 2 * n as u64;
    pts * (pts - 1)
}

/// The loose bound `4n^3` on `phi_lines`.
pub fn phi_lines_bound(n: usize) -> u64 {
    4 * (n as u64).pow(3)
}

/// The sharper bound `|lines| * n`: each line crosses each segment at most once.
pub fn phi_lines_sharp_bound(n: usize) -> u64 {
    perturbed_line_count(n) * n as u64
}

fn check_distinct_x(ps: &PointSet) -> Result<Vec<usize>, PotentialError> {
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by_key(|&i| ps.point(i).x);
    if let Some(w) = order.windows(2).find(|w| ps.point(w[0]).x == ps.point(w[1]).x) {
        return Err(PotentialError::DuplicateX(w[0].min(w[1]), w[0].max(w[1])));
    }
    let mut ranks = vec![0; ps.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r;
    }
    Ok(ranks)
}

/// Total crossings with the vertical gap lines, computed as the sum of the
/// x-rank spans of the segments.
pub fn phi_vertical(ps: &PointSet, m: &Matching) -> Result<u64, PotentialError> {
    let ranks = check_distinct_x(ps)?;
    Ok(m.pairs().iter().map(|s| ranks[s.a].abs_diff(ranks[s.b]) as u64).sum())
}

/// Crossing count of each of the `2n - 1` gap lines, left to right.
pub fn gap_line_crossings(ps: &PointSet, m: &Matching) -> Result<Vec<u64>, PotentialError> {
    check_distinct_x(ps)?;
    let mut xs: Vec<i64> = ps.points().iter().map(|p| p.x).collect();
    xs.sort_unstable();
    Ok(xs
        .windows(2)
        .map(|w| {
            // Doubled coordinates keep the gap line at an integer position.
            let line = w[0] + w[1];
            m.pairs()
                .iter()
                .filter(|s| {
                    let (xa, xb) = (2 * ps.point(s.a).x, 2 * ps.point(s.b).x);
                    xa.min(xb) < line && line < xa.max(xb)
                })
                .count() as u64
        })
        .collect())
}

/// `n^2`, the bound on `phi_vertical` as displayed for the vertical-line argument.
pub fn phi_vertical_bound_square(n: usize) -> u64 {
    (n as u64).pow(2)
}

/// `n (2n - 1)`, the bound obtained from `2n - 1` gap lines each crossing at most `n` segments.
pub fn phi_vertical_bound_gaps(n: usize) -> u64 {
    let n = n as u64;
    n * (2 * n - 1)
}

/// How a line partitions the four endpoints `q1..q4` of a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineType {
    /// Separates `{q1, q2}` from `{q3, q4}`: the pairs of `ReconnectA`.
    L1,
    /// Separates `{q2, q3}` from `{q4, q1}`: the pairs of `ReconnectB`.
    L2,
    /// Separates one point from the other three.
    L3,
    /// All four points on one side.
    NoIntersect,
}

pub fn classify_line_vs_quad(line: &PerturbedLine, quad: [usize; 4], ps: &PointSet) -> Result<LineType, PotentialError> {
    let q = crate::geometry::convex_quad_order(ps, quad).ok_or(PotentialError::NotConvex(quad))?;
    Ok(classify_ordered(line, q, ps))
}

fn classify_ordered(line: &PerturbedLine, q: [usize; 4], ps: &PointSet) -> LineType {
    let s = q.map(|x| line.adjusted_sign(ps, x));
    let positives = s.iter().filter(|&&v| v > 0).count();
    match positives {
        0 | 4 => LineType::NoIntersect,
        1 | 3 => LineType::L3,
        _ if s[0] == s[1] => LineType::L1,
        _ if s[1] == s[2] => LineType::L2,
        // The diagonals cross, so no line can separate q1, q3 from q2, q4.
        _ => unreachable!("a line separated the diagonals of a convex quadrilateral"),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineTypeCounts {
    pub l1: u64,
    pub l2: u64,
    pub l3: u64,
    pub no_intersect: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineAudit {
    pub line: PerturbedLine,
    pub line_type: LineType,
    /// Crossings with the two added segments minus crossings with the two removed ones.
    pub delta: i64,
}

/// Dry-run accounting of one flip's effect on both potentials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecrementAudit {
    pub crossing: CrossingPair,
    pub choice: FlipChoice,
    pub quad: [usize; 4],
    pub added: [Segment; 2],
    pub type_counts: LineTypeCounts,
    /// Lines meeting the hull of the quad, in enumeration order.
    pub lines: Vec<LineAudit>,
    pub phi_l_before: u64,
    pub phi_l_after: u64,
    pub delta_phi_l: i64,
    pub phi_k_before: Option<u64>,
    pub phi_k_after: Option<u64>,
    pub delta_phi_k: Option<i64>,
}

/// Computes both potentials before and after flipping `c` with `choice`
/// without applying the flip. Fails if any single line would gain crossings.
pub fn decrement_audit(
    ps: &PointSet,
    m: &Matching,
    c: &CrossingPair,
    choice: FlipChoice,
) -> Result<DecrementAudit, PotentialError> {
    let added = checked_reconnect(ps, m, c, choice)?;
    let quad = c.quad(ps)?;
    let removed = [c.e1, c.e2];
    let mut counts = LineTypeCounts::default();
    let mut lines = Vec::new();
    let mut delta_total = 0i64;
    for line in perturbed_lines(ps.len()) {
        let line_type = classify_ordered(&line, quad, ps);
        let before = removed.iter().filter(|&&s| crosses_perturbed_line(&line, s, ps)).count() as i64;
        let after = added.iter().filter(|&&s| crosses_perturbed_line(&line, s, ps)).count() as i64;
        let delta = after - before;
        if delta > 0 {
            return Err(PotentialError::LineCountIncreased { line, delta });
        }
        delta_total += delta;
        match line_type {
            LineType::L1 => counts.l1 += 1,
            LineType::L2 => counts.l2 += 1,
            LineType::L3 => counts.l3 += 1,
            LineType::NoIntersect => counts.no_intersect += 1,
        }
        if line_type != LineType::NoIntersect {
            lines.push(LineAudit { line, line_type, delta });
        }
    }
    let next = m.replace(removed, added);
    let phi_l_before = phi_lines(ps, m);
    let phi_l_after = phi_lines(ps, &next);
    debug_assert_eq!(phi_l_after as i64 - phi_l_before as i64, delta_total);
    let (phi_k_before, phi_k_after) = match (phi_vertical(ps, m), phi_vertical(ps, &next)) {
        (Ok(b), Ok(a)) => (Some(b), Some(a)),
        _ => (None, None),
    };
    Ok(DecrementAudit {
        crossing: *c,
        choice,
        quad,
        added,
        type_counts: counts,
        lines,
        phi_l_before,
        phi_l_after,
        delta_phi_l: delta_total,
        phi_k_before,
        phi_k_after,
        delta_phi_k: phi_k_before.zip(phi_k_after).map(|(b, a)| a as i64 - b as i64),
    })
}

/// Change of `phi_lines` caused by replacing `removed` with `added`,
/// evaluated on the four segments only.
pub fn phi_lines_delta(ps: &PointSet, removed: [Segment; 2], added: [Segment; 2]) -> i64 {
    let mut delta = 0i64;
    for line in perturbed_lines(ps.len()) {
        for s in added {
            delta += crosses_perturbed_line(&line, s, ps) as i64;
        }
        for s in removed {
            delta -= crosses_perturbed_line(&line, s, ps) as i64;
        }
    }
    delta
}

/// The x-greedy reconnection of a crossing: the two x-leftmost endpoints
/// paired together and the two x-rightmost paired together. Segments with
/// disjoint x-ranges cannot cross, so this is always one of the two choices.
pub fn x_greedy_choice(ps: &PointSet, c: &CrossingPair) -> Result<FlipChoice, PotentialError> {
    let mut pts = c.endpoints();
    pts.sort_by_key(|&i| ps.point(i).x);
    if let Some(w) = pts.windows(2).find(|w| ps.point(w[0]).x == ps.point(w[1]).x) {
        return Err(PotentialError::DuplicateX(w[0].min(w[1]), w[0].max(w[1])));
    }
    let left = Segment::new(pts[0], pts[1]).expect("distinct endpoints");
    for choice in FlipChoice::BOTH {
        let added = c.reconnect(ps, choice)?;
        if added.contains(&left) {
            return Ok(choice);
        }
    }
    Err(PotentialError::NotConvex(c.endpoints()))
}
