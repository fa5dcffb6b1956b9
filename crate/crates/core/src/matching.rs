//! Matchings, crossing detection and the flip operation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{convex_quad_order, cross_unchecked, PointSet, Segment};
use crate::potentials::{phi_lines, phi_vertical};

/// Relative tolerance of the total-length monitor.
pub const LENGTH_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("matching on {points} points is not perfect: {reason}")]
    NotPerfect { points: usize, reason: String },
    #[error("crossing {0} is not present in the current matching")]
    StaleCrossing(CrossingPair),
    #[error("segments of {0} do not cross")]
    NotCrossing(CrossingPair),
    #[error("replay failed at step {step}")]
    Replay {
        step: usize,
        #[source]
        source: Box<EngineError>,
    },
    #[error("record at step {step} claims {claimed:?} but the flip produces {actual:?}")]
    RecordMismatch {
        step: usize,
        claimed: (Segment, Segment),
        actual: (Segment, Segment),
    },
}

/// A perfect matching in canonical form: every pair is `(min, max)` and the
/// list is sorted, so equal pairings compare and hash equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    pairs: Vec<Segment>,
}

impl Matching {
    /// Builds a matching over `num_points` points from arbitrary index pairs.
    pub fn new(num_points: usize, pairs: &[(usize, usize)]) -> Result<Self, EngineError> {
        let not_perfect = |reason: String| EngineError::NotPerfect { points: num_points, reason };
        if !num_points.is_multiple_of(2) || pairs.len() * 2 != num_points {
            return Err(not_perfect(format!("expected {} pairs, got {}", num_points / 2, pairs.len())));
        }
        let mut seen = vec![false; num_points];
        let mut segs = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            for k in [i, j] {
                if k >= num_points {
                    return Err(not_perfect(format!("index {k} out of range")));
                }
                if seen[k] {
                    return Err(not_perfect(format!("point {k} matched twice")));
                }
                seen[k] = true;
            }
            segs.push(Segment::new(i, j).map_err(|e| not_perfect(e.to_string()))?);
        }
        segs.sort_unstable();
        Ok(Matching { pairs: segs })
    }

    pub(crate) fn from_sorted(pairs: Vec<Segment>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        Matching { pairs }
    }

    pub fn pairs(&self) -> &[Segment] {
        &self.pairs
    }

    /// Number of segments, `n`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn num_points(&self) -> usize {
        self.pairs.len() * 2
    }

    pub fn contains(&self, s: Segment) -> bool {
        self.pairs.binary_search(&s).is_ok()
    }

    /// Partner of every point.
    pub fn partners(&self) -> Vec<usize> {
        let mut partner = vec![0; self.num_points()];
        for s in &self.pairs {
            partner[s.a] = s.b;
            partner[s.b] = s.a;
        }
        partner
    }

    pub fn as_index_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|s| (s.a, s.b)).collect()
    }

    /// Copy of `self` with `removed` replaced by `added`.
    pub(crate) fn replace(&self, removed: [Segment; 2], added: [Segment; 2]) -> Matching {
        let mut pairs: Vec<Segment> = self
            .pairs
            .iter()
            .copied()
            .filter(|s| *s != removed[0] && *s != removed[1])
            .collect();
        pairs.extend_from_slice(&added);
        pairs.sort_unstable();
        Matching { pairs }
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs.iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Two properly crossing segments of a matching, with `e1 < e2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrossingPair {
    pub e1: Segment,
    pub e2: Segment,
}

impl CrossingPair {
    /// Orders the two segments; does not check that they cross.
    pub fn new(s: Segment, t: Segment) -> Self {
        if s <= t {
            CrossingPair { e1: s, e2: t }
        } else {
            CrossingPair { e1: t, e2: s }
        }
    }

    pub fn endpoints(&self) -> [usize; 4] {
        [self.e1.a, self.e1.b, self.e2.a, self.e2.b]
    }

    /// The four endpoints in counterclockwise order from the smallest index.
    pub fn quad(&self, ps: &PointSet) -> Result<[usize; 4], EngineError> {
        convex_quad_order(ps, self.endpoints()).ok_or(EngineError::NotCrossing(*self))
    }

    /// The two segments produced by `choice`.
    pub fn reconnect(&self, ps: &PointSet, choice: FlipChoice) -> Result<[Segment; 2], EngineError> {
        let [q1, q2, q3, q4] = self.quad(ps)?;
        let mut out = match choice {
            FlipChoice::ReconnectA => [Segment::of(q1, q2), Segment::of(q3, q4)],
            FlipChoice::ReconnectB => [Segment::of(q2, q3), Segment::of(q4, q1)],
        };
        out.sort_unstable();
        Ok(out)
    }
}

impl fmt::Display for CrossingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x {}", self.e1, self.e2)
    }
}

/// Which pair of opposite sides of the crossing quadrilateral replaces the
/// diagonals. With the endpoints labeled `q1..q4` counterclockwise from the
/// smallest index, `ReconnectA` adds `q1q2, q3q4` and `ReconnectB` adds
/// `q2q3, q4q1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlipChoice {
    ReconnectA,
    ReconnectB,
}

impl FlipChoice {
    pub const BOTH: [FlipChoice; 2] = [FlipChoice::ReconnectA, FlipChoice::ReconnectB];

    pub fn label(self) -> &'static str {
        match self {
            FlipChoice::ReconnectA => "A",
            FlipChoice::ReconnectB => "B",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "A" | "a" => Some(FlipChoice::ReconnectA),
            "B" | "b" => Some(FlipChoice::ReconnectB),
            _ => None,
        }
    }
}

/// Which potentials a flip should record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Instrumentation {
    pub phi_lines: bool,
    pub phi_vertical: bool,
}

impl Instrumentation {
    pub const NONE: Instrumentation = Instrumentation { phi_lines: false, phi_vertical: false };
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipRecord {
    pub crossing: CrossingPair,
    pub choice: FlipChoice,
    pub new_e1: Segment,
    pub new_e2: Segment,
    pub length_before: f64,
    pub length_after: f64,
    pub phi_l_before: Option<u64>,
    pub phi_l_after: Option<u64>,
    pub phi_k_before: Option<u64>,
    pub phi_k_after: Option<u64>,
}

/// An ordered sequence of flips from `initial` to `final_matching`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipTrace {
    pub instance_id: String,
    pub initial: Matching,
    pub records: Vec<FlipRecord>,
    pub final_matching: Matching,
}

impl FlipTrace {
    pub fn empty(instance_id: impl Into<String>, initial: Matching) -> Self {
        FlipTrace {
            instance_id: instance_id.into(),
            final_matching: initial.clone(),
            initial,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All matchings visited, `initial` first.
    pub fn matchings(&self, ps: &PointSet) -> Result<Vec<Matching>, EngineError> {
        let mut out = vec![self.initial.clone()];
        let mut current = self.initial.clone();
        for (step, r) in self.records.iter().enumerate() {
            current = apply_record(ps, &current, r).map_err(|e| wrap_step(step + 1, e))?;
            out.push(current.clone());
        }
        Ok(out)
    }
}

/// All properly crossing segment pairs of `m`, sorted.
pub fn find_crossings(ps: &PointSet, m: &Matching) -> Vec<CrossingPair> {
    let pairs = m.pairs();
    let mut out = Vec::new();
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if cross_unchecked(pairs[i], pairs[j], ps) {
                out.push(CrossingPair { e1: pairs[i], e2: pairs[j] });
            }
        }
    }
    out
}

pub fn crossing_count(ps: &PointSet, m: &Matching) -> usize {
    let pairs = m.pairs();
    let mut count = 0;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if cross_unchecked(pairs[i], pairs[j], ps) {
                count += 1;
            }
        }
    }
    count
}

pub fn is_noncrossing(ps: &PointSet, m: &Matching) -> bool {
    let pairs = m.pairs();
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if cross_unchecked(pairs[i], pairs[j], ps) {
                return false;
            }
        }
    }
    true
}

fn segment_length(ps: &PointSet, s: Segment) -> f64 {
    let (p, q) = (ps.point(s.a), ps.point(s.b));
    ((q.x - p.x) as f64).hypot((q.y - p.y) as f64)
}

/// Sum of Euclidean segment lengths. A monitor only; never used for control flow.
pub fn total_length(ps: &PointSet, m: &Matching) -> f64 {
    m.pairs().iter().map(|&s| segment_length(ps, s)).sum()
}

/// Checks that `c` is live in `m` and returns the segments `choice` adds.
pub(crate) fn checked_reconnect(
    ps: &PointSet,
    m: &Matching,
    c: &CrossingPair,
    choice: FlipChoice,
) -> Result<[Segment; 2], EngineError> {
    if !m.contains(c.e1) || !m.contains(c.e2) {
        return Err(EngineError::StaleCrossing(*c));
    }
    if c.e1.shares_endpoint(&c.e2) || !cross_unchecked(c.e1, c.e2, ps) {
        return Err(EngineError::NotCrossing(*c));
    }
    c.reconnect(ps, choice)
}

/// Successor of `m` without building a record; the hot path for searches.
pub fn successor(ps: &PointSet, m: &Matching, c: &CrossingPair, choice: FlipChoice) -> Result<Matching, EngineError> {
    let added = checked_reconnect(ps, m, c, choice)?;
    Ok(m.replace([c.e1, c.e2], added))
}

/// Flips crossing `c` of `m` using `choice`.
pub fn flip(ps: &PointSet, m: &Matching, c: &CrossingPair, choice: FlipChoice) -> Result<(Matching, FlipRecord), EngineError> {
    flip_instrumented(ps, m, c, choice, Instrumentation::NONE)
}

/// Like [`flip`], additionally recording the requested potentials.
/// `phi_vertical` is silently skipped when the x-coordinates are not distinct.
pub fn flip_instrumented(
    ps: &PointSet,
    m: &Matching,
    c: &CrossingPair,
    choice: FlipChoice,
    instr: Instrumentation,
) -> Result<(Matching, FlipRecord), EngineError> {
    let added = checked_reconnect(ps, m, c, choice)?;
    let next = m.replace([c.e1, c.e2], added);
    let length_before = total_length(ps, m);
    let length_after = total_length(ps, &next);
    let (phi_l_before, phi_l_after) = if instr.phi_lines {
        (Some(phi_lines(ps, m)), Some(phi_lines(ps, &next)))
    } else {
        (None, None)
    };
    let (phi_k_before, phi_k_after) = if instr.phi_vertical {
        (phi_vertical(ps, m).ok(), phi_vertical(ps, &next).ok())
    } else {
        (None, None)
    };
    let record = FlipRecord {
        crossing: *c,
        choice,
        new_e1: added[0],
        new_e2: added[1],
        length_before,
        length_after,
        phi_l_before,
        phi_l_after,
        phi_k_before,
        phi_k_after,
    };
    Ok((next, record))
}

fn wrap_step(step: usize, e: EngineError) -> EngineError {
    match e {
        e @ EngineError::RecordMismatch { .. } => e,
        e => EngineError::Replay { step, source: Box::new(e) },
    }
}

fn apply_record(ps: &PointSet, m: &Matching, r: &FlipRecord) -> Result<Matching, EngineError> {
    let added = checked_reconnect(ps, m, &r.crossing, r.choice)?;
    if added != [r.new_e1, r.new_e2] {
        return Err(EngineError::RecordMismatch {
            step: 0,
            claimed: (r.new_e1, r.new_e2),
            actual: (added[0], added[1]),
        });
    }
    Ok(m.replace([r.crossing.e1, r.crossing.e2], added))
}

/// Applies `records` in order starting from `initial`. Steps are reported 1-based.
pub fn replay(ps: &PointSet, initial: &Matching, records: &[FlipRecord]) -> Result<Matching, EngineError> {
    let mut current = initial.clone();
    for (i, r) in records.iter().enumerate() {
        current = apply_record(ps, &current, r).map_err(|e| match e {
            EngineError::RecordMismatch { claimed, actual, .. } => EngineError::RecordMismatch { step: i + 1, claimed, actual },
            e => wrap_step(i + 1, e),
        })?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn reappear() -> PointSet {
        PointSet::new(&[(0, 8), (10, 0), (10, 20), (20, 0), (20, 20), (30, 8)]).unwrap()
    }

    fn square() -> PointSet {
        PointSet::new(&[(0, 0), (2, 0), (2, 2), (0, 2)]).unwrap()
    }

    fn seg(a: usize, b: usize) -> Segment {
        Segment::new(a, b).unwrap()
    }

    #[test]
    fn canonical_form() {
        let m = Matching::new(4, &[(3, 1), (2, 0)]).unwrap();
        assert_eq!(m.pairs(), &[seg(0, 2), seg(1, 3)]);
        assert_eq!(m, Matching::new(4, &[(0, 2), (1, 3)]).unwrap());
        assert!(Matching::new(4, &[(0, 1), (1, 2)]).is_err());
        assert!(Matching::new(4, &[(0, 1)]).is_err());
        assert!(Matching::new(4, &[(0, 1), (2, 4)]).is_err());
        assert!(Matching::new(4, &[(0, 0), (2, 3)]).is_err());
    }

    #[test]
    fn reappear_has_three_crossings() {
        let ps = reappear();
        let m0 = Matching::new(6, &[(0, 5), (1, 4), (2, 3)]).unwrap();
        let c = find_crossings(&ps, &m0);
        assert_eq!(
            c,
            vec![
                CrossingPair::new(seg(0, 5), seg(1, 4)),
                CrossingPair::new(seg(0, 5), seg(2, 3)),
                CrossingPair::new(seg(1, 4), seg(2, 3)),
            ]
        );
        assert!(!is_noncrossing(&ps, &m0));
        let last = Matching::new(6, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        assert!(is_noncrossing(&ps, &last));
    }

    #[test]
    fn single_segment_is_noncrossing() {
        let ps = PointSet::new(&[(0, 0), (3, 4)]).unwrap();
        let m = Matching::new(2, &[(0, 1)]).unwrap();
        assert!(is_noncrossing(&ps, &m));
        assert_eq!(total_length(&ps, &m), 5.0);
    }

    #[test]
    fn square_flip_both_choices() {
        let ps = square();
        let m = Matching::new(4, &[(0, 2), (1, 3)]).unwrap();
        assert!((total_length(&ps, &m) - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        let c = find_crossings(&ps, &m)[0];
        let (a, rec) = flip(&ps, &m, &c, FlipChoice::ReconnectA).unwrap();
        assert_eq!(a, Matching::new(4, &[(0, 1), (2, 3)]).unwrap());
        assert_eq!(rec.length_after, 4.0);
        assert!(rec.length_after < rec.length_before);
        let (b, _) = flip(&ps, &m, &c, FlipChoice::ReconnectB).unwrap();
        assert_eq!(b, Matching::new(4, &[(1, 2), (0, 3)]).unwrap());
        assert!(is_noncrossing(&ps, &a) && is_noncrossing(&ps, &b));
    }

    #[test]
    fn reappear_first_flip() {
        let ps = reappear();
        let m0 = Matching::new(6, &[(0, 5), (1, 4), (2, 3)]).unwrap();
        let c = CrossingPair::new(seg(1, 4), seg(2, 3));
        let (m1, _) = flip(&ps, &m0, &c, FlipChoice::ReconnectB).unwrap();
        assert_eq!(m1, Matching::new(6, &[(0, 5), (1, 2), (3, 4)]).unwrap());
        let (other, _) = flip(&ps, &m0, &c, FlipChoice::ReconnectA).unwrap();
        assert_eq!(other, Matching::new(6, &[(0, 5), (1, 3), (2, 4)]).unwrap());
        assert!(!segments_cross(&ps, seg(1, 3), seg(2, 4)));
    }

    fn segments_cross(ps: &PointSet, s: Segment, t: Segment) -> bool {
        crate::geometry::segments_properly_cross(s, t, ps).unwrap()
    }

    #[test]
    fn stale_and_corrupt_crossings() {
        let ps = square();
        let m = Matching::new(4, &[(0, 1), (2, 3)]).unwrap();
        let c = CrossingPair::new(seg(0, 2), seg(1, 3));
        assert_eq!(flip(&ps, &m, &c, FlipChoice::ReconnectA).unwrap_err(), EngineError::StaleCrossing(c));
        let c = CrossingPair::new(seg(0, 1), seg(2, 3));
        assert_eq!(flip(&ps, &m, &c, FlipChoice::ReconnectA).unwrap_err(), EngineError::NotCrossing(c));
    }

    #[test]
    fn replay_reappear_script() {
        let ps = reappear();
        let m0 = Matching::new(6, &[(0, 5), (1, 4), (2, 3)]).unwrap();
        assert_eq!(replay(&ps, &m0, &[]).unwrap(), m0);

        let (m1, r1) = flip(&ps, &m0, &CrossingPair::new(seg(1, 4), seg(2, 3)), FlipChoice::ReconnectB).unwrap();
        let (m2, r2) = flip(&ps, &m1, &CrossingPair::new(seg(0, 5), seg(1, 2)), FlipChoice::ReconnectA).unwrap();
        assert_eq!(m2, Matching::new(6, &[(0, 1), (2, 5), (3, 4)]).unwrap());
        let (m3, r3) = flip(&ps, &m2, &CrossingPair::new(seg(2, 5), seg(3, 4)), FlipChoice::ReconnectA).unwrap();
        assert_eq!(m3, Matching::new(6, &[(0, 1), (2, 3), (4, 5)]).unwrap());

        let records = vec![r1, r2, r3];
        assert_eq!(replay(&ps, &m0, &records).unwrap(), m3);
        let a = seg(2, 3);
        assert!(m0.contains(a) && !m1.contains(a) && !m2.contains(a) && m3.contains(a));

        // Replaying out of order hits a stale crossing at step 1.
        let err = replay(&ps, &m0, &records[1..]).unwrap_err();
        assert!(matches!(err, EngineError::Replay { step: 1, .. }));
    }

    #[test]
    fn replay_detects_doctored_record() {
        let ps = square();
        let m = Matching::new(4, &[(0, 2), (1, 3)]).unwrap();
        let c = find_crossings(&ps, &m)[0];
        let (_, mut rec) = flip(&ps, &m, &c, FlipChoice::ReconnectA).unwrap();
        rec.new_e1 = seg(1, 2);
        assert!(matches!(replay(&ps, &m, &[rec]), Err(EngineError::RecordMismatch { step: 1, .. })));
    }

    #[test]
    fn instrumented_flip_records_potentials() {
        let ps = PointSet::new(&[(0, 0), (10, 1), (20, 11), (1, 10)]).unwrap();
        let m = Matching::new(4, &[(0, 2), (1, 3)]).unwrap();
        let c = find_crossings(&ps, &m)[0];
        let instr = Instrumentation { phi_lines: true, phi_vertical: true };
        let (_, rec) = flip_instrumented(&ps, &m, &c, FlipChoice::ReconnectA, instr).unwrap();
        assert!(rec.phi_l_after.unwrap() + 4 <= rec.phi_l_before.unwrap());
        assert!(rec.phi_k_after.unwrap() <= rec.phi_k_before.unwrap());
        let (_, plain) = flip(&ps, &m, &c, FlipChoice::ReconnectA).unwrap();
        assert_eq!(plain.phi_l_before, None);
    }

    fn all_pairings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if points.is_empty() {
            return vec![vec![]];
        }
        let first = points[0];
        let mut out = Vec::new();
        for k in 1..points.len() {
            let rest: Vec<usize> = points[1..].iter().copied().filter(|&p| p != points[k]).collect();
            for mut tail in all_pairings(&rest) {
                // Emit pairs in a scrambled order to exercise canonicalization.
                tail.insert(0, (points[k], first));
                tail.reverse();
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn canonical_form_is_injective_up_to_n4() {
        for n in 1..=4 {
            let pts: Vec<usize> = (0..2 * n).collect();
            let pairings = all_pairings(&pts);
            let keys: HashSet<String> = pairings
                .iter()
                .map(|p| Matching::new(2 * n, p).unwrap().to_string())
                .collect();
            assert_eq!(keys.len(), pairings.len());
        }
    }
}
