//! Exact predicates over integer coordinates.
//!
//! Every coordinate lies within [`COORD_BUDGET`] in absolute value, so the
//! orientation determinant `(q - p) x (r - p)` is bounded by `8 * 2^40` and
//! is evaluated exactly in `i64`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible absolute coordinate value (2^20).
pub const COORD_BUDGET: i64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("coordinate ({x}, {y}) of point {index} exceeds the budget of 2^20")]
    CoordinateOutOfBudget { index: usize, x: i64, y: i64 },
    #[error("a point set needs an even, positive number of points (got {0})")]
    BadPointCount(usize),
    #[error("segment endpoints must differ (both are {0})")]
    DegenerateSegment(usize),
    #[error("segments {0} and {1} share an endpoint")]
    SharedEndpoint(Segment, Segment),
    #[error("point index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("shearing would move point {index} to x = {x}, outside the coordinate budget")]
    ShearOverflow { index: usize, x: i64 },
}

/// A point of the ground set, carrying its index in the owning [`PointSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    pub x: i64,
    pub y: i64,
    pub id: usize,
}

impl Point {
    pub fn new(x: i64, y: i64, id: usize) -> Self {
        Point { x, y, id }
    }
}

/// Sign of the signed area of the triangle `(p, q, r)`: `+1` counterclockwise,
/// `-1` clockwise, `0` collinear.
#[inline]
pub fn orient(p: Point, q: Point, r: Point) -> i8 {
    let det = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    det.signum() as i8
}

/// The ground set: an even number of integer points within the coordinate
/// budget. General position is checked separately by
/// [`validate_general_position`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(coords: &[(i64, i64)]) -> Result<Self, GeometryError> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(GeometryError::BadPointCount(coords.len()));
        }
        let mut points = Vec::with_capacity(coords.len());
        for (index, &(x, y)) in coords.iter().enumerate() {
            if x.abs() > COORD_BUDGET || y.abs() > COORD_BUDGET {
                return Err(GeometryError::CoordinateOutOfBudget { index, x, y });
            }
            points.push(Point::new(x, y, index));
        }
        Ok(PointSet { points })
    }

    /// Number of points, `2n`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of segments in a perfect matching on this set, `n`.
    pub fn n(&self) -> usize {
        self.points.len() / 2
    }

    pub fn point(&self, index: usize) -> Point {
        self.points[index]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn coords(&self) -> Vec<(i64, i64)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }

    pub fn orient(&self, a: usize, b: usize, c: usize) -> i8 {
        orient(self.points[a], self.points[b], self.points[c])
    }

    /// True when all x-coordinates are pairwise distinct.
    pub fn has_distinct_x(&self) -> bool {
        let mut xs: Vec<i64> = self.points.iter().map(|p| p.x).collect();
        xs.sort_unstable();
        xs.windows(2).all(|w| w[0] != w[1])
    }

    /// Rank of every point in increasing x order (ties broken by y, then index).
    pub fn x_ranks(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| (self.points[i].x, self.points[i].y, i));
        let mut ranks = vec![0; self.len()];
        for (rank, &i) in order.iter().enumerate() {
            ranks[i] = rank;
        }
        ranks
    }
}

/// A segment between two point indices, normalized so that `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub a: usize,
    pub b: usize,
}

impl Segment {
    pub fn new(i: usize, j: usize) -> Result<Self, GeometryError> {
        if i == j {
            return Err(GeometryError::DegenerateSegment(i));
        }
        Ok(Segment {
            a: i.min(j),
            b: i.max(j),
        })
    }

    pub(crate) fn of(i: usize, j: usize) -> Self {
        debug_assert_ne!(i, j);
        Segment {
            a: i.min(j),
            b: i.max(j),
        }
    }

    pub fn shares_endpoint(&self, other: &Segment) -> bool {
        self.a == other.a || self.a == other.b || self.b == other.a || self.b == other.b
    }

    pub fn contains(&self, i: usize) -> bool {
        self.a == i || self.b == i
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// True iff the open segments `s` and `t` meet in exactly one interior point.
///
/// Under general position this is the strict straddle test in both
/// directions. Segments sharing an endpoint are rejected.
pub fn segments_properly_cross(s: Segment, t: Segment, ps: &PointSet) -> Result<bool, GeometryError> {
    if s.shares_endpoint(&t) {
        return Err(GeometryError::SharedEndpoint(s, t));
    }
    for i in [s.a, s.b, t.a, t.b] {
        if i >= ps.len() {
            return Err(GeometryError::IndexOutOfRange { index: i, len: ps.len() });
        }
    }
    Ok(cross_unchecked(s, t, ps))
}

#[inline]
pub(crate) fn cross_unchecked(s: Segment, t: Segment, ps: &PointSet) -> bool {
    ps.orient(s.a, s.b, t.a) * ps.orient(s.a, s.b, t.b) < 0
        && ps.orient(t.a, t.b, s.a) * ps.orient(t.a, t.b, s.b) < 0
}

/// First general-position violation found in lexicographic index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("points {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("points {0}, {1}, {2} are collinear")]
    Collinear(usize, usize, usize),
}

/// Checks that all points are distinct and no three are collinear.
///
/// Duplicates are reported before collinear triples, since a duplicated
/// point makes every triple through it degenerate.
pub fn validate_general_position(ps: &PointSet) -> Result<(), Violation> {
    let pts = ps.points();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[i].x == pts[j].x && pts[i].y == pts[j].y {
                return Err(Violation::Duplicate(i, j));
            }
        }
    }
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            for k in j + 1..pts.len() {
                if orient(pts[i], pts[j], pts[k]) == 0 {
                    return Err(Violation::Collinear(i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// Makes all x-coordinates distinct with the shear `(x, y) -> (x*C + y, y)`,
/// `C = 1 + 2 * max|y|`. The shear has determinant `C > 0`, so every
/// orientation sign, and hence every crossing and flip, is preserved.
/// Sets whose x-coordinates are already distinct are returned unchanged.
pub fn shear_to_distinct_x(ps: &PointSet) -> Result<PointSet, GeometryError> {
    if ps.has_distinct_x() {
        return Ok(ps.clone());
    }
    let max_y = ps.points().iter().map(|p| p.y.abs()).max().unwrap_or(0);
    let c = 1 + 2 * max_y;
    let mut coords = Vec::with_capacity(ps.len());
    for p in ps.points() {
        let x = p.x * c + p.y;
        if x.abs() > COORD_BUDGET {
            return Err(GeometryError::ShearOverflow { index: p.id, x });
        }
        coords.push((x, p.y));
    }
    PointSet::new(&coords)
}

/// Given four point indices, returns them in counterclockwise convex order
/// starting from the smallest index, or `None` if they are not in strictly
/// convex position.
pub fn convex_quad_order(ps: &PointSet, quad: [usize; 4]) -> Option<[usize; 4]> {
    let mut q = quad;
    q.sort_unstable();
    if q.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let q1 = q[0];
    // Exactly one of the three ways to split the quad into two segments
    // yields crossing diagonals when the quad is strictly convex.
    let rest = [q[1], q[2], q[3]];
    let mut diagonal = None;
    for k in 0..3 {
        let opposite = rest[k];
        let (u, v) = match k {
            0 => (rest[1], rest[2]),
            1 => (rest[0], rest[2]),
            _ => (rest[0], rest[1]),
        };
        if cross_unchecked(Segment::of(q1, opposite), Segment::of(u, v), ps) {
            if diagonal.is_some() {
                return None;
            }
            diagonal = Some((opposite, u, v));
        }
    }
    let (q3, u, v) = diagonal?;
    // q2 is the vertex to the right of the directed diagonal q1 -> q3.
    let (q2, q4) = if ps.orient(q1, q3, u) < 0 { (u, v) } else { (v, u) };
    Some([q1, q2, q3, q4])
}
