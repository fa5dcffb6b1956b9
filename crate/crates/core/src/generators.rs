//! Instance constructions: the two-line permutation family, the convex
//! decomposition family, and seeded random instances.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{validate_general_position, GeometryError, PointSet, Violation, COORD_BUDGET};
use crate::matching::{crossing_count, EngineError, Matching};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("instance needs n >= 1")]
    Empty,
    #[error("not a permutation: {0}")]
    BadPermutation(String),
    #[error("construction for n = {n} exceeds the coordinate budget")]
    Overflow { n: usize },
    #[error("point set is not in general position: {0}")]
    NotGeneralPosition(Violation),
    #[error("two-line instance has {crossings} crossings but the permutation has {inversions} inversions")]
    CrossingMismatch { crossings: usize, inversions: usize },
    #[error("convex construction for n = {n} failed after {attempts} attempts (last failure at points {triple:?})")]
    ConvexFailed { n: usize, attempts: usize, triple: (usize, usize, usize) },
    #[error("could not place point {placed} of {wanted} in general position within the rejection budget")]
    RejectionBudget { placed: usize, wanted: usize },
    #[error("invalid bounding box {0}")]
    BadBBox(BBox),
    #[error("unrecognized provenance {0:?}")]
    BadProvenance(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A permutation of `0..n`, stored as its list of images.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, GeneratorError> {
        let mut seen = vec![false; images.len()];
        for &v in &images {
            if v >= images.len() || seen[v] {
                return Err(GeneratorError::BadPermutation(format!("{images:?}")));
            }
            seen[v] = true;
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn reverse(n: usize) -> Self {
        Permutation((0..n).rev().collect())
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inversions(&self) -> usize {
        let p = &self.0;
        (0..p.len()).map(|i| (i + 1..p.len()).filter(|&j| p[i] > p[j]).count()).sum()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Permutation {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let images = s
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| GeneratorError::BadPermutation(s.to_string()))?;
        Permutation::new(images)
    }
}

/// Inclusive integer bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub min_x: i64,
    pub min_y: i64,
    pub max_x: i64,
    pub max_y: i64,
}

impl BBox {
    pub fn square(lo: i64, hi: i64) -> Self {
        BBox { min_x: lo, min_y: lo, max_x: hi, max_y: hi }
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.min_x, self.min_y, self.max_x, self.max_y)
    }
}

impl FromStr for BBox {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeneratorError::BadProvenance(format!("bbox {s}"));
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        match v[..] {
            [min_x, min_y, max_x, max_y] => Ok(BBox { min_x, min_y, max_x, max_y }),
            _ => Err(bad()),
        }
    }
}

/// Where an instance came from. The string form is stored in instance files.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    TwoLine(Permutation),
    Convex(usize),
    Random { seed: u64, bbox: BBox },
    /// Hand-built fixtures and files of unknown origin.
    Custom(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::TwoLine(p) => write!(f, "two-line:{p}"),
            Provenance::Convex(n) => write!(f, "convex:{n}"),
            Provenance::Random { seed, bbox } => write!(f, "random:seed={seed};bbox={bbox}"),
            Provenance::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeneratorError::BadProvenance(s.to_string());
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "two-line" => Ok(Provenance::TwoLine(rest.parse()?)),
            "convex" => rest.parse().map(Provenance::Convex).map_err(|_| bad()),
            "random" => {
                let (seed, bbox) = rest.split_once(';').ok_or_else(bad)?;
                let seed = seed.strip_prefix("seed=").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
                let bbox = bbox.strip_prefix("bbox=").ok_or_else(bad)?.parse()?;
                Ok(Provenance::Random { seed, bbox })
            }
            "custom" => Ok(Provenance::Custom(rest.to_string())),
            _ => Err(bad()),
        }
    }
}

/// A point set with a perfect matching on it, in general position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub points: PointSet,
    pub matching: Matching,
    pub provenance: Provenance,
    pub notes: String,
}

impl Instance {
    pub fn new(points: PointSet, matching: Matching, provenance: Provenance, notes: impl Into<String>) -> Result<Self, GeneratorError> {
        if matching.num_points() != points.len() {
            return Err(EngineError::NotPerfect {
                points: points.len(),
                reason: format!("matching covers {} points", matching.num_points()),
            }
            .into());
        }
        validate_general_position(&points).map_err(GeneratorError::NotGeneralPosition)?;
        Ok(Instance { points, matching, provenance, notes: notes.into() })
    }

    pub fn n(&self) -> usize {
        self.matching.len()
    }

    pub fn id(&self) -> String {
        self.provenance.to_string()
    }

    /// Same instance with a different starting matching.
    pub fn with_matching(&self, matching: Matching) -> Instance {
        assert_eq!(matching.num_points(), self.points.len());
        Instance { matching, ..self.clone() }
    }
}

/// Two opposing shallow parabolic arcs: bottom point `i` at `(4n*i, i^2)`,
/// top point `j` at `(4n*j + 2n, 32n^2 - j^2)`. Bottom points are indices
/// `0..n`, top points `n..2n`, and bottom `i` is matched to top `pi(i)`.
///
/// A line through two points of one arc stays within `3n^2` of that arc's
/// baseline over the strip, far from the other arc, so the only collinear
/// triples could come from a single parabola, which has none.
pub fn gen_two_line(pi: &Permutation) -> Result<Instance, GeneratorError> {
    let n = pi.len();
    if n == 0 {
        return Err(GeneratorError::Empty);
    }
    let n_i = n as i64;
    let spacing = 4 * n_i;
    let height = n_i
        .checked_mul(8 * spacing)
        .filter(|&d| d <= COORD_BUDGET && spacing * n_i <= COORD_BUDGET)
        .ok_or(GeneratorError::Overflow { n })?;
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n_i {
        coords.push((spacing * i, i * i));
    }
    for j in 0..n_i {
        coords.push((spacing * j + spacing / 2, height - j * j));
    }
    let points = PointSet::new(&coords)?;
    let pairs: Vec<(usize, usize)> = pi.images().iter().enumerate().map(|(i, &j)| (i, n + j)).collect();
    let matching = Matching::new(2 * n, &pairs)?;
    let inst = Instance::new(points, matching, Provenance::TwoLine(pi.clone()), "")?;
    let crossings = crossing_count(&inst.points, &inst.matching);
    if crossings != pi.inversions() {
        return Err(GeneratorError::CrossingMismatch { crossings, inversions: pi.inversions() });
    }
    Ok(inst)
}

const CONVEX_RADIUS: f64 = 65536.0;
const CONVEX_ATTEMPTS: usize = 32;

/// `2n` points on a snapped circle of radius `2^16`, counterclockwise, with
/// the diameter `p_1 p_{n+1}` and the chords `p_i p_{2n+2-i}` for `i` in
/// `2..=n`, all perpendicular to it. Point `p_k` has index `k - 1`.
pub fn gen_convex(n: usize) -> Result<Instance, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::Empty);
    }
    let total = 2 * n;
    let step = 2.0 * PI / total as f64;
    let mut last_failure = (0, 0, 0);
    for attempt in 0..CONVEX_ATTEMPTS {
        // A slight rotation keeps symmetric points off a shared vertical line.
        let offset = step * (0.1 + 0.37 * attempt as f64 / CONVEX_ATTEMPTS as f64);
        let coords: Vec<(i64, i64)> = (0..total)
            .map(|k| {
                let theta = offset + step * k as f64;
                ((CONVEX_RADIUS * theta.cos()).round() as i64, (CONVEX_RADIUS * theta.sin()).round() as i64)
            })
            .collect();
        let points = PointSet::new(&coords)?;
        match strict_convex_violation(&points) {
            Some(t) => {
                last_failure = t;
                continue;
            }
            None if !points.has_distinct_x() => continue,
            None => {}
        }
        let mut pairs = vec![(0, n)];
        pairs.extend((2..=n).map(|i| (i - 1, total + 1 - i)));
        let matching = Matching::new(total, &pairs)?;
        return Instance::new(points, matching, Provenance::Convex(n), "");
    }
    Err(GeneratorError::ConvexFailed { n, attempts: CONVEX_ATTEMPTS, triple: last_failure })
}

/// First `(k, k+1, j)` with `p_j` not strictly left of edge `p_k p_{k+1}`.
fn strict_convex_violation(ps: &PointSet) -> Option<(usize, usize, usize)> {
    let m = ps.len();
    if m < 3 {
        return if m == 2 && ps.point(0) == ps.point(1) { Some((0, 1, 1)) } else { None };
    }
    for k in 0..m {
        let k1 = (k + 1) % m;
        for j in 0..m {
            if j != k && j != k1 && ps.orient(k, k1, j) <= 0 {
                return Some((k, k1, j));
            }
        }
    }
    None
}

/// Attempts per point before giving up.
const REJECTION_ATTEMPTS: usize = 10_000;

/// `2n` uniform lattice points in `bbox`, each rejected while it would
/// duplicate a point or form a collinear triple, then a uniformly shuffled
/// pairing. Deterministic in `seed`.
pub fn gen_random(n: usize, seed: u64, bbox: BBox) -> Result<Instance, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::Empty);
    }
    if bbox.min_x > bbox.max_x
        || bbox.min_y > bbox.max_y
        || [bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y].iter().any(|v| v.abs() > COORD_BUDGET)
    {
        return Err(GeneratorError::BadBBox(bbox));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 2 * n;
    let mut coords: Vec<(i64, i64)> = Vec::with_capacity(total);
    while coords.len() < total {
        let mut placed = false;
        for _ in 0..REJECTION_ATTEMPTS {
            let c = (rng.gen_range(bbox.min_x..=bbox.max_x), rng.gen_range(bbox.min_y..=bbox.max_y));
            if admissible(&coords, c) {
                coords.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(GeneratorError::RejectionBudget { placed: coords.len(), wanted: total });
        }
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let pairs: Vec<(usize, usize)> = order.chunks(2).map(|c| (c[0], c[1])).collect();
    let points = PointSet::new(&coords)?;
    let matching = Matching::new(total, &pairs)?;
    Instance::new(points, matching, Provenance::Random { seed, bbox }, "")
}

fn admissible(existing: &[(i64, i64)], c: (i64, i64)) -> bool {
    for (i, &a) in existing.iter().enumerate() {
        if a == c {
            return false;
        }
        for &b in &existing[i + 1..] {
            if (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0) == 0 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::is_noncrossing;

    #[test]
    fn permutation_basics() {
        assert_eq!(Permutation::reverse(3).images(), &[2, 1, 0]);
        assert_eq!(Permutation::reverse(5).inversions(), 10);
        assert_eq!("1,2,0".parse::<Permutation>().unwrap().inversions(), 2);
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!("0,3".parse::<Permutation>().is_err());
        assert_eq!(Permutation::reverse(4).to_string(), "3,2,1,0");
    }

    #[test]
    fn two_line_examples() {
        let id = gen_two_line(&Permutation::identity(3)).unwrap();
        assert!(is_noncrossing(&id.points, &id.matching));
        let rev = gen_two_line(&Permutation::reverse(3)).unwrap();
        assert_eq!(crossing_count(&rev.points, &rev.matching), 3);
        // The 3-cycle 0 -> 1 -> 2 -> 0.
        let cycle = gen_two_line(&"1,2,0".parse().unwrap()).unwrap();
        assert_eq!(crossing_count(&cycle.points, &cycle.matching), 2);
        assert!(rev.points.has_distinct_x());
        assert!(matches!(gen_two_line(&Permutation::identity(0)), Err(GeneratorError::Empty)));
    }

    #[test]
    fn two_line_budget() {
        assert!(gen_two_line(&Permutation::identity(181)).is_ok());
        assert!(matches!(gen_two_line(&Permutation::identity(182)), Err(GeneratorError::Overflow { n: 182 })));
    }

    #[test]
    fn convex_examples() {
        let one = gen_convex(1).unwrap();
        assert_eq!(crossing_count(&one.points, &one.matching), 0);
        let four = gen_convex(4).unwrap();
        assert_eq!(crossing_count(&four.points, &four.matching), 3);
        assert_eq!(
            four.matching,
            Matching::new(8, &[(0, 4), (1, 7), (2, 6), (3, 5)]).unwrap()
        );
        let six = gen_convex(6).unwrap();
        assert_eq!(six.points.len(), 12);
        assert!(six.points.has_distinct_x());
        assert!(strict_convex_violation(&six.points).is_none());
    }

    #[test]
    fn random_is_deterministic() {
        let a = gen_random(3, 7, BBox::square(0, 100)).unwrap();
        let b = gen_random(3, 7, BBox::square(0, 100)).unwrap();
        assert_eq!(a, b);
        let c = gen_random(3, 8, BBox::square(0, 100)).unwrap();
        assert_ne!(a.points, c.points);
        assert!(gen_random(1, 99, BBox::square(0, 100)).is_ok());
    }

    #[test]
    fn random_rejection_budget() {
        let err = gen_random(3, 1, BBox::square(0, 1)).unwrap_err();
        assert!(matches!(err, GeneratorError::RejectionBudget { wanted: 6, .. }));
        assert!(matches!(gen_random(2, 1, BBox::square(5, 0)), Err(GeneratorError::BadBBox(_))));
    }

    #[test]
    fn provenance_round_trip() {
        for p in [
            Provenance::TwoLine(Permutation::reverse(4)),
            Provenance::Convex(6),
            Provenance::Random { seed: 7, bbox: BBox::square(0, 100) },
            Provenance::Custom("reappear".into()),
        ] {
            assert_eq!(p.to_string().parse::<Provenance>().unwrap(), p);
        }
        assert!("bogus:1".parse::<Provenance>().is_err());
    }
}
