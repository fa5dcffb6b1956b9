#![allow(dead_code)]

use flipmatch::format::instance_from_json;
use flipmatch::search::{successors, MatchingValues};
use flipmatch::{gen_random, is_noncrossing, shear_to_distinct_x, BBox, Instance, Matching, PointSet, Provenance};

pub fn fixture(name: &str) -> Instance {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    instance_from_json(&std::fs::read_to_string(&path).expect("fixture exists")).expect("fixture is valid")
}

/// Random instance sheared to distinct x, so both potentials are defined.
pub fn sheared_random(n: usize, seed: u64) -> Instance {
    let inst = gen_random(n, seed, BBox::square(0, 500)).expect("random instance");
    let points = shear_to_distinct_x(&inst.points).expect("shear stays in budget");
    Instance::new(points, inst.matching, inst.provenance, "sheared").expect("shear keeps general position")
}

/// Unmemoized recursion over the flip graph: `(longest, shortest)`.
pub fn naive_values(ps: &PointSet, m: &Matching) -> (usize, usize) {
    if is_noncrossing(ps, m) {
        return (0, 0);
    }
    let mut longest = 0;
    let mut shortest = usize::MAX;
    for (_, _, next) in successors(ps, m).expect("valid successors") {
        let (l, s) = naive_values(ps, &next);
        longest = longest.max(l + 1);
        shortest = shortest.min(s + 1);
    }
    (longest, shortest)
}

pub fn check_values(ps: &PointSet, v: &MatchingValues) -> bool {
    naive_values(ps, &v.matching) == (v.f, v.h)
}

/// The sub-instance on the given point indices (kept in increasing order).
pub fn sub_instance(inst: &Instance, pts: &[usize], segs: &[(usize, usize)]) -> Instance {
    let coords: Vec<(i64, i64)> = pts.iter().map(|&i| (inst.points.point(i).x, inst.points.point(i).y)).collect();
    let local = |i: usize| pts.iter().position(|&p| p == i).expect("endpoint in subset");
    let pairs: Vec<(usize, usize)> = segs.iter().map(|&(a, b)| (local(a), local(b))).collect();
    Instance::new(
        PointSet::new(&coords).unwrap(),
        Matching::new(pts.len(), &pairs).unwrap(),
        Provenance::Custom("sub".into()),
        "",
    )
    .unwrap()
}
