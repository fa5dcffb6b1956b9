//! Shared inputs for the criterion benches in `benches/`.

use flipmatch::{gen_random, shear_to_distinct_x, BBox, Instance};

/// Random instance sheared to distinct x, so every strategy applies. The box
/// is small enough that the shear stays inside the coordinate budget.
pub fn sheared_random(n: usize, seed: u64) -> Instance {
    let inst = gen_random(n, seed, BBox::square(0, 700)).expect("room for the points");
    let points = shear_to_distinct_x(&inst.points).expect("within the coordinate budget");
    Instance::new(points, inst.matching, inst.provenance, "sheared").expect("shear keeps general position")
}
