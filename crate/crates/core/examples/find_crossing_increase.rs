//! Searches random point sets for a single flip that raises the crossing
//! count from 1 to 3 and prints the first hit as an instance file.
//!
//! The pinned fixture `tests/fixtures/crossings_1_to_3.json` came from
//! `cargo run -p flipmatch --example find_crossing_increase`.

use flipmatch::format::instance_to_json;
use flipmatch::matching::crossing_count;
use flipmatch::search::enumerate_all_matchings;
use flipmatch::{find_crossings, flip, gen_random, BBox, Provenance};

fn main() {
    for seed in 0..10_000u64 {
        let Ok(base) = gen_random(5, seed, BBox::square(0, 40)) else { continue };
        for m in enumerate_all_matchings(&base.points, 5).expect("n = 5") {
            let crossings = find_crossings(&base.points, &m);
            if crossings.len() != 1 {
                continue;
            }
            for choice in flipmatch::FlipChoice::BOTH {
                let (next, _) = flip(&base.points, &m, &crossings[0], choice).expect("live crossing");
                if crossing_count(&base.points, &next) == 3 {
                    let mut inst = base.with_matching(m.clone());
                    inst.provenance = Provenance::Custom("crossings-1-to-3".into());
                    inst.notes = format!(
                        "found from random seed {seed}; flipping {} with choice {} yields 3 crossings",
                        crossings[0],
                        choice.label()
                    );
                    print!("{}", instance_to_json(&inst));
                    return;
                }
            }
        }
    }
    eprintln!("no instance found");
    std::process::exit(1);
}
