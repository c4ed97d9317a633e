//! Prints facet statistics for three-way tables under the
//! no-three-way-interaction model.
//!
//! Usage: `cargo run --release --example table1 -- 3,3,4 3,4,4`

use std::time::Instant;

use mlecone::cone::{orbit_classify, Budget, MarginalCone};

fn main() {
    let long = std::env::var("MLECONE_LONG").is_ok_and(|v| v == "1");
    let budget = if long { Budget::long() } else { Budget::default() };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let specs: Vec<String> = if args.is_empty() {
        ["2,2,2", "2,2,3", "2,2,4", "2,3,3", "2,3,4", "3,3,3"].map(String::from).to_vec()
    } else {
        args
    };
    for s in specs {
        let levels: Vec<usize> = s.split(',').map(|x| x.trim().parse().expect("level")).collect();
        let start = Instant::now();
        let cone = MarginalCone::three_way(&levels).expect("levels");
        match cone.enumerate(&budget) {
            Ok(desc) => {
                let orbits = orbit_classify(&desc);
                println!(
                    "{s:>8}  dim {:>3}  rays {:>3}  facets {:>7}  orbits {:>3}  {:.2?}",
                    desc.dim(),
                    desc.extreme_ray_count(),
                    desc.facet_count(),
                    orbits.len(),
                    start.elapsed()
                );
            }
            Err(e) => println!("{s:>8}  {e}"),
        }
    }
}
