//! Times the full downstream region-region exposure on a block-model
//! network.
//!
//! `cargo run --release --example scale_bench -- [firms] [regions] [workers]`

use std::time::Instant;

use supplyshock::exposure::region_region_exposure;
use supplyshock::synth::{scale_fixture, REFERENCE_FIRMS, REFERENCE_LINKS};
use supplyshock::Direction;

fn arg(i: usize, default: usize) -> usize {
    std::env::args()
        .nth(i)
        .map_or(default, |s| s.parse().expect("integer argument"))
}

fn main() {
    let firms = arg(1, REFERENCE_FIRMS);
    let regions = arg(2, 206);
    let workers = arg(3, 0);
    let mean_degree = 2.0 * REFERENCE_LINKS as f64 / REFERENCE_FIRMS as f64;

    let t = Instant::now();
    let built = scale_fixture(firms, regions, mean_degree, 8)
        .and_then(|e| e.build())
        .expect("generate network");
    println!(
        "built {} firms, {} links in {:.1?}",
        built.network.len(),
        built.network.edge_count(),
        t.elapsed()
    );

    let t = Instant::now();
    let m = region_region_exposure(
        &built.network,
        &built.partition,
        Direction::Downstream,
        workers,
    )
    .expect("exposure");
    println!("E^cd over {} regions in {:.1?}", m.dim(), t.elapsed());
}
