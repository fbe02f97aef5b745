//! Rough wall-clock figures for the n = 6 census and Monte Carlo at n = 8..20.
//! Run with `cargo run --release -p signlab-core --example timing`.

use std::time::Instant;

use signlab_core::exactcount::{census_symmetric, CensusOptions};
use signlab_core::montecarlo::estimate_pn;
use signlab_core::Seed;

fn main() {
    let t = Instant::now();
    let r = census_symmetric(6, &CensusOptions::default()).unwrap();
    println!("n=6 symmetric: singular {} of {} in {:.2?}", r.singular_count, r.total, t.elapsed());
    for n in [8, 12, 16, 20] {
        let t = Instant::now();
        let e = estimate_pn(n, 200_000, Seed::new(1), 0).unwrap();
        println!("n={n}: p_hat {:.5} exponent {:.4} in {:.2?}", e.p_hat, e.exponent, t.elapsed());
    }
}
