//! The randomized property suites also run by `ipgd check`.
//!
//!     cargo run --release --example property_checks -- [seed]

use ipgd::experiment::{run_checks, CheckOptions};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let results = run_checks(&CheckOptions {
        seed,
        ..Default::default()
    });
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("{failed} of {} suites failed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
