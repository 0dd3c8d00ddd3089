//! All six solvers from identical starts on one problem; writes
//! `summary.csv` and one `trace_<solver>.csv` per solver.
//!
//!     cargo run --release --example compare_solvers -- [N,d,kappa,rank,seed] [out-dir]

use ipgd::experiment::{cmd_compare, ExperimentConfig, Settings};

fn main() -> ipgd::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let spec = args.next().unwrap_or_else(|| "120,30,1e4,30,1".into());
    let out = args.next().unwrap_or_else(|| {
        std::env::temp_dir()
            .join("ipgd-compare")
            .display()
            .to_string()
    });
    let cfg = ExperimentConfig::from_settings(Settings {
        synthetic: Some(spec),
        tol: Some(1e-6),
        out: Some(out.into()),
        ..Default::default()
    })?;
    let table = cmd_compare(&cfg)?;
    print!("{table}");
    println!("CSV files in {}", cfg.out.display());
    Ok(())
}
