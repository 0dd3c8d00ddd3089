//! Experiments described in TOML. Flags given on the command line are
//! overlaid on the file the same way.
//!
//!     cargo run --example config_file

use ipgd::experiment::{compare_prepared, prepare, ExperimentConfig, Settings};

const CONFIG: &str = r#"
synthetic = "150,15,500,15,8"
agents = 5
solvers = "ipg,nag,bfgs"
tol = 1e-6

[nag]
eta = 0.9

[bfgs]
line_search = "exact"
"#;

fn main() -> ipgd::error::Result<()> {
    let file = Settings::from_toml(CONFIG)?;
    let flags = Settings {
        agents: Some(3),
        out: Some(std::env::temp_dir().join("ipgd-config")),
        ..Default::default()
    };
    let cfg = ExperimentConfig::from_settings(file.overlay(flags))?;
    println!("{} agents, solvers {:?}", cfg.agents, cfg.solvers);
    let prep = prepare(&cfg)?;
    let table = compare_prepared(&prep, &cfg);
    for row in &table.rows {
        let params = row.params.map(|p| p.to_string()).unwrap_or_default();
        println!(
            "{:<5} {:>5} iterations  {params}",
            row.solver.to_string(),
            row.iterations_to_tol.unwrap_or(0)
        );
    }
    Ok(())
}
