//! Asymptotic errors under persistent system noise: four-decimal rounding
//! for the gradient methods, small uniform perturbations for APC and BFGS.
//!
//!     cargo run --release --example noise_study

use ipgd::experiment::{cmd_noise, ExperimentConfig, Settings};

fn main() -> ipgd::error::Result<()> {
    let cfg = ExperimentConfig::from_settings(Settings {
        synthetic: Some("200,20,1e3,20,4".into()),
        max_iters: Some(20_000),
        seed: Some(5),
        out: Some(std::env::temp_dir().join("ipgd-noise")),
        ..Default::default()
    })?;
    print!("{}", cmd_noise(&cfg)?);
    Ok(())
}
