//! Spectrum of `AᵀA` and tuned step sizes for a dataset.
//!
//!     cargo run --release --example spectra -- gr_30_30
//!     cargo run --release --example spectra -- path/to/matrix.mtx

use ipgd::experiment::{cmd_spectra, ExperimentConfig, Settings};

fn main() -> ipgd::error::Result<()> {
    let dataset = std::env::args().nth(1).unwrap_or_else(|| "gr_30_30".into());
    let cfg = ExperimentConfig::from_settings(Settings {
        dataset: Some(dataset),
        ..Default::default()
    })?;
    print!("{}", cmd_spectra(&cfg)?);
    Ok(())
}
