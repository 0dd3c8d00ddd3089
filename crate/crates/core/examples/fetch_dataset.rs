//! Download a collection matrix into the data directory (`$IPGD_DATA` or
//! `./data`) and print its spectrum.
//!
//!     cargo run --release --example fetch_dataset -- ash608

use ipgd::experiment::{cmd_spectra, data_dir, fetch_dataset, ExperimentConfig, Settings};

fn main() -> ipgd::error::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "ash608".into());
    let path = fetch_dataset(&name, &data_dir())?;
    println!("saved {}", path.display());
    let cfg = ExperimentConfig::from_settings(Settings {
        dataset: Some(name),
        ..Default::default()
    })?;
    print!("{}", cmd_spectra(&cfg)?);
    Ok(())
}
