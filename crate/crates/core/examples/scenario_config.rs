//! Print the full default scenario as TOML, or load and validate one.
//!
//! cargo run --example scenario_config [path]

use impedance_drum::config::ScenarioConfig;

fn main() -> impedance_drum::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => ScenarioConfig::load(path.as_ref())?,
        None => ScenarioConfig::default(),
    };
    config.validate()?;
    print!("{}", config.to_toml());
    Ok(())
}
