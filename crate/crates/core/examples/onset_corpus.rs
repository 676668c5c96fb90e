//! Generate the default labeled corpus on disk and score the detector on it.
//!
//! cargo run --release --example onset_corpus [seed]

use std::time::Instant;

use impedance_drum::dataset::{self, DatasetConfig, EvalConfig};
use impedance_drum::emg::FilterChainConfig;
use impedance_drum::onset::DetectorConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2024);
    let dir = std::env::temp_dir().join(format!("impedance-drum-corpus-{seed}"));

    let started = Instant::now();
    let corpus = dataset::generate_corpus(&DatasetConfig::default(), seed)?;
    dataset::write_corpus(&corpus, &dir)?;
    let report = dataset::evaluate_corpus(&dir, &FilterChainConfig::default(), &DetectorConfig::default(), &EvalConfig::default())?;

    print!("{}", report.to_csv());
    let all = report.aggregate();
    println!(
        "\n{} bursts in {}, F1 {:.3} in {:.1?}",
        all.true_positives + all.false_negatives,
        dir.display(),
        all.f1,
        started.elapsed()
    );
    Ok(())
}
