//! Synthesize a noisy two-channel EMG recording, condition it and detect
//! muscle onsets.
//!
//! cargo run --release --example emg_chain

use impedance_drum::emg::{self, BurstParams, FilterCascade, FilterChainConfig, Interference, SynthSpec};
use impedance_drum::onset::{self, DetectorConfig};

fn main() -> impedance_drum::Result<()> {
    let filter = FilterChainConfig::default();
    let fs = 8000.0;

    let cascade = FilterCascade::from_config(&filter, fs)?;
    for f in [25.0, 60.0, 180.0, 300.0, 2000.0] {
        let db = 20.0 * cascade.magnitude_at(f, fs).log10();
        println!("cascade at {f:>6} Hz: {db:>8.1} dB");
    }

    let spec = SynthSpec {
        sample_rate: 8000,
        duration: 6.0,
        burst_times: (0..10).map(|i| 0.3 + 0.55 * i as f64).collect(),
        burst: BurstParams::default(),
        interference: Interference::default(),
        noise_floor: 0.05,
        seed: 7,
    };
    let rec = emg::synth_emg(&spec)?;
    let activation = emg::apply_chain(&rec, (0, 1), &filter)?;
    let onsets = onset::detect(&activation, &DetectorConfig::default())?;

    println!("\n{} bursts, {} onsets", spec.burst_times.len(), onsets.len());
    for (o, t) in onsets.iter().zip(rec.labels().unwrap_or_default()) {
        println!("  label {t:.4}s  onset {:.4}s  velocity {:.3}", o.time, o.velocity);
    }
    let score = onset::score_detection(&onsets, rec.labels().unwrap_or_default(), 0.025)?;
    println!("F1 at 25 ms: {:.3}", score.f1);
    Ok(())
}
