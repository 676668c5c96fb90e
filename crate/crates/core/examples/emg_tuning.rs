//! Tune grip stiffness one muscle contraction at a time: each detected onset
//! on the extensor raises kp, each one on the flexor lowers it.
//!
//! cargo run --release --example emg_tuning

use impedance_drum::emg::{self, BurstParams, FilterChainConfig, Interference, SynthSpec};
use impedance_drum::onset::{self, DetectorConfig};
use impedance_drum::stick::{self, KpDirection, PidGains, StickParams};

fn main() -> impedance_drum::Result<()> {
    let params = StickParams::default();
    let mut gains = PidGains::for_stick(&params);
    let steps = 20;

    // five extensor contractions then two flexor ones
    let spec = |seed, n| SynthSpec {
        sample_rate: 8000,
        duration: 0.4 + 0.6 * n as f64,
        burst_times: (0..n).map(|i| 0.3 + 0.6 * i as f64).collect(),
        burst: BurstParams::default(),
        interference: Interference::default(),
        noise_floor: 0.05,
        seed,
    };
    for (direction, seed, n) in [(KpDirection::Up, 1, 5), (KpDirection::Down, 2, 2)] {
        let activation = emg::apply_chain(&emg::synth_emg(&spec(seed, n))?, (0, 1), &FilterChainConfig::default())?;
        for o in onset::detect(&activation, &DetectorConfig::default())? {
            gains = stick::emg_kp_update(&gains, &o, direction, steps)?;
            let interval = stick::rebound_interval(&params, &gains, gains.kp)?.unwrap_or(f64::NAN);
            println!("{direction:?} at {:.3}s: kp {:.3}, rebound {:.1} ms", o.time, gains.kp, interval * 1e3);
        }
    }

    // how many onsets it takes to reach the stiffness for a 16th-note roll at 180 bpm
    let target = stick::calibrate_kp_for_interval(&params, 60.0 / (180.0 * 4.0), &gains)?;
    let (tuned, used) = stick::tune_kp(&PidGains::for_stick(&params), target, steps)?;
    println!("\ntarget kp {target:.3}: reached {:.3} after {used} onsets", tuned.kp);
    Ok(())
}
