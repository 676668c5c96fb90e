//! The musician behaviors: loop a recorded groove, roll at a chord-driven
//! rate, embellish a seed rhythm, gate by arm pose, and play the result on
//! the simulated stick.
//!
//! cargo run --release --example behaviors

use std::path::Path;

use impedance_drum::cli::{BUNDLED_CHORDS, BUNDLED_GROOVE};
use impedance_drum::musician::{self, ArmPose, ChordRateMap, DensityControl, DriveConfig};
use impedance_drum::onset;
use impedance_drum::stick::{StickParams, StrikeEvent};

fn show(name: &str, s: &[StrikeEvent]) {
    let times: Vec<String> = s.iter().take(10).map(|e| format!("{:.3}", e.time)).collect();
    println!("{name:<10} {:>3} strikes: {} ...", s.len(), times.join(" "));
}

fn main() -> impedance_drum::Result<()> {
    let tempo = 100.0;
    let groove = onset::onsets_from_csv(BUNDLED_GROOVE, Path::new("groove.csv"))?;
    let pattern = musician::extract_pattern(&groove, tempo, 4)?;
    println!("groove pattern:\n{}", pattern.to_csv());
    show("playback", &musician::schedule_playback(&pattern, tempo, 2));

    let chords = musician::chords_from_csv(BUNDLED_CHORDS, Path::new("chords.csv"))?;
    for c in &chords {
        println!("pitch class {:>2} -> {:.1} Hz", c.tonal_center, musician::chord_to_rate(c, (2.0, 20.0))?);
    }
    let end = chords.last().map_or(0.0, |c| c.time) + 2.0;
    let roll = musician::chord_schedule(&chords, &ChordRateMap::default(), (2.0, 20.0), end, 0.8)?;
    show("chordrate", &roll);

    let seed = musician::quantize_seed(&groove[..4], tempo, 4)?;
    for level in [0.0, 0.5, 1.0] {
        let dense = musician::densify(&seed, DensityControl::new(level)?, 3);
        println!("density {level}: {} of {} slots", dense.events.len(), dense.slots());
    }

    // the arm lifts out of reach between 2 s and 3 s
    let poses = [
        (0.0, ArmPose::new(0.0, 1.0)?),
        (2.0, ArmPose::new(1.0, 1.0)?),
        (3.0, ArmPose::new(0.2, 0.6)?),
    ];
    let gated = musician::gate_by_pose(&musician::schedule_playback(&pattern, tempo, 2), &poses)?;
    show("gated", &gated);

    let played = musician::drive_schedule(&gated, &StickParams::default(), &DriveConfig::default())?;
    show("played", &played);
    Ok(())
}
