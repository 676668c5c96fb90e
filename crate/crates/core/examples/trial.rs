//! Play one motif under both grip conditions and compare how well each
//! stays in time with the reference.
//!
//! cargo run --release --example trial [motif] [bpm]

use impedance_drum::performer::{self, Condition, Motif, Performer, Stroke, TrialSpec};
use impedance_drum::sync::{self, ScoringConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "straight-16ths".into());
    let tempo: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(180.0);
    let motif = Motif::defaults()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| format!("unknown motif {name}"))?;

    let performer = Performer::default();
    println!("{} {} at {tempo} bpm", motif.name, motif.grid_string());
    let plan = performer::plan_strokes(&motif, tempo, &performer.elbow)?;
    let bounces = plan.iter().filter(|s| matches!(s, Stroke::Bounce { .. })).count();
    let needed = performer::required_rebound_interval(&plan).map_or("none".into(), |i| format!("{:.1} ms", i * 1e3));
    println!("{} strokes, {bounces} bounces, rebound needed {needed}", plan.len());

    for condition in Condition::ALL {
        let spec = TrialSpec::new(motif.clone(), tempo, condition, 11);
        let t = sync::run_trial(&spec, &performer, &ScoringConfig::default())?;
        println!("\n{:<17} kp {:.3}  distance {:.4}", condition.name(), t.kp, t.distance);
        for (r, s) in t.reference.iter().zip(&t.strikes).take(8) {
            println!("  ref {:.3}s  hit {:.3}s  ({:+.1} ms)", r.time, s.time, (s.time - r.time) * 1e3);
        }
    }
    Ok(())
}
