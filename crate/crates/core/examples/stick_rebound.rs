//! Sweep grip stiffness and watch the free rebound interval shrink, then
//! calibrate kp for a few target intervals.
//!
//! cargo run --release --example stick_rebound

use impedance_drum::stick::{self, PidGains, StickParams};

fn main() -> impedance_drum::Result<()> {
    let params = StickParams::default();
    let gains = PidGains::for_stick(&params);

    println!("{:>8}  {:>10}", "kp", "interval");
    for i in 0..10 {
        let kp = gains.kp_min + (gains.kp_max - gains.kp_min) * i as f64 / 9.0;
        let interval = stick::rebound_interval(&params, &gains, kp)?;
        println!("{kp:>8.3}  {:>9.1}ms", interval.unwrap_or(f64::NAN) * 1e3);
    }

    let (lo, hi) = stick::achievable_intervals(&params, &gains)?;
    println!("\nachievable {:.1} to {:.1} ms", lo * 1e3, hi * 1e3);

    for target in [0.040, 0.0714, 0.100, 0.180] {
        let kp = stick::calibrate_kp_for_interval(&params, target, &gains)?;
        let got = stick::rebound_interval(&params, &gains, kp)?.unwrap_or(f64::NAN);
        println!("target {:>6.1} ms -> kp {kp:.4} -> {:.2} ms", target * 1e3, got * 1e3);
    }

    // a short roll of bounces at the stiffest setting
    let stiff = gains.with_kp(gains.kp_max);
    for s in stick::simulate_rebound(&params, &stiff, 15.0, 0.3)? {
        println!("  strike {:.4}s  speed {:.2}", s.time, s.velocity);
    }
    Ok(())
}
