//! The tempo sweep: every motif at every tempo under both conditions, with a
//! paired t-test per tempo.
//!
//! cargo run --release --example grid [trials_per_cell]

use impedance_drum::cli;
use impedance_drum::performer::{Motif, Performer};
use impedance_drum::sync::{self, GridConfig, ScoringConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let grid = GridConfig {
        trials_per_cell: trials,
        ..Default::default()
    };
    let progress = |done: usize, total: usize| {
        if done.is_multiple_of(260) || done == total {
            eprintln!("{done}/{total}");
        }
    };
    let result = sync::run_grid_with_progress(&Motif::defaults(), &grid, &Performer::default(), &ScoringConfig::default(), &progress)?;

    print!("{}", cli::grid_table(&result));
    for c in sync::check_trends(&result) {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
