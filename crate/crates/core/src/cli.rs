//! Command-line front end. Each `cmd_*` function is usable on its own; `run`
//! parses arguments, maps errors to exit codes and prints summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Parser, Subcommand};

use crate::config::{self, ScenarioConfig};
use crate::csvio::write_atomic;
use crate::dataset::{self, CorpusReport};
use crate::error::{Error, Result};
use crate::musician;
use crate::onset::{self, OnsetEvent};
use crate::performer::{Condition, TrialSpec};
use crate::stick::{self, StrikeEvent};
use crate::sync::{self, GridResult, ScoredTrial};

pub const EXIT_CHECK_FAILED: u8 = 3;

/// Bundled inputs used when `behavior` is given no `--input`.
pub const BUNDLED_GROOVE: &str = include_str!("../data/onsets/groove.csv");
pub const BUNDLED_CHORDS: &str = include_str!("../data/chords/progression.csv");

#[derive(Debug, Parser)]
#[command(name = "impedance-drum", version, about = "Robotic drumming prosthesis simulator")]
pub struct Cli {
    /// Scenario file (TOML, `version = 1`). Built-in defaults otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for `grid`.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Exit with code 3 when acceptance thresholds are missed.
    #[arg(long, global = true)]
    pub check: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a labeled synthetic EMG corpus to <out>/corpus.
    SynthDataset,
    /// Score the onset detector on a labeled corpus.
    EvalOnsets {
        /// Corpus directory (default <out>/corpus).
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Simulate and score one trial.
    Trial {
        #[arg(long)]
        motif: Option<String>,
        #[arg(long)]
        tempo: Option<f64>,
        /// spring or electromechanical
        #[arg(long)]
        condition: Option<String>,
    },
    /// Run the tempo x motif x condition experiment.
    Grid {
        /// Comma-separated tempi, e.g. 90,120.
        #[arg(long, value_delimiter = ',')]
        tempi: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Render a second-stick behavior to a strike schedule.
    Behavior {
        /// playback, chordrate or densify
        name: String,
        /// Onset CSV (playback, densify) or chord CSV (chordrate).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut config = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

/// Writes the corpus and its manifest under `<out>/corpus`.
pub fn cmd_synth_dataset(config: &ScenarioConfig, out: &Path) -> Result<PathBuf> {
    let dir = out.join("corpus");
    let entries = dataset::generate_corpus(&config.dataset, config.seed)?;
    dataset::write_corpus(&entries, &dir)?;
    Ok(dir)
}

/// Scores every recording and writes `<out>/onset_scores.csv`.
pub fn cmd_eval_onsets(config: &ScenarioConfig, corpus: &Path, out: &Path) -> Result<CorpusReport> {
    let report = dataset::evaluate_corpus(corpus, &config.filter, &config.detector, &config.eval)?;
    write_atomic(&out.join("onset_scores.csv"), &report.to_csv())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub spec: TrialSpec,
    pub scored: ScoredTrial,
    pub files: [PathBuf; 3],
}

pub fn cmd_trial(config: &ScenarioConfig, motif: &str, tempo: f64, condition: Condition, out: &Path) -> Result<TrialReport> {
    config::check_tempo("tempo", tempo)?;
    let spec = TrialSpec::new(config.motif(motif)?, tempo, condition, config.seed);
    let scored = sync::run_trial(&spec, &config.performer(), &config.scoring)?;
    let stem = format!("trial-{}-{}-{}", motif, tempo, condition.name());
    let files = [
        out.join(format!("{stem}-reference.csv")),
        out.join(format!("{stem}-strikes.csv")),
        out.join(format!("{stem}-distance.csv")),
    ];
    write_atomic(&files[0], &stick::strikes_to_csv(&scored.reference))?;
    write_atomic(&files[1], &stick::strikes_to_csv(&scored.strikes))?;
    let summary = format!(
        "motif,bpm,condition,seed,kp,distance\n{},{},{},{},{},{}\n",
        motif,
        tempo,
        condition.name(),
        config.seed,
        scored.kp,
        scored.distance
    );
    write_atomic(&files[2], &summary)?;
    Ok(TrialReport { spec, scored, files })
}

/// Runs the grid on `jobs` threads (all cores when `None`) and writes
/// `<out>/grid.csv` and `<out>/grid_trials.csv`.
pub fn cmd_grid(
    config: &ScenarioConfig,
    jobs: Option<usize>,
    out: &Path,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<GridResult> {
    let grid = config.grid_config();
    let motifs = config.grid_motifs()?;
    let performer = config.performer();
    let run = || sync::run_grid_with_progress(&motifs, &grid, &performer, &config.scoring, progress);
    let result = match jobs {
        Some(0) => return Err(Error::config("jobs", "must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    write_atomic(&out.join("grid.csv"), &result.to_csv())?;
    write_atomic(&out.join("grid_trials.csv"), &result.trials_csv())?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Playback,
    ChordRate,
    Densify,
}

impl Behavior {
    pub const NAMES: &'static str = "playback, chordrate, densify";

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "playback" => Ok(Behavior::Playback),
            "chordrate" => Ok(Behavior::ChordRate),
            "densify" => Ok(Behavior::Densify),
            other => Err(Error::UnknownBehavior {
                name: other.into(),
                valid: Self::NAMES.into(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Behavior::Playback => "playback",
            Behavior::ChordRate => "chordrate",
            Behavior::Densify => "densify",
        }
    }
}

fn read_onsets(input: Option<&Path>) -> Result<Vec<OnsetEvent>> {
    match input {
        Some(p) => onset::onsets_from_csv(&std::fs::read_to_string(p)?, p),
        None => onset::onsets_from_csv(BUNDLED_GROOVE, Path::new("data/onsets/groove.csv")),
    }
}

/// Strike schedule for a behavior after pose gating; with
/// `behaviors.simulate` the schedule is played on the stick and its impacts
/// are returned instead.
pub fn behavior_schedule(config: &ScenarioConfig, behavior: Behavior, input: Option<&Path>) -> Result<Vec<StrikeEvent>> {
    let b = &config.behaviors;
    let schedule = match behavior {
        Behavior::Playback => {
            let pattern = musician::extract_pattern(&read_onsets(input)?, b.tempo, b.resolution)?;
            musician::schedule_playback(&pattern, b.tempo, b.loops)
        }
        Behavior::Densify => {
            let seed = musician::quantize_seed(&read_onsets(input)?, b.tempo, b.resolution)?;
            let dense = musician::densify(&seed, musician::DensityControl::new(b.density)?, config.seed);
            musician::schedule_playback(&dense, b.tempo, b.loops)
        }
        Behavior::ChordRate => {
            let chords = match input {
                Some(p) => musician::chords_from_csv(&std::fs::read_to_string(p)?, p)?,
                None => musician::chords_from_csv(BUNDLED_CHORDS, Path::new("data/chords/progression.csv"))?,
            };
            let end = chords.last().map_or(0.0, |c| c.time) + b.chord_hold;
            let range = (b.rate_range[0], b.rate_range[1]);
            musician::chord_schedule(&chords, &b.chord_map(), range, end, b.roll_velocity)?
        }
    };
    let gated = musician::gate_by_pose(&schedule, &b.poses()?)?;
    if b.simulate {
        musician::drive_schedule(&gated, &config.stick, &b.drive)
    } else {
        Ok(gated)
    }
}

pub fn cmd_behavior(config: &ScenarioConfig, name: &str, input: Option<&Path>, out: &Path) -> Result<(Vec<StrikeEvent>, PathBuf)> {
    let behavior = Behavior::parse(name)?;
    let strikes = behavior_schedule(config, behavior, input)?;
    let path = out.join(format!("behavior-{}.csv", behavior.name()));
    write_atomic(&path, &stick::strikes_to_csv(&strikes))?;
    Ok((strikes, path))
}

fn execute(cli: &Cli) -> Result<u8> {
    let config = load_config(cli.config.as_deref(), cli.seed)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::SynthDataset => {
            let dir = cmd_synth_dataset(&config, out)?;
            let d = &config.dataset;
            println!(
                "wrote {} recordings ({} bursts) to {}",
                d.recordings,
                d.recordings * d.bursts_per_recording,
                dir.display()
            );
            Ok(0)
        }
        Command::EvalOnsets { corpus } => {
            let corpus = corpus.clone().unwrap_or_else(|| out.join("corpus"));
            let report = cmd_eval_onsets(&config, &corpus, out)?;
            let mut errors = 0;
            for (file, e) in report.errors() {
                eprintln!("{file}: {e}");
                errors += 1;
            }
            let agg = report.aggregate();
            println!(
                "{} files: precision {:.3} recall {:.3} F1 {:.3}",
                report.files.len(),
                agg.precision,
                agg.recall,
                agg.f1
            );
            if errors > 0 {
                return Ok(1);
            }
            if cli.check && agg.f1 < config.eval.min_f1 {
                eprintln!("check failed: F1 {:.3} < {}", agg.f1, config.eval.min_f1);
                return Ok(EXIT_CHECK_FAILED);
            }
            Ok(0)
        }
        Command::Trial { motif, tempo, condition } => {
            let motif = motif.clone().unwrap_or_else(|| config.trial.motif.clone());
            let tempo = tempo.unwrap_or(config.trial.tempo);
            let condition = match condition {
                Some(c) => Condition::parse(c)?,
                None => config.trial.condition,
            };
            let r = cmd_trial(&config, &motif, tempo, condition, out)?;
            println!(
                "{motif} @ {tempo} bpm, {}: {} strikes, kp {:.4}, distance {:.6}",
                condition.name(),
                r.scored.strikes.len(),
                r.scored.kp,
                r.scored.distance
            );
            Ok(0)
        }
        Command::Grid { tempi, trials } => {
            let mut config = config;
            if let Some(t) = tempi {
                config.grid.tempi = t.clone();
            }
            if let Some(n) = trials {
                config.grid.trials_per_cell = *n;
            }
            config.validate()?;
            let last = AtomicUsize::new(0);
            let progress = |done: usize, total: usize| {
                let pct = done * 10 / total.max(1);
                if last.fetch_max(pct, Ordering::Relaxed) < pct {
                    eprintln!("grid: {}%", pct * 10);
                }
            };
            let result = cmd_grid(&config, cli.jobs, out, &progress)?;
            print!("{}", grid_table(&result));
            for f in &result.failures {
                eprintln!("cell {} bpm / {} / trial {} failed: {}", f.bpm, f.motif, f.trial, f.message);
            }
            if !result.failures.is_empty() {
                return Ok(2);
            }
            if cli.check {
                let checks = sync::check_trends(&result);
                for c in &checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                if checks.iter().any(|c| !c.passed) {
                    return Ok(EXIT_CHECK_FAILED);
                }
            }
            Ok(0)
        }
        Command::Behavior { name, input } => {
            let (strikes, path) = cmd_behavior(&config, name, input.as_deref(), out)?;
            println!("{name}: {} strikes -> {}", strikes.len(), path.display());
            Ok(0)
        }
    }
}

pub fn grid_table(result: &GridResult) -> String {
    let mut s = String::from("  bpm    spring    electro   p(adj)  sig\n");
    for r in &result.rows {
        let _ = writeln!(
            s,
            "{:5}  {:.5}  {:.5}  {:7.4}  {}",
            r.bpm,
            r.spring_mean,
            r.electro_mean,
            r.p_adjusted,
            if r.significant { "*" } else { "" }
        );
    }
    s
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> ExitCode {
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn main() -> ExitCode {
    run(&Cli::parse())
}
