//! The binary end to end: outputs, determinism and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use impedance_drum::emg::EmgRecording;
use impedance_drum::stick;
use impedance_drum::sync;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impedance-drum"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, format!("version = 1\n{body}")).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_CORPUS: &str = "[dataset]\nrecordings = 2\nbursts_per_recording = 5\n";

#[test]
fn synth_dataset_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CORPUS);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&run(&a, &["--config", &cfg, "synth-dataset"])), 0);
    assert_eq!(code(&run(&b, &["--config", &cfg, "synth-dataset"])), 0);
    assert_eq!(code(&run(&c, &["--config", &cfg, "--seed", "99", "synth-dataset"])), 0);
    for f in ["rec_000.csv", "rec_001.csv", "manifest.csv"] {
        let x = fs::read(a.join("corpus").join(f)).unwrap();
        assert_eq!(x, fs::read(b.join("corpus").join(f)).unwrap(), "{f}");
        if f != "manifest.csv" {
            assert_ne!(x, fs::read(c.join("corpus").join(f)).unwrap(), "{f}");
        }
    }
    let rec = EmgRecording::read_csv(&a.join("corpus/rec_000.csv")).unwrap();
    assert_eq!(rec.labels().unwrap().len(), 5);
}

#[test]
fn eval_onsets_reports_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CORPUS);
    assert_eq!(code(&run(dir.path(), &["--config", &cfg, "synth-dataset"])), 0);
    let ok = run(dir.path(), &["--config", &cfg, "eval-onsets", "--check"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let report = fs::read_to_string(dir.path().join("onset_scores.csv")).unwrap();
    assert!(report.starts_with("file,tp,fp,fn,precision,recall,f1\n"));
    assert!(report.lines().last().unwrap().starts_with("ALL,"));

    // a detector that never fires misses the threshold
    let deaf = write_config(dir.path(), &format!("{SMALL_CORPUS}[detector]\nmin_velocity = 1000.0\n"));
    assert_eq!(code(&run(dir.path(), &["--config", &deaf, "eval-onsets", "--check"])), 3);
    assert_eq!(code(&run(dir.path(), &["--config", &deaf, "eval-onsets"])), 0);
}

#[test]
fn eval_onsets_rejects_empty_and_malformed_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = run(dir.path(), &["eval-onsets", "--corpus", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty corpus"));

    let bad = dir.path().join("bad");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("r.csv"), "# sample_rate=8000\ntime,ch0,ch1,label\n0,0,0,0\n0.000125,x,0,0\n").unwrap();
    let o = run(dir.path(), &["eval-onsets", "--corpus", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains(":4:"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn trial_writes_three_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["trial", "--motif", "straight-16ths", "--tempo", "180"];
    let mut distances = Vec::new();
    for condition in ["spring", "electromechanical"] {
        let o = run(dir.path(), &[&args[..], &["--condition", condition]].concat());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let stem = format!("trial-straight-16ths-180-{condition}");
        let reference = fs::read_to_string(dir.path().join(format!("{stem}-reference.csv"))).unwrap();
        let strikes = fs::read_to_string(dir.path().join(format!("{stem}-strikes.csv"))).unwrap();
        assert_eq!(stick::strikes_from_csv(&reference, Path::new("r")).unwrap().len(), 64);
        assert_eq!(stick::strikes_from_csv(&strikes, Path::new("s")).unwrap().len(), 64);
        let summary = fs::read_to_string(dir.path().join(format!("{stem}-distance.csv"))).unwrap();
        let row = summary.lines().nth(1).unwrap();
        distances.push(row.rsplit(',').next().unwrap().parse::<f64>().unwrap());
    }
    assert!(distances[0] > distances[1], "{distances:?}");
}

#[test]
fn noiseless_trial_is_perfectly_synchronized() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[elbow]\ntiming_jitter_sigma = 0.0\nvelocity_jitter_sigma = 0.0\n");
    let o = run(
        dir.path(),
        &["--config", &cfg, "trial", "--motif", "straight-8ths", "--tempo", "120", "--condition", "electromechanical"],
    );
    assert_eq!(code(&o), 0);
    let summary = fs::read_to_string(dir.path().join("trial-straight-8ths-120-electromechanical-distance.csv")).unwrap();
    let d: f64 = summary.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["trial", "--tempo", "211"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tempo"));

    let cfg = write_config(dir.path(), "[stick]\nrestitution = 1.5\n");
    let o = run(dir.path(), &["--config", &cfg, "grid"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stick.restitution"));
    assert!(!dir.path().join("grid.csv").exists());

    let cfg = write_config(dir.path(), "[grid]\ntrials = 3\n");
    assert_eq!(code(&run(dir.path(), &["--config", &cfg, "grid"])), 1);

    let o = run(dir.path(), &["behavior", "cowbell"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("playback, chordrate, densify"));
}

#[test]
fn infeasible_trial_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[elbow]\nmax_stroke_rate = 3.0\n");
    let o = run(dir.path(), &["--config", &cfg, "trial", "--motif", "straight-16ths", "--tempo", "200"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn grid_subset_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["grid", "--tempi", "90,120", "--trials", "3"]);
    assert_eq!(code(&o), 0);
    let rows = sync::grid_rows_from_csv(&fs::read_to_string(dir.path().join("grid.csv")).unwrap(), Path::new("g")).unwrap();
    assert_eq!(rows.iter().map(|r| r.bpm).collect::<Vec<_>>(), vec![90.0, 120.0]);
    let trials = fs::read_to_string(dir.path().join("grid_trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 5 * 3);

    // a spring tuned far from 210 bpm breaks the no-difference check there
    let cfg = write_config(dir.path(), "[performer]\nspring_interval = 0.12\n");
    let o = run(dir.path(), &["--config", &cfg, "--check", "grid", "--tempi", "210", "--trials", "3"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn behaviors_render_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["behavior", "playback"]);
    assert_eq!(code(&o), 0);
    let playback = fs::read_to_string(dir.path().join("behavior-playback.csv")).unwrap();
    // bundled groove: 17 onsets, 4 loops by default
    assert_eq!(stick::strikes_from_csv(&playback, Path::new("p")).unwrap().len(), 17 * 4);

    let chords = dir.path().join("chords.csv");
    fs::write(&chords, "time,pitch_class\n0.0,11\n").unwrap();
    let o = run(dir.path(), &["behavior", "chordrate", "--input", chords.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let roll = stick::strikes_from_csv(&fs::read_to_string(dir.path().join("behavior-chordrate.csv")).unwrap(), Path::new("c")).unwrap();
    assert_eq!(roll.len(), 40);
    assert!(roll.windows(2).all(|w| (w[1].time - w[0].time - 0.05).abs() < 1e-9));

    // level 0 densify is the quantized seed itself
    let seed = dir.path().join("seed.csv");
    fs::write(&seed, "time,velocity\n1.0,1.0\n1.3,0.5\n1.9,0.8\n").unwrap();
    let cfg = write_config(dir.path(), "[behaviors]\ntempo = 100.0\nloops = 1\n");
    let o = run(dir.path(), &["--config", &cfg, "behavior", "densify", "--input", seed.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let dense = stick::strikes_from_csv(&fs::read_to_string(dir.path().join("behavior-densify.csv")).unwrap(), Path::new("d")).unwrap();
    assert_eq!(dense.len(), 3);
    for (s, t) in dense.iter().zip([0.0, 0.3, 0.9]) {
        assert!((s.time - t).abs() < 1e-12, "{dense:?}");
    }
}
