use std::path::Path;

use proptest::prelude::*;

use impedance_drum::emg::{design_biquad, EmgRecording, FilterKind};
use impedance_drum::musician::{self, ArmPose, ChordEvent, DensityControl, RhythmPattern};
use impedance_drum::onset::{self, OnsetEvent};
use impedance_drum::performer::{self, Condition, Motif, Performer, TrialSpec};
use impedance_drum::stick::{self, StrikeEvent};
use impedance_drum::sync::{self, Envelope, GridConfig, ScoringConfig};

fn enumerate_min(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
    let here = (a[i] - b[j]).abs();
    if i + 1 == a.len() && j + 1 == b.len() {
        return here;
    }
    let mut best = f64::INFINITY;
    if i + 1 < a.len() && j + 1 < b.len() {
        best = best.min(enumerate_min(a, b, i + 1, j + 1));
    }
    if i + 1 < a.len() {
        best = best.min(enumerate_min(a, b, i + 1, j));
    }
    if j + 1 < b.len() {
        best = best.min(enumerate_min(a, b, i, j + 1));
    }
    here + best
}

fn env(v: &[f64]) -> Envelope {
    Envelope::new(1000.0, v.to_vec()).unwrap()
}

fn motif_strategy() -> impl Strategy<Value = Motif> {
    (0..Motif::defaults().len()).prop_map(|i| Motif::defaults().swap_remove(i))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn designed_biquads_are_stable(frac in 0.001f64..0.49, q in 0.3f64..12.0, kind in 0usize..3) {
        let fs = 8000.0;
        let kind = [FilterKind::Lowpass, FilterKind::Highpass, FilterKind::Notch][kind];
        let c = design_biquad(kind, frac * fs, q, fs).unwrap();
        prop_assert!(c.is_stable());
    }

    #[test]
    fn dtw_matches_enumeration(
        a in prop::collection::vec(0.0f64..2.0, 1..7),
        b in prop::collection::vec(0.0f64..2.0, 1..7),
    ) {
        let r = sync::dtw_distance(&env(&a), &env(&b)).unwrap();
        let oracle = enumerate_min(&a, &b, 0, 0);
        prop_assert!((r.total_cost - oracle).abs() < 1e-9, "{} vs {}", r.total_cost, oracle);

        // the returned path is a valid monotone path that costs total_cost
        prop_assert_eq!(r.path.first(), Some(&(0, 0)));
        prop_assert_eq!(r.path.last(), Some(&(a.len() - 1, b.len() - 1)));
        for w in r.path.windows(2) {
            let step = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            prop_assert!(matches!(step, (1, 0) | (0, 1) | (1, 1)));
        }
        let along: f64 = r.path.iter().map(|&(i, j)| (a[i] - b[j]).abs()).sum();
        prop_assert!((along - r.total_cost).abs() < 1e-9);
        prop_assert!((r.normalized_distance - r.total_cost / r.path.len() as f64).abs() < 1e-15);
    }

    #[test]
    fn band_only_ever_adds_cost(
        a in prop::collection::vec(0.0f64..1.0, 1..30),
        b in prop::collection::vec(0.0f64..1.0, 1..30),
        radius in 0usize..8,
    ) {
        let full = sync::dtw_distance(&env(&a), &env(&b)).unwrap().total_cost;
        let banded = sync::dtw_banded(&env(&a), &env(&b), radius).unwrap().total_cost;
        prop_assert!(banded >= full - 1e-12);
        let wide = sync::dtw_banded(&env(&a), &env(&b), 64).unwrap().total_cost;
        prop_assert_eq!(wide, full);
    }

    #[test]
    fn densify_keeps_original_hits(
        hits in prop::collection::btree_map(0usize..32, 0.05f64..1.0, 0..12),
        level in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let p = RhythmPattern::new(4, 2, hits.into_iter().collect()).unwrap();
        let d = musician::densify(&p, DensityControl::new(level).unwrap(), seed);
        for e in &p.events {
            prop_assert!(d.events.contains(e));
        }
        for e in d.events.iter().filter(|e| !p.events.iter().any(|o| o.0 == e.0)) {
            prop_assert!((0.3..=0.7).contains(&e.1));
        }
        prop_assert!(RhythmPattern::new(d.resolution, d.measures, d.events.clone()).is_ok());
    }

    #[test]
    fn chord_rate_stays_in_range(pc in 0u8..12, lo in 0.5f64..10.0, span in 0.1f64..10.0) {
        let hi = (lo + span).min(20.0);
        let r = musician::chord_to_rate(&ChordEvent::new(0.0, pc).unwrap(), (lo, hi)).unwrap();
        prop_assert!(r >= lo && r <= hi && r <= 20.0);
    }

    #[test]
    fn gating_only_removes_and_softens(
        times in prop::collection::vec(0.0f64..4.0, 0..40),
        keys in prop::collection::vec((0.0f64..4.0, 0.0f64..=1.0, 0.05f64..=1.0), 1..6),
    ) {
        let mut times = times;
        times.sort_by(f64::total_cmp);
        let schedule: Vec<StrikeEvent> = times.iter().map(|&t| StrikeEvent { time: t, velocity: 0.9 }).collect();
        let mut poses: Vec<(f64, ArmPose)> = keys.iter().map(|&(t, h, s)| (t, ArmPose::new(h, s).unwrap())).collect();
        poses.sort_by(|a, b| a.0.total_cmp(&b.0));
        poses[0].0 = 0.0;
        let out = musician::gate_by_pose(&schedule, &poses).unwrap();
        prop_assert!(out.len() <= schedule.len());
        for s in &out {
            prop_assert!(schedule.iter().any(|x| x.time == s.time && s.velocity <= x.velocity));
        }
    }

    #[test]
    fn quantization_is_offset_invariant(
        slots in prop::collection::btree_set(0usize..32, 1..16),
        offset in 0.0f64..5.0,
        tempo in 60.0f64..180.0,
    ) {
        let slot = 60.0 / (tempo * 4.0);
        let base: Vec<OnsetEvent> = slots.iter().map(|&s| OnsetEvent { time: s as f64 * slot, velocity: 0.5 }).collect();
        let shifted: Vec<OnsetEvent> = base.iter().map(|o| OnsetEvent { time: o.time + offset, ..*o }).collect();
        prop_assert_eq!(
            musician::quantize_seed(&base, tempo, 4).unwrap(),
            musician::quantize_seed(&shifted, tempo, 4).unwrap()
        );
    }

    #[test]
    fn strike_and_onset_csv_round_trip(rows in prop::collection::vec((0.0f64..1e3, 1e-9f64..1e3), 0..50)) {
        let strikes: Vec<StrikeEvent> = rows.iter().map(|&(time, velocity)| StrikeEvent { time, velocity }).collect();
        prop_assert_eq!(stick::strikes_from_csv(&stick::strikes_to_csv(&strikes), Path::new("s")).unwrap(), strikes);
        let onsets: Vec<OnsetEvent> = rows.iter().map(|&(time, velocity)| OnsetEvent { time, velocity }).collect();
        prop_assert_eq!(onset::onsets_from_csv(&onset::onsets_to_csv(&onsets), Path::new("o")).unwrap(), onsets);
    }

    #[test]
    fn emg_csv_round_trip(
        ch in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..200),
        label_at in prop::collection::btree_set(0usize..200, 0..5),
    ) {
        let fs = 2000;
        let labels: Vec<f64> = label_at.into_iter().filter(|&i| i < ch.len()).map(|i| i as f64 / fs as f64).collect();
        let rec = EmgRecording::new(fs, vec![ch.iter().map(|c| c.0).collect(), ch.iter().map(|c| c.1).collect()], Some(labels)).unwrap();
        let back = EmgRecording::from_csv_str(&rec.to_csv_string(), Path::new("e")).unwrap();
        prop_assert_eq!(back, rec);
    }

    #[test]
    fn performance_matches_plan(motif in motif_strategy(), tempo in 90.0f64..=210.0, seed in any::<u64>(), spring in any::<bool>()) {
        let condition = if spring { Condition::Spring } else { Condition::Electromechanical };
        let spec = TrialSpec::new(motif.clone(), tempo, condition, seed);
        let out = performer::perform_trial(&spec, &Performer::default()).unwrap();
        prop_assert_eq!(out.strikes.len(), motif.hits_per_measure() * 4);
        prop_assert!(out.strikes.windows(2).all(|w| w[1].time > w[0].time));
        prop_assert!(out.strikes.iter().all(|s| s.velocity > 0.0));
    }
}

#[test]
fn pattern_csv_round_trip_is_exact() {
    let p = RhythmPattern::new(3, 2, vec![(0, 1.0), (7, 0.1 + 0.2), (23, 1.0 / 7.0)]).unwrap();
    assert_eq!(RhythmPattern::from_csv(&p.to_csv(), Path::new("p")).unwrap(), p);
}

#[test]
fn adding_trials_keeps_existing_distances() {
    let motifs = &Motif::defaults()[..2];
    let run = |trials| {
        let grid = GridConfig {
            tempi: vec![160.0, 200.0],
            trials_per_cell: trials,
            ..Default::default()
        };
        sync::run_grid(motifs, &grid, &Performer::default(), &ScoringConfig::default()).unwrap()
    };
    let small = run(3);
    let large = run(6);
    for t in &small.trials {
        assert!(large.trials.contains(t), "{t:?}");
    }
}

#[test]
fn electromechanical_degrades_with_tempo() {
    let grid = GridConfig {
        tempi: (0..13).map(|i| 90.0 + 10.0 * i as f64).collect(),
        trials_per_cell: 8,
        ..Default::default()
    };
    let r = sync::run_grid(&Motif::defaults(), &grid, &Performer::default(), &ScoringConfig::default()).unwrap();
    for w in r.rows.windows(2) {
        assert!(w[1].electro_mean >= w[0].electro_mean, "{} -> {}", w[0].bpm, w[1].bpm);
    }
}
