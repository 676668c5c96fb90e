//! Behaviors for the autonomous second stick: pattern playback, chord-driven
//! rolls, and EMG-seeded rhythms with stochastic densification. The arm pose
//! decides whether (and how hard) any of it reaches the drum.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::emg::ActivationSignal;
use crate::error::{Error, Result};
use crate::onset::OnsetEvent;
use crate::stick::{self, PidGains, StickParams, StickState, StrikeEvent};

pub const MAX_RATE_HZ: f64 = 20.0;

/// A quantized rhythm in 4/4: hits on a slot grid with velocities in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RhythmPattern {
    pub resolution: u32,
    pub measures: u32,
    /// (slot, velocity), sorted by slot, at most one per slot.
    pub events: Vec<(usize, f64)>,
}

impl RhythmPattern {
    pub fn new(resolution: u32, measures: u32, mut events: Vec<(usize, f64)>) -> Result<Self> {
        if resolution == 0 || measures == 0 {
            return Err(Error::InvalidInput("pattern resolution and measures must be >= 1".into()));
        }
        let slots = (4 * resolution * measures) as usize;
        events.sort_by_key(|e| e.0);
        for w in events.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!("slot {} appears twice", w[0].0)));
            }
        }
        for &(slot, v) in &events {
            if slot >= slots {
                return Err(Error::InvalidInput(format!("slot {slot} beyond pattern length {slots}")));
            }
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidInput(format!("slot {slot}: velocity {v} not in (0, 1]")));
            }
        }
        Ok(Self {
            resolution,
            measures,
            events,
        })
    }

    pub fn slots(&self) -> usize {
        (4 * self.resolution * self.measures) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# resolution={},measures={}\nslot,velocity\n", self.resolution, self.measures);
        for (slot, v) in &self.events {
            let _ = writeln!(s, "{slot},{v}");
        }
        s
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let (comments, rows) = csvio::read_table(text, "slot,velocity", path)?;
        let meta = comments
            .iter()
            .find_map(|c| c.strip_prefix('#').map(str::trim).filter(|c| c.starts_with("resolution=")))
            .ok_or_else(|| csvio::parse_error(path, 1, "missing `# resolution=<slots>,measures=<n>` line"))?;
        let mut resolution = None;
        let mut measures = None;
        for kv in meta.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| csvio::parse_error(path, 1, format!("bad field `{kv}`")))?;
            let v: u32 = v
                .trim()
                .parse()
                .map_err(|_| csvio::parse_error(path, 1, format!("bad integer `{v}`")))?;
            match k.trim() {
                "resolution" => resolution = Some(v),
                "measures" => measures = Some(v),
                other => return Err(csvio::parse_error(path, 1, format!("unknown field `{other}`"))),
            }
        }
        let (Some(resolution), Some(measures)) = (resolution, measures) else {
            return Err(csvio::parse_error(path, 1, "header needs both resolution and measures"));
        };
        let mut events = Vec::with_capacity(rows.len());
        for (ln, f) in rows {
            let slot: usize = f[0]
                .trim()
                .parse()
                .map_err(|_| csvio::parse_error(path, ln, format!("invalid slot `{}`", f[0])))?;
            events.push((slot, csvio::parse_f64(f[1], path, ln)?));
        }
        Self::new(resolution, measures, events)
    }
}

fn quantize(onsets: &[OnsetEvent], tempo: f64, resolution: u32, anchor: f64) -> Result<RhythmPattern> {
    if !(tempo > 0.0) {
        return Err(Error::InvalidInput(format!("tempo must be > 0, got {tempo}")));
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("resolution must be >= 1".into()));
    }
    if onsets.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::InvalidInput("onsets must be sorted by time".into()));
    }
    if onsets.is_empty() {
        return RhythmPattern::new(resolution, 1, Vec::new());
    }
    let slot_len = 60.0 / (tempo * resolution as f64);
    let mut events: Vec<(usize, f64)> = Vec::new();
    for o in onsets {
        let slot = ((o.time - anchor) / slot_len).round().max(0.0) as usize;
        match events.last_mut() {
            Some(last) if last.0 == slot => last.1 = last.1.max(o.velocity),
            _ => events.push((slot, o.velocity)),
        }
    }
    let peak = events.iter().map(|e| e.1).fold(0.0, f64::max);
    let events: Vec<(usize, f64)> = events
        .into_iter()
        .filter(|e| e.1 > 0.0)
        .map(|(s, v)| (s, if peak > 0.0 { v / peak } else { 1.0 }))
        .collect();
    let per_measure = 4 * resolution as usize;
    let last = events.last().map_or(0, |e| e.0);
    let measures = (last / per_measure + 1) as u32;
    RhythmPattern::new(resolution, measures, events)
}

/// Snaps onsets (times from t = 0) to the nearest slot of the grid.
/// Colliding onsets keep the louder; velocities are normalized to max 1.
pub fn extract_pattern(onsets: &[OnsetEvent], tempo: f64, resolution: u32) -> Result<RhythmPattern> {
    quantize(onsets, tempo, resolution, 0.0)
}

/// Like [`extract_pattern`], but the first onset defines beat one.
pub fn quantize_seed(onsets: &[OnsetEvent], tempo: f64, resolution: u32) -> Result<RhythmPattern> {
    let anchor = onsets.first().map_or(0.0, |o| o.time);
    quantize(onsets, tempo, resolution, anchor)
}

/// Metronomic strike schedule for `loops` repetitions. Velocities stay on
/// the pattern's (0, 1] scale.
pub fn schedule_playback(pattern: &RhythmPattern, tempo: f64, loops: u32) -> Vec<StrikeEvent> {
    let slot_len = 60.0 / (tempo * pattern.resolution as f64);
    let len = pattern.slots();
    (0..loops as usize)
        .flat_map(|l| {
            pattern.events.iter().map(move |&(slot, v)| StrikeEvent {
                time: (l * len + slot) as f64 * slot_len,
                velocity: v,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordEvent {
    pub time: f64,
    pub tonal_center: u8,
}

impl ChordEvent {
    pub fn new(time: f64, tonal_center: u8) -> Result<Self> {
        if tonal_center > 11 {
            return Err(Error::InvalidInput(format!("pitch class {tonal_center} not in 0..=11")));
        }
        Ok(Self { time, tonal_center })
    }
}

pub fn chords_to_csv(chords: &[ChordEvent]) -> String {
    let mut s = String::from("time,pitch_class\n");
    for c in chords {
        let _ = writeln!(s, "{},{}", c.time, c.tonal_center);
    }
    s
}

pub fn chords_from_csv(text: &str, path: &Path) -> Result<Vec<ChordEvent>> {
    let (_, rows) = csvio::read_table(text, "time,pitch_class", path)?;
    rows.into_iter()
        .map(|(ln, f)| {
            let time = csvio::parse_f64(f[0], path, ln)?;
            let pc: u8 = f[1]
                .trim()
                .parse()
                .map_err(|_| csvio::parse_error(path, ln, format!("invalid pitch class `{}`", f[1])))?;
            ChordEvent::new(time, pc).map_err(|e| csvio::parse_error(path, ln, e.to_string()))
        })
        .collect()
}

/// Where each pitch class sits between the minimum and maximum rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordRateMap {
    pub position: [f64; 12],
}

impl Default for ChordRateMap {
    fn default() -> Self {
        let mut position = [0.0; 12];
        for (pc, p) in position.iter_mut().enumerate() {
            *p = pc as f64 / 11.0;
        }
        Self { position }
    }
}

impl ChordRateMap {
    pub fn validate(&self) -> Result<()> {
        if self.position.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("behaviors.chord_map", "positions must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn rate(&self, chord: &ChordEvent, range: (f64, f64)) -> Result<f64> {
        let (lo, hi) = range;
        if !(lo > 0.0 && lo < hi && hi <= MAX_RATE_HZ) {
            return Err(Error::InvalidInput(format!(
                "rate range [{lo}, {hi}] must satisfy 0 < min < max <= {MAX_RATE_HZ}"
            )));
        }
        let p = self.position[chord.tonal_center as usize];
        Ok((lo + p * (hi - lo)).clamp(lo, hi))
    }
}

/// Linear pitch-class to strike-rate map.
pub fn chord_to_rate(chord: &ChordEvent, range: (f64, f64)) -> Result<f64> {
    ChordRateMap::default().rate(chord, range)
}

/// Strikes at the chord's rate from each chord change until the next one
/// (the last chord lasts until `end`).
pub fn chord_schedule(
    chords: &[ChordEvent],
    map: &ChordRateMap,
    range: (f64, f64),
    end: f64,
    velocity: f64,
) -> Result<Vec<StrikeEvent>> {
    if chords.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::InvalidInput("chords must be sorted by time".into()));
    }
    let mut out = Vec::new();
    for (i, c) in chords.iter().enumerate() {
        let stop = chords.get(i + 1).map_or(end, |n| n.time);
        let period = 1.0 / map.rate(c, range)?;
        let mut k = 0;
        loop {
            let t = c.time + k as f64 * period;
            if t >= stop - 1e-9 {
                break;
            }
            out.push(StrikeEvent { time: t, velocity });
            k += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityControl {
    level: f64,
}

impl DensityControl {
    pub fn new(level: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::InvalidInput(format!("density level {level} not in [0, 1]")));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

/// Each empty slot becomes a hit with probability `level`, at a velocity
/// drawn from [0.3, 0.7]. Existing hits are untouched.
pub fn densify(pattern: &RhythmPattern, control: DensityControl, seed: u64) -> RhythmPattern {
    if control.level == 0.0 {
        return pattern.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut existing = pattern.events.iter().peekable();
    let mut events = Vec::with_capacity(pattern.slots());
    for slot in 0..pattern.slots() {
        if let Some(&&(s, v)) = existing.peek() {
            if s == slot {
                events.push((s, v));
                existing.next();
                continue;
            }
        }
        if rng.random_bool(control.level) {
            events.push((slot, rng.random_range(0.3..=0.7)));
        }
    }
    RhythmPattern {
        events,
        ..*pattern
    }
}

/// Density from the mean activation over the last `window` seconds,
/// relative to `full_scale`.
pub fn density_from_activation(signal: &ActivationSignal, window: f64, full_scale: f64) -> Result<DensityControl> {
    if !(window > 0.0) {
        return Err(Error::InvalidInput(format!("window must be > 0, got {window}")));
    }
    if !(full_scale > 0.0) {
        return Err(Error::InvalidInput(format!("full scale must be > 0, got {full_scale}")));
    }
    let n = ((window * signal.sample_rate).round() as usize).clamp(1, signal.samples.len().max(1));
    let tail = &signal.samples[signal.samples.len().saturating_sub(n)..];
    let mean = if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    DensityControl::new((mean / full_scale).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmPose {
    /// 0: the swing reaches the head. 1: out of reach.
    pub hover_height: f64,
    pub velocity_scale: f64,
}

impl ArmPose {
    pub fn new(hover_height: f64, velocity_scale: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&hover_height) {
            return Err(Error::InvalidInput(format!("hover height {hover_height} not in [0, 1]")));
        }
        if !(velocity_scale > 0.0 && velocity_scale <= 1.0) {
            return Err(Error::InvalidInput(format!("velocity scale {velocity_scale} not in (0, 1]")));
        }
        Ok(Self {
            hover_height,
            velocity_scale,
        })
    }
}

/// Drops strikes made while the arm is out of reach and scales the rest by
/// the pose. `poses` is a sample-and-hold trajectory sorted by time.
pub fn gate_by_pose(schedule: &[StrikeEvent], poses: &[(f64, ArmPose)]) -> Result<Vec<StrikeEvent>> {
    if poses.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::InvalidInput("pose trajectory must be sorted by time".into()));
    }
    let Some(first) = poses.first() else {
        return Err(Error::InvalidInput("pose trajectory is empty".into()));
    };
    if let Some(s) = schedule.first() {
        if s.time < first.0 {
            return Err(Error::InvalidInput(format!(
                "pose trajectory starts at {} s, after the first strike at {} s",
                first.0, s.time
            )));
        }
    }
    let mut k = 0;
    let mut out = Vec::with_capacity(schedule.len());
    for s in schedule {
        while k + 1 < poses.len() && poses[k + 1].0 <= s.time {
            k += 1;
        }
        let pose = poses[k].1;
        if pose.hover_height >= 1.0 {
            continue;
        }
        out.push(StrikeEvent {
            time: s.time,
            velocity: s.velocity * pose.velocity_scale * (1.0 - pose.hover_height),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    /// Setpoint below the head for a full-velocity strike, rad.
    pub strike_depth: f64,
    /// Setpoint above the head between strikes, rad.
    pub lift: f64,
    /// The downswing starts this long before the scheduled time, s.
    pub lead: f64,
    pub kp: f64,
    pub damping_ratio: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            strike_depth: 0.3,
            lift: 0.12,
            lead: 0.012,
            kp: 2.4,
            damping_ratio: 0.5,
        }
    }
}

impl DriveConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("drive.strike_depth", self.strike_depth),
            ("drive.lift", self.lift),
            ("drive.kp", self.kp),
            ("drive.damping_ratio", self.damping_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be > 0"));
            }
        }
        if !(self.lead >= 0.0) {
            return Err(Error::config("drive.lead", "must be >= 0"));
        }
        Ok(())
    }
}

/// Plays a strike schedule on the simulated stick. Each scheduled strike
/// swings the setpoint below the head until the stick hits, then lifts
/// it again. Returns the impacts the physics produced.
pub fn drive_schedule(schedule: &[StrikeEvent], params: &StickParams, drive: &DriveConfig) -> Result<Vec<StrikeEvent>> {
    params.validate()?;
    drive.validate()?;
    let gains = PidGains {
        kp: drive.kp,
        ki: 0.0,
        kd: 2.0 * drive.damping_ratio * (drive.kp * params.inertia).sqrt(),
        kp_min: drive.kp,
        kp_max: drive.kp,
    };
    let rest = params.drum_angle + drive.lift;
    let mut state = StickState::at_rest(rest);
    let end = schedule.last().map_or(0.0, |s| s.time) + 0.2;
    let mut next = 0;
    let mut swinging: Option<f64> = None;
    let mut out = Vec::new();
    while state.time < end {
        if swinging.is_none() && next < schedule.len() && state.time >= schedule[next].time - drive.lead {
            let v = schedule[next].velocity.clamp(0.0, 1.0);
            swinging = Some(params.drum_angle - drive.strike_depth * v.max(0.05));
            next += 1;
        }
        let setpoint = swinging.unwrap_or(rest);
        let (s, strike) = stick::step(&state, params, &gains, setpoint)?;
        if let Some(hit) = strike {
            out.push(hit);
            swinging = None;
        }
        state = s;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onset(time: f64, velocity: f64) -> OnsetEvent {
        OnsetEvent { time, velocity }
    }

    #[test]
    fn on_grid_round_trip() {
        // 120 bpm, 16th grid: 125 ms slots
        let slots = [0usize, 2, 3, 7, 12];
        let onsets: Vec<_> = slots.iter().map(|&s| onset(s as f64 * 0.125, 1.0)).collect();
        let p = extract_pattern(&onsets, 120.0, 4).unwrap();
        assert_eq!(p.events.iter().map(|e| e.0).collect::<Vec<_>>(), slots);
        let back = schedule_playback(&p, 120.0, 1);
        for (s, o) in back.iter().zip(&onsets) {
            assert!((s.time - o.time).abs() < 1e-12);
        }
    }

    #[test]
    fn snaps_to_nearer_slot() {
        let p = extract_pattern(&[onset(0.4 * 0.125, 1.0)], 120.0, 4).unwrap();
        assert_eq!(p.events[0].0, 0);
        let p = extract_pattern(&[onset(0.6 * 0.125, 1.0)], 120.0, 4).unwrap();
        assert_eq!(p.events[0].0, 1);
    }

    #[test]
    fn collision_keeps_louder() {
        let p = extract_pattern(&[onset(0.0, 0.3), onset(0.01, 0.8)], 120.0, 4).unwrap();
        assert_eq!(p.events, vec![(0, 1.0)]);
    }

    #[test]
    fn empty_onsets_give_empty_pattern() {
        assert!(extract_pattern(&[], 120.0, 4).unwrap().is_empty());
    }

    #[test]
    fn seed_is_offset_invariant() {
        let base = [0.0, 0.15, 0.45, 0.6];
        let a: Vec<_> = base.iter().map(|&t| onset(t, 0.5)).collect();
        let b: Vec<_> = base.iter().map(|&t| onset(t + 1.0, 0.5)).collect();
        assert_eq!(quantize_seed(&a, 100.0, 4).unwrap(), quantize_seed(&b, 100.0, 4).unwrap());
    }

    #[test]
    fn jittered_seed_recovers_pattern() {
        // 100 bpm 16ths are 150 ms; +-20 ms is well inside half a slot
        let slots = [0usize, 1, 3, 4, 6, 8, 11, 14, 15];
        let jitter = [0.0, 0.02, -0.02, 0.015, -0.01, 0.02, -0.019, 0.005, -0.02];
        let onsets: Vec<_> = slots
            .iter()
            .zip(jitter)
            .map(|(&s, j)| onset(0.5 + s as f64 * 0.15 + j, 0.7))
            .collect();
        let p = quantize_seed(&onsets, 100.0, 4).unwrap();
        assert_eq!(p.events.iter().map(|e| e.0).collect::<Vec<_>>(), slots);
    }

    #[test]
    fn playback_arithmetic() {
        let p = RhythmPattern::new(4, 1, vec![(0, 1.0), (4, 0.5), (10, 0.8)]).unwrap();
        let s = schedule_playback(&p, 120.0, 3);
        assert_eq!(s.len(), 9);
        assert_eq!(s[1].time, 0.5);
        assert_eq!(s[3].time, 2.0);
        let slow = schedule_playback(&p, 60.0, 3);
        for (a, b) in s.iter().zip(&slow) {
            assert!((2.0 * a.time - b.time).abs() < 1e-12);
        }
    }

    #[test]
    fn pattern_csv_round_trip() {
        let p = RhythmPattern::new(4, 2, vec![(0, 1.0), (5, 1.0 / 3.0), (31, 0.25)]).unwrap();
        assert_eq!(RhythmPattern::from_csv(&p.to_csv(), Path::new("p")).unwrap(), p);
        assert!(RhythmPattern::from_csv("slot,velocity\n0,1\n", Path::new("p")).is_err());
        assert!(RhythmPattern::new(4, 1, vec![(16, 1.0)]).is_err());
    }

    #[test]
    fn chord_rate_endpoints() {
        let lo = chord_to_rate(&ChordEvent::new(0.0, 0).unwrap(), (2.0, 20.0)).unwrap();
        let hi = chord_to_rate(&ChordEvent::new(0.0, 11).unwrap(), (2.0, 20.0)).unwrap();
        assert_eq!((lo, hi), (2.0, 20.0));
        assert!(ChordEvent::new(0.0, 12).is_err());
        assert!(chord_to_rate(&ChordEvent::new(0.0, 3).unwrap(), (2.0, 25.0)).is_err());
    }

    #[test]
    fn top_pitch_class_rolls_at_50_ms() {
        let chords = [ChordEvent::new(0.0, 11).unwrap()];
        let s = chord_schedule(&chords, &ChordRateMap::default(), (2.0, 20.0), 2.0, 1.0).unwrap();
        assert_eq!(s.len(), 40);
        for w in s.windows(2) {
            assert!((w[1].time - w[0].time - 0.05).abs() < 1e-9);
        }
    }

    #[test]
    fn chord_csv_round_trip() {
        let c = vec![ChordEvent::new(0.0, 4).unwrap(), ChordEvent::new(1.75, 11).unwrap()];
        assert_eq!(chords_from_csv(&chords_to_csv(&c), Path::new("c")).unwrap(), c);
    }

    #[test]
    fn densify_extremes() {
        let p = RhythmPattern::new(4, 1, vec![(0, 1.0), (8, 0.9)]).unwrap();
        assert_eq!(densify(&p, DensityControl::new(0.0).unwrap(), 1), p);
        let full = densify(&p, DensityControl::new(1.0).unwrap(), 1);
        assert_eq!(full.events.len(), 16);
        assert_eq!(full.events[0], (0, 1.0));
        assert_eq!(full.events[8], (8, 0.9));
        assert!(full
            .events
            .iter()
            .filter(|e| e.0 % 8 != 0)
            .all(|e| (0.3..=0.7).contains(&e.1)));
    }

    #[test]
    fn density_from_activation_is_linear() {
        let sig = |a: f64| ActivationSignal::new(1000.0, vec![a; 500]).unwrap();
        assert_eq!(density_from_activation(&sig(0.0), 0.2, 1.0).unwrap().level(), 0.0);
        assert_eq!(density_from_activation(&sig(1.0), 0.2, 1.0).unwrap().level(), 1.0);
        let a = density_from_activation(&sig(0.2), 0.2, 1.0).unwrap().level();
        let b = density_from_activation(&sig(0.4), 0.2, 1.0).unwrap().level();
        assert!((2.0 * a - b).abs() < 1e-12);
    }

    #[test]
    fn pose_gating() {
        let s: Vec<_> = (0..5)
            .map(|i| StrikeEvent {
                time: i as f64 * 0.1,
                velocity: 0.8,
            })
            .collect();
        let away = [(0.0, ArmPose::new(1.0, 1.0).unwrap())];
        assert!(gate_by_pose(&s, &away).unwrap().is_empty());
        let down = [(0.0, ArmPose::new(0.0, 1.0).unwrap())];
        assert_eq!(gate_by_pose(&s, &down).unwrap(), s);
        let half = [(0.0, ArmPose::new(0.5, 1.0).unwrap())];
        assert!(gate_by_pose(&s, &half).unwrap().iter().all(|x| (x.velocity - 0.4).abs() < 1e-12));
        let late = [(0.05, ArmPose::new(0.0, 1.0).unwrap())];
        assert!(gate_by_pose(&s, &late).is_err());
        // lifting the arm mid-roll silences the rest
        let lift = [(0.0, ArmPose::new(0.0, 1.0).unwrap()), (0.25, ArmPose::new(1.0, 1.0).unwrap())];
        assert_eq!(gate_by_pose(&s, &lift).unwrap().len(), 3);
    }

    #[test]
    fn stick_keeps_up_with_20_hz() {
        let chords = [ChordEvent::new(0.0, 11).unwrap()];
        let s = chord_schedule(&chords, &ChordRateMap::default(), (2.0, 20.0), 5.0, 1.0).unwrap();
        let hits = drive_schedule(&s, &StickParams::default(), &DriveConfig::default()).unwrap();
        let rate = hits.len() as f64 / 5.0;
        assert!((rate - 20.0).abs() <= 1.0, "{} strikes", hits.len());
    }
}
