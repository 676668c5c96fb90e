//! Virtual drummer for the synchronization experiment.
//!
//! The performer listens to a metronomic motif and plays it back with the
//! prosthesis. Hits the elbow can keep up with are single strokes; faster
//! runs alternate an elbow stroke with a rebound ("bounce") whose timing is
//! set by the grip stiffness. The spring condition has one fixed stiffness;
//! the electromechanical condition tunes kp with EMG onsets before playing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stick::{self, PidGains, StickParams, StrikeEvent};

pub const MIN_TEMPO: f64 = 90.0;
pub const MAX_TEMPO: f64 = 210.0;

/// A one-measure 4/4 hit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Motif {
    pub name: String,
    /// Grid slots per quarter note.
    pub subdivision: u32,
    pub pattern: Vec<bool>,
    pub accent: Option<Vec<f64>>,
}

impl Motif {
    pub fn new(name: impl Into<String>, subdivision: u32, pattern: Vec<bool>, accent: Option<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        if subdivision == 0 {
            return Err(Error::InvalidInput(format!("motif `{name}`: subdivision must be >= 1")));
        }
        if pattern.len() != 4 * subdivision as usize {
            return Err(Error::InvalidInput(format!(
                "motif `{name}`: grid has {} slots, expected {}",
                pattern.len(),
                4 * subdivision
            )));
        }
        if !pattern.iter().any(|&h| h) {
            return Err(Error::InvalidInput(format!("motif `{name}` has no hits")));
        }
        if let Some(acc) = &accent {
            if acc.len() != pattern.len() || acc.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
                return Err(Error::InvalidInput(format!(
                    "motif `{name}`: accents must have one weight in (0, 1] per slot"
                )));
            }
        }
        Ok(Self {
            name,
            subdivision,
            pattern,
            accent,
        })
    }

    /// Parses a hit-grid string such as `"1010101010101010"`.
    pub fn from_grid(name: impl Into<String>, subdivision: u32, grid: &str, accent: Option<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let pattern = grid
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '1' | 'x' | 'X' => Ok(true),
                '0' | '.' | '-' => Ok(false),
                other => Err(Error::InvalidInput(format!("motif `{name}`: bad grid character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, subdivision, pattern, accent)
    }

    pub fn grid_string(&self) -> String {
        self.pattern.iter().map(|&h| if h { '1' } else { '0' }).collect()
    }

    pub fn slots(&self) -> usize {
        self.pattern.len()
    }

    pub fn hits_per_measure(&self) -> usize {
        self.pattern.iter().filter(|&&h| h).count()
    }

    fn weight(&self, slot: usize) -> f64 {
        self.accent.as_ref().map_or(1.0, |a| a[slot])
    }

    /// The five reference motifs used by the default experiment.
    pub fn defaults() -> Vec<Motif> {
        let para_accent = (0..16).map(|s| if s % 8 == 0 { 1.0 } else { 0.6 }).collect();
        vec![
            Motif::from_grid("straight-8ths", 4, "1010101010101010", None),
            Motif::from_grid("straight-16ths", 4, "1111111111111111", None),
            Motif::from_grid("eighth-two-sixteenths", 4, "1011101110111011", None),
            Motif::from_grid("double-stroke-roll", 4, "1100110011001100", None),
            Motif::from_grid("paradiddle", 4, "1011010010110100", Some(para_accent)),
        ]
        .into_iter()
        .map(|m| m.expect("built-in motifs are valid"))
        .collect()
    }
}

/// Seconds per grid slot.
pub fn slot_duration(tempo: f64, subdivision: u32) -> f64 {
    60.0 / (tempo * subdivision as f64)
}

/// Metronomic onset times (s) of the motif repeated for `measures` measures.
pub fn render_reference(motif: &Motif, tempo: f64, measures: u32) -> Vec<f64> {
    reference_hits(motif, tempo, measures).into_iter().map(|(t, _)| t).collect()
}

/// Onset times with their accent weights.
pub fn reference_hits(motif: &Motif, tempo: f64, measures: u32) -> Vec<(f64, f64)> {
    let slot = slot_duration(tempo, motif.subdivision);
    let n = motif.slots();
    (0..measures as usize * n)
        .filter(|i| motif.pattern[i % n])
        .map(|i| (i as f64 * slot, motif.weight(i % n)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Spring,
    Electromechanical,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Spring, Condition::Electromechanical];

    pub fn name(&self) -> &'static str {
        match self {
            Condition::Spring => "spring",
            Condition::Electromechanical => "electromechanical",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spring" => Ok(Condition::Spring),
            "electromechanical" | "electro" => Ok(Condition::Electromechanical),
            other => Err(Error::InvalidInput(format!(
                "unknown condition `{other}` (expected spring or electromechanical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub motif: Motif,
    pub tempo: f64,
    pub condition: Condition,
    pub measures_reference: u32,
    pub measures_performed: u32,
    pub seed: u64,
}

impl TrialSpec {
    pub fn new(motif: Motif, tempo: f64, condition: Condition, seed: u64) -> Self {
        Self {
            motif,
            tempo,
            condition,
            measures_reference: 2,
            measures_performed: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_TEMPO..=MAX_TEMPO).contains(&self.tempo) {
            return Err(Error::config(
                "tempo",
                format!("{} bpm is outside [{MIN_TEMPO}, {MAX_TEMPO}]", self.tempo),
            ));
        }
        if self.measures_reference < 1 || self.measures_performed < 1 {
            return Err(Error::config("measures", "measure counts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElbowModel {
    /// Fastest sustainable single-stroke rate, Hz.
    pub max_stroke_rate: f64,
    /// Gaussian onset-time jitter, s.
    pub timing_jitter_sigma: f64,
    /// Gaussian velocity jitter as a fraction of the intended velocity.
    pub velocity_jitter_sigma: f64,
}

impl Default for ElbowModel {
    fn default() -> Self {
        Self {
            max_stroke_rate: 9.5,
            timing_jitter_sigma: 0.005,
            velocity_jitter_sigma: 0.05,
        }
    }
}

impl ElbowModel {
    pub fn noiseless(&self) -> Self {
        Self {
            timing_jitter_sigma: 0.0,
            velocity_jitter_sigma: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_stroke_rate > 0.0) {
            return Err(Error::config("elbow.max_stroke_rate", "must be > 0"));
        }
        if !(self.timing_jitter_sigma >= 0.0) {
            return Err(Error::config("elbow.timing_jitter_sigma", "must be >= 0"));
        }
        if !(self.velocity_jitter_sigma >= 0.0) {
            return Err(Error::config("elbow.velocity_jitter_sigma", "must be >= 0"));
        }
        Ok(())
    }

    pub fn min_stroke_interval(&self) -> f64 {
        1.0 / self.max_stroke_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stroke {
    /// Played by moving the elbow.
    Elbow,
    /// Rebound of the preceding elbow stroke, `interval` seconds after it.
    Bounce { interval: f64 },
}

/// Assigns a stroke type to each onset time. Onsets closer than the elbow's
/// minimum stroke interval alternate elbow and bounce strokes.
pub fn plan_onsets(times: &[f64], elbow: &ElbowModel) -> Result<Vec<Stroke>> {
    let limit = elbow.min_stroke_interval();
    let mut plan: Vec<Stroke> = Vec::with_capacity(times.len());
    let mut last_elbow: Option<f64> = None;
    for (i, &t) in times.iter().enumerate() {
        let ioi = if i == 0 { f64::INFINITY } else { t - times[i - 1] };
        // small tolerance so exact-threshold grids stay single strokes
        let short = ioi < limit * (1.0 - 1e-9);
        let stroke = if short && matches!(plan.last(), Some(Stroke::Elbow)) {
            Stroke::Bounce { interval: ioi }
        } else {
            Stroke::Elbow
        };
        if stroke == Stroke::Elbow {
            if let Some(prev) = last_elbow {
                if t - prev < limit * (1.0 - 1e-9) {
                    return Err(Error::InfeasiblePlan {
                        required: t - prev,
                        achievable: limit,
                    });
                }
            }
            last_elbow = Some(t);
        }
        plan.push(stroke);
    }
    Ok(plan)
}

/// Stroke plan for one measure of `motif` at `tempo`.
pub fn plan_strokes(motif: &Motif, tempo: f64, elbow: &ElbowModel) -> Result<Vec<Stroke>> {
    elbow.validate()?;
    plan_onsets(&render_reference(motif, tempo, 1), elbow)
}

/// The rebound interval a plan asks the grip for: the median of its bounce
/// intervals, or `None` for an all-elbow plan.
pub fn required_rebound_interval(plan: &[Stroke]) -> Option<f64> {
    let mut v: Vec<f64> = plan
        .iter()
        .filter_map(|s| match s {
            Stroke::Bounce { interval } => Some(*interval),
            Stroke::Elbow => None,
        })
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

/// Everything the virtual drummer needs besides the trial itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Performer {
    pub elbow: ElbowModel,
    pub stick: StickParams,
    pub gains: PidGains,
    /// Rebound interval the fixed spring is tuned to, s.
    pub spring_interval: f64,
    /// Onsets needed to sweep kp across its whole range.
    pub tuning_steps: u32,
}

impl Default for Performer {
    fn default() -> Self {
        let stick = StickParams::default();
        Self {
            elbow: ElbowModel::default(),
            stick,
            gains: PidGains::for_stick(&stick),
            spring_interval: 60.0 / (MAX_TEMPO * 4.0),
            tuning_steps: 1000,
        }
    }
}

impl Performer {
    pub fn spring_kp(&self) -> Result<f64> {
        stick::calibrate_kp_for_interval(&self.stick, self.spring_interval, &self.gains)
    }

    /// Grip gains used for a trial under `condition` given the plan's
    /// required rebound interval.
    pub fn gains_for(&self, condition: Condition, required: Option<f64>) -> Result<PidGains> {
        match (condition, required) {
            (Condition::Spring, _) => Ok(self.gains.with_kp(self.spring_kp()?)),
            (Condition::Electromechanical, None) => Ok(self.gains),
            (Condition::Electromechanical, Some(interval)) => {
                let target = stick::calibrate_kp_for_interval(&self.stick, interval, &self.gains)?;
                let (tuned, _) = stick::tune_kp(&self.gains, target, self.tuning_steps)?;
                Ok(tuned)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub strikes: Vec<StrikeEvent>,
    pub plan: Vec<Stroke>,
    pub kp: f64,
}

/// Plays `measures_performed` measures of the motif. Elbow strokes land at
/// the reference time plus Gaussian jitter; bounce strokes are the simulated
/// rebound of the preceding elbow stroke.
pub fn perform_trial(spec: &TrialSpec, performer: &Performer) -> Result<TrialOutcome> {
    spec.validate()?;
    performer.elbow.validate()?;
    performer.stick.validate()?;
    performer.gains.validate()?;
    let hits = reference_hits(&spec.motif, spec.tempo, spec.measures_performed);
    let times: Vec<f64> = hits.iter().map(|h| h.0).collect();
    let plan = plan_onsets(&times, &performer.elbow)?;
    let gains = performer.gains_for(spec.condition, required_rebound_interval(&plan))?;

    let elbow = &performer.elbow;
    let timing = Normal::new(0.0, elbow.timing_jitter_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let level = Normal::new(0.0, elbow.velocity_jitter_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nominal = performer.stick.nominal_strike_speed;

    let mut strikes: Vec<StrikeEvent> = Vec::with_capacity(hits.len());
    for (&(t_ref, weight), stroke) in hits.iter().zip(&plan) {
        // both draws for every hit keep the random stream aligned across conditions
        let dt = timing.sample(&mut rng);
        let dv = level.sample(&mut rng);
        let strike = match stroke {
            Stroke::Elbow => StrikeEvent {
                time: t_ref + dt,
                velocity: (weight * nominal * (1.0 + dv)).max(1e-3 * nominal),
            },
            Stroke::Bounce { interval } => {
                let prime = *strikes.last().expect("a bounce always follows an elbow stroke");
                let rebound = stick::first_rebound(&performer.stick, &gains, prime.velocity)?.ok_or(
                    Error::InfeasiblePlan {
                        required: *interval,
                        achievable: f64::INFINITY,
                    },
                )?;
                StrikeEvent {
                    time: prime.time + rebound.time,
                    velocity: rebound.velocity,
                }
            }
        };
        strikes.push(strike);
    }
    strikes.sort_by(|a, b| a.time.total_cmp(&b.time));
    for i in 1..strikes.len() {
        if strikes[i].time <= strikes[i - 1].time {
            strikes[i].time = strikes[i - 1].time + 1e-6;
        }
    }
    Ok(TrialOutcome {
        strikes,
        plan,
        kp: gains.kp,
    })
}
