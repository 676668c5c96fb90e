//! Synchronization scoring: onset envelopes compared by dynamic time warping,
//! the tempo × motif × condition grid, and paired t-tests per tempo.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::csvio;
use crate::error::{Error, Result};
use crate::performer::{self, Condition, Motif, Performer, TrialSpec};
use crate::stick::StrikeEvent;

pub const DEFAULT_ENVELOPE_RATE: f64 = 100.0;
/// Full width of the half-cosine pulse drawn for each strike, s.
pub const PULSE_WIDTH: f64 = 0.020;

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub rate: f64,
    pub samples: Vec<f64>,
}

impl Envelope {
    pub fn new(rate: f64, samples: Vec<f64>) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidInput(format!("envelope rate must be > 0, got {rate}")));
        }
        if let Some(x) = samples.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput(format!("envelope sample {x} is not a finite value >= 0")));
        }
        Ok(Self { rate, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Sum of 20 ms half-cosine pulses, one per strike, peaking at the strike
/// time with height `velocity`. Covers `[0, duration]`; pulse tails outside
/// that span are dropped.
pub fn onset_envelope(strikes: &[StrikeEvent], rate: f64, duration: f64) -> Result<Envelope> {
    if !(duration > 0.0) {
        return Err(Error::InvalidInput(format!("envelope duration must be > 0, got {duration}")));
    }
    let n = (duration * rate).round() as usize + 1;
    let mut samples = vec![0.0; n];
    let half = PULSE_WIDTH / 2.0;
    for s in strikes {
        if !(s.velocity >= 0.0) {
            return Err(Error::InvalidInput(format!("strike velocity {} is negative", s.velocity)));
        }
        let first = ((s.time - half) * rate).ceil().max(0.0) as usize;
        let last = (((s.time + half) * rate).floor().max(-1.0) as isize).min(n as isize - 1);
        for k in first as isize..=last {
            let u = k as f64 / rate - s.time;
            if u.abs() < half {
                samples[k as usize] += s.velocity * (std::f64::consts::PI * u / PULSE_WIDTH).cos();
            }
        }
    }
    Envelope::new(rate, samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub total_cost: f64,
    pub path: Vec<(usize, usize)>,
    pub normalized_distance: f64,
}

/// Unconstrained DTW with absolute-difference cost.
pub fn dtw_distance(a: &Envelope, b: &Envelope) -> Result<DtwResult> {
    dtw_banded(a, b, usize::MAX)
}

/// DTW restricted to `|i - j| <= radius` samples (widened to the length
/// difference so the end cell stays reachable).
pub fn dtw_banded(a: &Envelope, b: &Envelope, radius: usize) -> Result<DtwResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("DTW needs two non-empty envelopes".into()));
    }
    if a.rate != b.rate {
        return Err(Error::InvalidInput(format!(
            "envelope rates differ: {} vs {}",
            a.rate, b.rate
        )));
    }
    let (x, y) = (&a.samples, &b.samples);
    let (n, m) = (x.len(), y.len());
    let r = radius.max(n.abs_diff(m));
    let lo = |i: usize| i.saturating_sub(r);
    let hi = |i: usize| (i.saturating_add(r)).min(m - 1);

    // row i stores columns lo(i)..=hi(i)
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let at = |rows: &Vec<Vec<f64>>, i: usize, j: usize| -> f64 {
        if j < lo(i) || j > hi(i) {
            f64::INFINITY
        } else {
            rows[i][j - lo(i)]
        }
    };
    for i in 0..n {
        let mut row = Vec::with_capacity(hi(i) - lo(i) + 1);
        for j in lo(i)..=hi(i) {
            let local = (x[i] - y[j]).abs();
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { at(&rows, i - 1, j) } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { at(&rows, i - 1, j - 1) } else { f64::INFINITY };
                let left = if j > lo(i) { row[j - lo(i) - 1] } else { f64::INFINITY };
                up.min(diag).min(left)
            };
            row.push(local + prev);
        }
        rows.push(row);
    }
    let total_cost = at(&rows, n - 1, m - 1);

    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        // ties prefer the diagonal, then the shorter-sequence axis
        let mut best = (f64::INFINITY, (i, j));
        if i > 0 && j > 0 {
            best = (at(&rows, i - 1, j - 1), (i - 1, j - 1));
        }
        if i > 0 && at(&rows, i - 1, j) < best.0 {
            best = (at(&rows, i - 1, j), (i - 1, j));
        }
        if j > 0 && at(&rows, i, j - 1) < best.0 {
            best = (at(&rows, i, j - 1), (i, j - 1));
        }
        (i, j) = best.1;
        path.push((i, j));
    }
    path.reverse();
    let normalized_distance = total_cost / path.len() as f64;
    Ok(DtwResult {
        total_cost,
        path,
        normalized_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub envelope_rate: f64,
    /// Largest time warp DTW may apply, s.
    pub warp_window: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            envelope_rate: 1000.0,
            warp_window: 0.002,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.envelope_rate > 0.0 && self.envelope_rate.is_finite()) {
            return Err(Error::config("scoring.envelope_rate", "must be > 0"));
        }
        if !(self.warp_window >= 0.0) {
            return Err(Error::config("scoring.warp_window", "must be >= 0"));
        }
        Ok(())
    }

    fn radius(&self) -> usize {
        (self.warp_window * self.envelope_rate).round() as usize
    }
}

/// Reference hits as unit-scale strikes (velocity = accent weight).
pub fn reference_strikes(motif: &Motif, tempo: f64, measures: u32) -> Vec<StrikeEvent> {
    performer::reference_hits(motif, tempo, measures)
        .into_iter()
        .map(|(time, velocity)| StrikeEvent { time, velocity })
        .collect()
}

/// Normalized DTW distance between a performance and the reference it
/// follows. Strike velocities are scaled by the nominal strike speed.
pub fn score_trial(
    reference: &[StrikeEvent],
    performed: &[StrikeEvent],
    nominal_speed: f64,
    span: f64,
    scoring: &ScoringConfig,
) -> Result<f64> {
    let scaled: Vec<StrikeEvent> = performed
        .iter()
        .map(|s| StrikeEvent {
            time: s.time,
            velocity: s.velocity / nominal_speed,
        })
        .collect();
    let end = span + PULSE_WIDTH;
    let a = onset_envelope(reference, scoring.envelope_rate, end)?;
    let b = onset_envelope(&scaled, scoring.envelope_rate, end)?;
    Ok(dtw_banded(&a, &b, scoring.radius())?.normalized_distance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrial {
    pub reference: Vec<StrikeEvent>,
    pub strikes: Vec<StrikeEvent>,
    pub kp: f64,
    pub distance: f64,
}

/// Performs one trial and scores it against its reference.
pub fn run_trial(spec: &TrialSpec, performer: &Performer, scoring: &ScoringConfig) -> Result<ScoredTrial> {
    scoring.validate()?;
    let out = performer::perform_trial(spec, performer)?;
    let reference = reference_strikes(&spec.motif, spec.tempo, spec.measures_performed);
    let span = spec.measures_performed as f64 * 4.0 * 60.0 / spec.tempo;
    let distance = score_trial(
        &reference,
        &out.strikes,
        performer.stick.nominal_strike_speed,
        span,
        scoring,
    )?;
    Ok(ScoredTrial {
        reference,
        strikes: out.strikes,
        kp: out.kp,
        distance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedTest {
    pub n: usize,
    pub mean_difference: f64,
    pub t: f64,
    pub p_value: f64,
    pub degenerate: bool,
}

/// Two-sided paired t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("paired t-test needs >= 2 pairs, got {n}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Ok(PairedTest {
            n,
            mean_difference: mean,
            t: 0.0,
            p_value: 1.0,
            degenerate: true,
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(PairedTest {
        n,
        mean_difference: mean,
        t,
        p_value: p,
        degenerate: false,
    })
}

pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons as f64).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub tempi: Vec<f64>,
    pub trials_per_cell: u32,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            tempi: (0..13).map(|i| 90.0 + 10.0 * i as f64).collect(),
            trials_per_cell: 20,
            seed: 2024,
            alpha: 0.05,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tempi.is_empty() {
            return Err(Error::config("grid.tempi", "needs at least one tempo"));
        }
        for &t in &self.tempi {
            if !(performer::MIN_TEMPO..=performer::MAX_TEMPO).contains(&t) {
                return Err(Error::config(
                    "grid.tempi",
                    format!("{t} bpm is outside [{}, {}]", performer::MIN_TEMPO, performer::MAX_TEMPO),
                ));
            }
        }
        if self.trials_per_cell < 2 {
            return Err(Error::config("grid.trials_per_cell", "must be >= 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("grid.alpha", "must be in (0, 1)"));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one (tempo, motif, trial) cell. Independent of how many trials
/// or tempi the grid has, and shared by both conditions so trials pair up.
pub fn trial_seed(base: u64, tempo: f64, motif: &str, trial: u32) -> u64 {
    let mut h = splitmix64(base);
    h = splitmix64(h ^ tempo.to_bits());
    for b in motif.bytes() {
        h = splitmix64(h ^ b as u64);
    }
    splitmix64(h ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDistance {
    pub bpm: f64,
    pub motif: String,
    pub trial: u32,
    pub spring: f64,
    pub electro: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub bpm: f64,
    pub motif: String,
    pub trial: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TempoRow {
    pub bpm: f64,
    pub spring_mean: f64,
    pub electro_mean: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub degenerate: bool,
    pub significant: bool,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: Vec<TempoRow>,
    pub trials: Vec<TrialDistance>,
    pub failures: Vec<CellFailure>,
}

impl GridResult {
    pub fn row(&self, bpm: f64) -> Option<&TempoRow> {
        self.rows.iter().find(|r| r.bpm == bpm)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bpm,spring_mean,electro_mean,p_adjusted,significant\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.bpm, r.spring_mean, r.electro_mean, r.p_adjusted, r.significant);
        }
        s
    }

    pub fn trials_csv(&self) -> String {
        let mut s = String::from("bpm,motif,trial,spring,electro\n");
        for t in &self.trials {
            let _ = writeln!(s, "{},{},{},{},{}", t.bpm, t.motif, t.trial, t.spring, t.electro);
        }
        s
    }
}

/// Parses the per-tempo CSV written by [`GridResult::to_csv`]. Fields the
/// CSV does not carry (raw p, pair count) are left at neutral values.
pub fn grid_rows_from_csv(text: &str, path: &Path) -> Result<Vec<TempoRow>> {
    let (_, rows) = csvio::read_table(text, "bpm,spring_mean,electro_mean,p_adjusted,significant", path)?;
    rows.into_iter()
        .map(|(ln, f)| {
            let significant = match f[4].trim() {
                "true" => true,
                "false" => false,
                other => return Err(csvio::parse_error(path, ln, format!("invalid flag `{other}`"))),
            };
            let p_adjusted = csvio::parse_f64(f[3], path, ln)?;
            Ok(TempoRow {
                bpm: csvio::parse_f64(f[0], path, ln)?,
                spring_mean: csvio::parse_f64(f[1], path, ln)?,
                electro_mean: csvio::parse_f64(f[2], path, ln)?,
                p_value: p_adjusted,
                p_adjusted,
                degenerate: false,
                significant,
                pairs: 0,
            })
        })
        .collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Runs every (tempo, motif, trial) for both conditions and tests the
/// paired distances per tempo. Cells run in parallel on the current rayon
/// pool; results are collected in grid order, so output does not depend on
/// scheduling.
pub fn run_grid(
    motifs: &[Motif],
    grid: &GridConfig,
    performer: &Performer,
    scoring: &ScoringConfig,
) -> Result<GridResult> {
    run_grid_with_progress(motifs, grid, performer, scoring, &|_, _| {})
}

/// [`run_grid`] that calls `progress(done, total)` as cells finish.
pub fn run_grid_with_progress(
    motifs: &[Motif],
    grid: &GridConfig,
    performer: &Performer,
    scoring: &ScoringConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<GridResult> {
    grid.validate()?;
    scoring.validate()?;
    if motifs.is_empty() {
        return Err(Error::config("motifs", "needs at least one motif"));
    }
    let cells: Vec<(f64, &Motif, u32)> = grid
        .tempi
        .iter()
        .flat_map(|&bpm| motifs.iter().flat_map(move |m| (0..grid.trials_per_cell).map(move |t| (bpm, m, t))))
        .collect();

    let done = AtomicUsize::new(0);
    let outcomes: Vec<std::result::Result<TrialDistance, CellFailure>> = cells
        .par_iter()
        .map(|&(bpm, motif, trial)| {
            let seed = trial_seed(grid.seed, bpm, &motif.name, trial);
            let run = |condition| {
                let spec = TrialSpec::new(motif.clone(), bpm, condition, seed);
                run_trial(&spec, performer, scoring).map(|r| r.distance)
            };
            let outcome = match (run(Condition::Spring), run(Condition::Electromechanical)) {
                (Ok(spring), Ok(electro)) => Ok(TrialDistance {
                    bpm,
                    motif: motif.name.clone(),
                    trial,
                    spring,
                    electro,
                }),
                (Err(e), _) | (_, Err(e)) => Err(CellFailure {
                    bpm,
                    motif: motif.name.clone(),
                    trial,
                    message: e.to_string(),
                }),
            };
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, cells.len());
            outcome
        })
        .collect();

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(t) => trials.push(t),
            Err(f) => failures.push(f),
        }
    }

    let m = grid.tempi.len();
    let mut rows = Vec::with_capacity(m);
    for &bpm in &grid.tempi {
        let cell: Vec<&TrialDistance> = trials.iter().filter(|t| t.bpm == bpm).collect();
        let spring: Vec<f64> = cell.iter().map(|t| t.spring).collect();
        let electro: Vec<f64> = cell.iter().map(|t| t.electro).collect();
        let test = if cell.len() >= 2 {
            paired_t_test(&spring, &electro)?
        } else {
            PairedTest {
                n: cell.len(),
                mean_difference: f64::NAN,
                t: 0.0,
                p_value: 1.0,
                degenerate: true,
            }
        };
        let p_adjusted = bonferroni(test.p_value, m);
        rows.push(TempoRow {
            bpm,
            spring_mean: mean(spring.iter().copied()),
            electro_mean: mean(electro.iter().copied()),
            p_value: test.p_value,
            p_adjusted,
            degenerate: test.degenerate,
            significant: !test.degenerate && p_adjusted < grid.alpha,
            pairs: cell.len(),
        });
    }
    Ok(GridResult { rows, trials, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The qualitative pattern the grid is expected to show: no condition
/// effect at slow tempi, a consistent electromechanical advantage from 150
/// to 200 bpm, and no difference at 210 bpm where the spring is tuned.
/// Tempi missing from the grid are skipped.
pub fn check_trends(result: &GridResult) -> Vec<TrendCheck> {
    let slow: Vec<&TempoRow> = result.rows.iter().filter(|r| r.bpm <= 130.0).collect();
    let fast: Vec<&TempoRow> = result.rows.iter().filter(|r| (150.0..=200.0).contains(&r.bpm)).collect();
    let mut out = Vec::new();
    if !slow.is_empty() {
        let flagged: Vec<f64> = slow.iter().filter(|r| r.significant).map(|r| r.bpm).collect();
        out.push(TrendCheck {
            name: "slow tempi show no condition effect",
            passed: flagged.is_empty(),
            detail: format!("significant at {flagged:?}"),
        });
    }
    if !fast.is_empty() {
        let worse: Vec<f64> = fast.iter().filter(|r| !(r.electro_mean <= r.spring_mean)).map(|r| r.bpm).collect();
        out.push(TrendCheck {
            name: "electromechanical <= spring at 150-200 bpm",
            passed: worse.is_empty(),
            detail: format!("electromechanical worse at {worse:?}"),
        });
        let sig = fast.iter().filter(|r| r.significant).count();
        out.push(TrendCheck {
            name: "at least 4 significant tempi in 150-200 bpm",
            passed: sig >= 4,
            detail: format!("{sig} significant"),
        });
    }
    if let Some(r) = result.row(210.0) {
        let rel = (r.electro_mean - r.spring_mean).abs() / r.spring_mean.max(r.electro_mean);
        out.push(TrendCheck {
            name: "means within 10% at 210 bpm",
            passed: rel < 0.10,
            detail: format!("relative difference {:.2}%", rel * 100.0),
        });
    }
    out.push(TrendCheck {
        name: "no failed cells",
        passed: result.failures.is_empty(),
        detail: format!("{} failures", result.failures.len()),
    });
    out
}
