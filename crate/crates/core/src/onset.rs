//! Transient detection on activation signals with a bounded-Q filter bank and
//! a positive-growth detection function, plus F-measure scoring.

use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::emg::ActivationSignal;
use crate::error::{Error, Result};

/// A detected transient. `velocity` is the detection-function value at the
/// onset frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetEvent {
    pub time: f64,
    pub velocity: f64,
}

impl OnsetEvent {
    pub fn new(time: f64, velocity: f64) -> Result<Self> {
        if !(time >= 0.0) || !(velocity >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "onset needs time >= 0 and velocity >= 0, got ({time}, {velocity})"
            )));
        }
        Ok(Self { time, velocity })
    }
}

pub fn onsets_to_csv(onsets: &[OnsetEvent]) -> String {
    csvio::write_time_velocity(onsets.iter().map(|o| (o.time, o.velocity)))
}

pub fn onsets_from_csv(text: &str, path: &Path) -> Result<Vec<OnsetEvent>> {
    csvio::read_time_velocity(text, path)?
        .into_iter()
        .map(|(t, v)| OnsetEvent::new(t, v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub num_bands: usize,
    /// Width of the lowest band in Hz; each following band doubles.
    pub base_bandwidth: f64,
    pub frame_size: usize,
    pub hop: usize,
    pub min_velocity: f64,
    /// Dead time after an emitted onset, seconds.
    pub min_gap: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            num_bands: 8,
            base_bandwidth: 62.5,
            frame_size: 256,
            hop: 64,
            min_velocity: 0.002,
            min_gap: 0.25,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_bands < 1 {
            return Err(Error::config("detector.num_bands", "must be >= 1"));
        }
        if !(self.base_bandwidth > 0.0) {
            return Err(Error::config("detector.base_bandwidth", "must be > 0"));
        }
        if self.frame_size < 2 {
            return Err(Error::config("detector.frame_size", "must be >= 2"));
        }
        if self.hop < 1 || self.hop > self.frame_size {
            return Err(Error::config("detector.hop", "must satisfy 1 <= hop <= frame_size"));
        }
        if !(self.min_velocity >= 0.0) {
            return Err(Error::config("detector.min_velocity", "must be >= 0"));
        }
        if !(self.min_gap >= 0.0) {
            return Err(Error::config("detector.min_gap", "must be >= 0"));
        }
        Ok(())
    }

    /// `[low, high)` edges of band `k` in Hz.
    pub fn band_edges(&self, k: usize) -> (f64, f64) {
        let w = self.base_bandwidth;
        let low = w * ((1u64 << k) as f64 - 1.0);
        let high = w * ((1u64 << (k + 1)) as f64 - 1.0);
        (low, high)
    }
}

/// Per-band power, `bands[band][frame]`, with the time stamp of each frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BandEnvelopes {
    pub bands: Vec<Vec<f64>>,
    pub frame_times: Vec<f64>,
}

impl BandEnvelopes {
    pub fn num_frames(&self) -> usize {
        self.frame_times.len()
    }

    pub fn total_power(&self, frame: usize) -> f64 {
        self.bands.iter().map(|b| b[frame]).sum()
    }
}

/// Splits the signal into Hann-windowed frames and sums spectral power into
/// bands whose widths double above the lowest band.
///
/// Frame `i` covers samples `[i*hop, i*hop + frame_size)` and is stamped with
/// the time of its center sample.
pub fn bounded_q_decompose(signal: &ActivationSignal, config: &DetectorConfig) -> Result<BandEnvelopes> {
    config.validate()?;
    let x = &signal.samples;
    let n = config.frame_size;
    if x.len() < n {
        return Err(Error::SignalTooShort { len: x.len(), frame: n });
    }
    let fs = signal.sample_rate;
    let frames = 1 + (x.len() - n) / config.hop;

    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let win_energy: f64 = window.iter().map(|w| w * w).sum();
    let norm = 1.0 / (n as f64 * win_energy);

    // bin -> (band, one-sided weight)
    let half = n / 2;
    let bin_map: Vec<Option<(usize, f64)>> = (0..=half)
        .map(|j| {
            let f = j as f64 * fs / n as f64;
            let band = (0..config.num_bands).find(|&k| {
                let (lo, hi) = config.band_edges(k);
                f >= lo && f < hi
            })?;
            let weight = if j == 0 || (n.is_multiple_of(2) && j == half) { 1.0 } else { 2.0 };
            Some((band, weight))
        })
        .collect();

    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut bands = vec![vec![0.0; frames]; config.num_bands];
    let mut frame_times = Vec::with_capacity(frames);
    for (f, frame) in x.windows(n).step_by(config.hop).take(frames).enumerate() {
        frame_times.push((f * config.hop + n / 2) as f64 / fs);
        if frame.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (b, (&v, &w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            *b = Complex::new(v * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (j, slot) in bin_map.iter().enumerate() {
            if let Some((band, weight)) = *slot {
                bands[band][f] += weight * buf[j].norm_sqr() * norm;
            }
        }
    }
    Ok(BandEnvelopes { bands, frame_times })
}

/// Per-frame detection function: summed half-wave-rectified band power
/// increase relative to the previous frame (silence before frame 0).
pub fn growth_function(env: &BandEnvelopes) -> Vec<f64> {
    (0..env.num_frames())
        .map(|f| {
            env.bands
                .iter()
                .map(|b| {
                    let prev = if f == 0 { 0.0 } else { b[f - 1] };
                    (b[f] - prev).max(0.0)
                })
                .sum()
        })
        .collect()
}

/// Emits an onset at every local maximum of the growth function that exceeds
/// `min_velocity`, skipping candidates closer than `min_gap` to the last
/// emitted onset.
pub fn detect_onsets(env: &BandEnvelopes, config: &DetectorConfig) -> Result<Vec<OnsetEvent>> {
    config.validate()?;
    if env.bands.is_empty() || env.num_frames() == 0 {
        return Err(Error::InvalidInput("band matrix is empty".into()));
    }
    if env.bands.iter().any(|b| b.len() != env.num_frames()) {
        return Err(Error::InvalidInput("band rows and frame times disagree in length".into()));
    }
    let g = growth_function(env);
    let mut out: Vec<OnsetEvent> = Vec::new();
    for i in 0..g.len() {
        let prev = if i == 0 { 0.0 } else { g[i - 1] };
        let next = g.get(i + 1).copied().unwrap_or(0.0);
        if !(g[i] > prev && g[i] >= next && g[i] > config.min_velocity) {
            continue;
        }
        let t = env.frame_times[i];
        if let Some(last) = out.last() {
            if t - last.time < config.min_gap {
                continue;
            }
        }
        out.push(OnsetEvent { time: t, velocity: g[i] });
    }
    Ok(out)
}

/// Decomposition followed by detection.
pub fn detect(signal: &ActivationSignal, config: &DetectorConfig) -> Result<Vec<OnsetEvent>> {
    let env = bounded_q_decompose(signal, config)?;
    detect_onsets(&env, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl DetectionScore {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        if tp + fp + fn_ == 0 {
            return Self {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
                ..Default::default()
            };
        }
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
        }
    }

    /// Pools counts (micro-average).
    pub fn merge(&self, other: &Self) -> Self {
        Self::from_counts(
            self.true_positives + other.true_positives,
            self.false_positives + other.false_positives,
            self.false_negatives + other.false_negatives,
        )
    }
}

/// Greedy earliest-first one-to-one matching within `tolerance` seconds.
/// Both inputs are taken in time order.
pub fn score_detection(detected: &[OnsetEvent], labels: &[f64], tolerance: f64) -> Result<DetectionScore> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidInput("tolerance must be > 0".into()));
    }
    let mut det: Vec<f64> = detected.iter().map(|o| o.time).collect();
    det.sort_by(f64::total_cmp);
    let mut lab = labels.to_vec();
    lab.sort_by(f64::total_cmp);
    let mut tp = 0;
    let mut j = 0;
    for &d in &det {
        while j < lab.len() && lab[j] < d - tolerance {
            j += 1;
        }
        if j < lab.len() && (lab[j] - d).abs() <= tolerance {
            tp += 1;
            j += 1;
        }
    }
    Ok(DetectionScore::from_counts(tp, det.len() - tp, lab.len() - tp))
}
