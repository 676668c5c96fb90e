//! EMG conditioning: differential amplification, rectification, RMS smoothing,
//! a three-stage biquad cascade and a noise gate.
//!
//! The stage order is fixed:
//!
//! ```text
//! ch_a, ch_b -> |gain * (a - b)| -> RMS MAF -> LPF -> notch -> HPF -> clamp(>= 0) -> gate
//! ```
//!
//! Everything here is a pure function over borrowed input.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};

/// Lowest sample rate accepted for an [`EmgRecording`].
pub const MIN_SAMPLE_RATE: u32 = 2000;

/// Multichannel sampled EMG with optional ground-truth onset labels (seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct EmgRecording {
    sample_rate: u32,
    channels: Vec<Vec<f64>>,
    labels: Option<Vec<f64>>,
}

impl EmgRecording {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>, labels: Option<Vec<f64>>) -> Result<Self> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::InvalidInput(format!(
                "sample rate {sample_rate} Hz is below the {MIN_SAMPLE_RATE} Hz minimum"
            )));
        }
        if channels.is_empty() {
            return Err(Error::InvalidInput("recording has no channels".into()));
        }
        let len = channels[0].len();
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch {
                left: len,
                right: bad.len(),
            });
        }
        let duration = len as f64 / sample_rate as f64;
        if let Some(labels) = &labels {
            if labels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput("labels must be strictly increasing".into()));
            }
            if labels.iter().any(|&t| !(0.0..duration).contains(&t)) {
                return Err(Error::InvalidInput(format!(
                    "labels must lie within the recording duration [0, {duration})"
                )));
            }
        }
        Ok(Self {
            sample_rate,
            channels,
            labels,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, idx: usize) -> Option<&[f64]> {
        self.channels.get(idx).map(Vec::as_slice)
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// Serializes as `# sample_rate=<Hz>` followed by `time,ch0,ch1[,label]` rows.
    pub fn to_csv_string(&self) -> String {
        let fs = self.sample_rate as f64;
        let mut out = format!("# sample_rate={}\n", self.sample_rate);
        out.push_str("time");
        for c in 0..self.channels.len() {
            out.push_str(&format!(",ch{c}"));
        }
        let label_idx: Option<Vec<usize>> = self
            .labels
            .as_ref()
            .map(|l| l.iter().map(|&t| (t * fs).round() as usize).collect());
        if label_idx.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        let mut next_label = 0;
        for i in 0..self.len() {
            out.push_str(&format!("{}", i as f64 / fs));
            for ch in &self.channels {
                out.push_str(&format!(",{}", ch[i]));
            }
            if let Some(idx) = &label_idx {
                let hit = next_label < idx.len() && idx[next_label] == i;
                if hit {
                    next_label += 1;
                }
                out.push_str(if hit { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| csvio::parse_error(origin, 1, "empty file"))?;
        let sample_rate: u32 = first
            .trim()
            .strip_prefix("# sample_rate=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| csvio::parse_error(origin, 1, "expected `# sample_rate=<Hz>`"))?;
        let (_, header) = lines
            .next()
            .ok_or_else(|| csvio::parse_error(origin, 2, "missing header"))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"time") {
            return Err(csvio::parse_error(origin, 2, "header must start with `time`"));
        }
        let has_label = cols.last() == Some(&"label");
        let n_ch = cols.len() - 1 - usize::from(has_label);
        for (c, name) in cols[1..=n_ch].iter().enumerate() {
            if *name != format!("ch{c}") {
                return Err(csvio::parse_error(origin, 2, format!("unexpected column `{name}`")));
            }
        }
        let mut channels = vec![Vec::new(); n_ch];
        let mut label_samples = Vec::new();
        let mut row = 0usize;
        for (ln, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(csvio::parse_error(
                    origin,
                    ln + 1,
                    format!("expected {} fields, found {}", cols.len(), fields.len()),
                ));
            }
            for (c, ch) in channels.iter_mut().enumerate() {
                ch.push(csvio::parse_f64(fields[c + 1], origin, ln + 1)?);
            }
            if has_label {
                match fields[n_ch + 1] {
                    "1" => label_samples.push(row),
                    "0" => {}
                    other => {
                        return Err(csvio::parse_error(
                            origin,
                            ln + 1,
                            format!("label must be 0 or 1, found `{other}`"),
                        ))
                    }
                }
            }
            row += 1;
        }
        let fs = sample_rate as f64;
        let labels = has_label.then(|| label_samples.iter().map(|&i| i as f64 / fs).collect());
        Self::new(sample_rate, channels, labels)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, path)
    }
}

/// Output of the conditioning chain; all samples are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSignal {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl ActivationSignal {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if samples.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::InvalidInput("activation samples must be >= 0".into()));
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Parameters of the conditioning chain. Frequencies in Hz, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterChainConfig {
    pub diff_gain: f64,
    pub maf_window: f64,
    pub lpf_cutoff: f64,
    pub notch_center: f64,
    pub notch_q: f64,
    pub hpf_cutoff: f64,
    pub gate_threshold: f64,
    pub gate_release: f64,
}

impl Default for FilterChainConfig {
    fn default() -> Self {
        Self {
            diff_gain: 4.0,
            maf_window: 0.020,
            lpf_cutoff: 520.0,
            notch_center: 180.0,
            notch_q: 1.5,
            hpf_cutoff: 25.0,
            gate_threshold: 0.1,
            gate_release: 0.050,
        }
    }
}

impl FilterChainConfig {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        if !(self.diff_gain > 0.0) {
            return Err(Error::config("filter.diff_gain", "must be > 0"));
        }
        if !(self.maf_window > 0.0) {
            return Err(Error::config("filter.maf_window", "must be > 0"));
        }
        if !(self.notch_q > 0.0) {
            return Err(Error::config("filter.notch_q", "must be > 0"));
        }
        if !(self.gate_threshold >= 0.0) {
            return Err(Error::config("filter.gate_threshold", "must be >= 0"));
        }
        if !(self.gate_release >= 0.0) {
            return Err(Error::config("filter.gate_release", "must be >= 0"));
        }
        if !(self.hpf_cutoff > 0.0 && self.hpf_cutoff < self.notch_center) {
            return Err(Error::config(
                "filter.hpf_cutoff",
                "must satisfy 0 < hpf_cutoff < notch_center",
            ));
        }
        if !(self.notch_center < self.lpf_cutoff) {
            return Err(Error::config(
                "filter.notch_center",
                "must satisfy notch_center < lpf_cutoff",
            ));
        }
        if !(self.lpf_cutoff < nyquist) {
            return Err(Error::config(
                "filter.lpf_cutoff",
                format!("must be below the Nyquist frequency {nyquist} Hz"),
            ));
        }
        Ok(())
    }
}

/// `|gain * (a[i] - b[i])|`.
pub fn differential_rectify(chan_a: &[f64], chan_b: &[f64], gain: f64) -> Result<Vec<f64>> {
    if chan_a.len() != chan_b.len() {
        return Err(Error::LengthMismatch {
            left: chan_a.len(),
            right: chan_b.len(),
        });
    }
    if !(gain > 0.0) {
        return Err(Error::InvalidInput("gain must be > 0".into()));
    }
    Ok(chan_a
        .iter()
        .zip(chan_b)
        .map(|(a, b)| (gain * (a - b)).abs())
        .collect())
}

/// Trailing-window RMS. Leading samples use whatever part of the window is
/// available.
pub fn rms_moving_average(signal: &[f64], window: f64, sample_rate: f64) -> Result<Vec<f64>> {
    if !(window > 0.0) {
        return Err(Error::InvalidInput("MAF window must be > 0".into()));
    }
    let width = (window * sample_rate).round() as usize;
    if width < 1 {
        return Err(Error::InvalidInput(format!(
            "MAF window {window}s spans less than one sample at {sample_rate} Hz"
        )));
    }
    // Running sum of squares, recomputed exactly every `width` samples to
    // keep cancellation error from accumulating.
    let mut out = Vec::with_capacity(signal.len());
    let mut acc = 0.0;
    for i in 0..signal.len() {
        acc += signal[i] * signal[i];
        if i >= width {
            acc -= signal[i - width] * signal[i - width];
        }
        if i % width == width - 1 {
            let start = (i + 1).saturating_sub(width);
            acc = signal[start..=i].iter().map(|x| x * x).sum();
        }
        let n = (i + 1).min(width) as f64;
        out.push((acc.max(0.0) / n).sqrt());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Notch,
}

/// Normalized (a0 = 1) second-order section:
/// `y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoefficients {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoefficients {
    pub const IDENTITY: Self = Self {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    /// Both poles of `z^2 + a1 z + a2` strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// `|H(e^{jw})|` at `freq` Hz.
    pub fn magnitude_at(&self, freq: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq / sample_rate;
        let (c1, s1) = (w.cos(), w.sin());
        let (c2, s2) = ((2.0 * w).cos(), (2.0 * w).sin());
        // numerator and denominator evaluated at z^-1 = e^{-jw}
        let nr = self.b0 + self.b1 * c1 + self.b2 * c2;
        let ni = -(self.b1 * s1 + self.b2 * s2);
        let dr = 1.0 + self.a1 * c1 + self.a2 * c2;
        let di = -(self.a1 * s1 + self.a2 * s2);
        ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
    }

    /// Direct-form-I filtering from rest.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        input
            .iter()
            .map(|&x| {
                let y = self.b0 * x + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
                x2 = x1;
                x1 = x;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }
}

/// Bilinear-transform second-order designs (RBJ cookbook forms).
///
/// `q` is the resonance for lowpass/highpass (use `FRAC_1_SQRT_2` for a
/// Butterworth response) and the selectivity for the notch.
pub fn design_biquad(kind: FilterKind, freq: f64, q: f64, sample_rate: f64) -> Result<BiquadCoefficients> {
    let nyquist = sample_rate / 2.0;
    if !(freq > 0.0 && freq < nyquist) {
        return Err(Error::FrequencyOutOfRange { freq, nyquist });
    }
    if !(q > 0.0) {
        return Err(Error::InvalidInput("filter Q must be > 0".into()));
    }
    let w0 = 2.0 * PI * freq / sample_rate;
    let (cw, sw) = (w0.cos(), w0.sin());
    let alpha = sw / (2.0 * q);
    let (b0, b1, b2) = match kind {
        FilterKind::Lowpass => ((1.0 - cw) / 2.0, 1.0 - cw, (1.0 - cw) / 2.0),
        FilterKind::Highpass => ((1.0 + cw) / 2.0, -(1.0 + cw), (1.0 + cw) / 2.0),
        FilterKind::Notch => (1.0, -2.0 * cw, 1.0),
    };
    let a0 = 1.0 + alpha;
    Ok(BiquadCoefficients {
        b0: b0 / a0,
        b1: b1 / a0,
        b2: b2 / a0,
        a1: -2.0 * cw / a0,
        a2: (1.0 - alpha) / a0,
    })
}

/// The LPF -> notch -> HPF section of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCascade {
    pub lowpass: BiquadCoefficients,
    pub notch: BiquadCoefficients,
    pub highpass: BiquadCoefficients,
}

impl FilterCascade {
    pub fn from_config(config: &FilterChainConfig, sample_rate: f64) -> Result<Self> {
        use std::f64::consts::FRAC_1_SQRT_2;
        Ok(Self {
            lowpass: design_biquad(FilterKind::Lowpass, config.lpf_cutoff, FRAC_1_SQRT_2, sample_rate)?,
            notch: design_biquad(FilterKind::Notch, config.notch_center, config.notch_q, sample_rate)?,
            highpass: design_biquad(FilterKind::Highpass, config.hpf_cutoff, FRAC_1_SQRT_2, sample_rate)?,
        })
    }

    /// Same cascade with the notch replaced by a pass-through.
    pub fn without_notch(&self) -> Self {
        Self {
            notch: BiquadCoefficients::IDENTITY,
            ..self.clone()
        }
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let y = self.lowpass.filter(input);
        let y = self.notch.filter(&y);
        self.highpass.filter(&y)
    }

    pub fn magnitude_at(&self, freq: f64, sample_rate: f64) -> f64 {
        self.lowpass.magnitude_at(freq, sample_rate)
            * self.notch.magnitude_at(freq, sample_rate)
            * self.highpass.magnitude_at(freq, sample_rate)
    }
}

/// Zeroes samples while the gate is closed. The gate opens on any sample at
/// or above `threshold` and stays open for `release` seconds after the last
/// such sample.
pub fn noise_gate(signal: &[f64], threshold: f64, release: f64, sample_rate: f64) -> Vec<f64> {
    let hold = (release * sample_rate).round() as usize;
    let mut remaining = 0usize;
    signal
        .iter()
        .map(|&x| {
            if x >= threshold && x > 0.0 {
                remaining = hold + 1;
            }
            if remaining > 0 {
                remaining -= 1;
                x
            } else {
                0.0
            }
        })
        .collect()
}

/// Runs the full conditioning chain on one muscle's electrode pair.
pub fn apply_chain(
    recording: &EmgRecording,
    muscle_pair: (usize, usize),
    config: &FilterChainConfig,
) -> Result<ActivationSignal> {
    let fs = recording.sample_rate() as f64;
    config.validate(fs)?;
    let missing = |i| Error::InvalidInput(format!("channel index {i} out of range"));
    let a = recording.channel(muscle_pair.0).ok_or_else(|| missing(muscle_pair.0))?;
    let b = recording.channel(muscle_pair.1).ok_or_else(|| missing(muscle_pair.1))?;
    let rectified = differential_rectify(a, b, config.diff_gain)?;
    let smoothed = rms_moving_average(&rectified, config.maf_window, fs)?;
    let filtered = FilterCascade::from_config(config, fs)?.process(&smoothed);
    let clamped: Vec<f64> = filtered.into_iter().map(|x| x.max(0.0)).collect();
    let gated = noise_gate(&clamped, config.gate_threshold, config.gate_release, fs);
    ActivationSignal::new(fs, gated)
}

/// Shape of each synthetic muscle burst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurstParams {
    pub duration: f64,
    pub amplitude: f64,
    pub carrier_low: f64,
    pub carrier_high: f64,
    pub attack: f64,
    pub release: f64,
}

impl Default for BurstParams {
    fn default() -> Self {
        Self {
            duration: 0.15,
            amplitude: 1.0,
            carrier_low: 30.0,
            carrier_high: 300.0,
            attack: 0.010,
            release: 0.040,
        }
    }
}

/// Line interference. Harmonic `k` (0-based) sits at `(k + 1) * line_hz`.
/// `imbalance` scales the copy on the second channel by `1 - imbalance`, so a
/// small residue survives the differential stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Interference {
    pub line_hz: f64,
    pub harmonics: Vec<f64>,
    pub imbalance: f64,
}

impl Default for Interference {
    fn default() -> Self {
        Self {
            line_hz: 60.0,
            harmonics: vec![0.4, 0.0, 0.3],
            imbalance: 0.05,
        }
    }
}

/// Everything needed to generate one labeled two-channel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub sample_rate: u32,
    pub duration: f64,
    pub burst_times: Vec<f64>,
    pub burst: BurstParams,
    pub interference: Interference,
    pub noise_floor: f64,
    pub seed: u64,
}

const CARRIER_COMPONENTS: usize = 16;

/// Generates a two-channel recording: interference is common mode, bursts are
/// differential (`+s/2` on ch0, `-s/2` on ch1), and each channel carries
/// independent Gaussian noise of standard deviation `noise_floor`.
///
/// Burst starts are snapped to the sample grid; the labels are those snapped
/// times.
pub fn synth_emg(spec: &SynthSpec) -> Result<EmgRecording> {
    if spec.sample_rate < MIN_SAMPLE_RATE {
        return Err(Error::InvalidInput(format!(
            "sample rate must be at least {MIN_SAMPLE_RATE} Hz"
        )));
    }
    let burst = &spec.burst;
    if !(burst.duration > 0.0) || !(burst.amplitude >= 0.0) {
        return Err(Error::InvalidInput("burst duration must be > 0 and amplitude >= 0".into()));
    }
    if !(burst.carrier_low > 0.0 && burst.carrier_low <= burst.carrier_high) {
        return Err(Error::InvalidInput("carrier band must satisfy 0 < low <= high".into()));
    }
    if !(spec.noise_floor >= 0.0) || !(spec.duration > 0.0) {
        return Err(Error::InvalidInput("noise floor must be >= 0 and duration > 0".into()));
    }
    let fs = spec.sample_rate as f64;
    let n = (spec.duration * fs).round() as usize;
    let mut times = spec.burst_times.clone();
    times.sort_by(f64::total_cmp);
    for w in times.windows(2) {
        if w[0] + burst.duration > w[1] {
            return Err(Error::OverlappingBursts {
                first: w[0],
                second: w[1],
            });
        }
    }
    let starts: Vec<usize> = times.iter().map(|&t| (t * fs).round() as usize).collect();
    let burst_len = (burst.duration * fs).round() as usize;
    if let Some(&last) = starts.last() {
        if times[0] < 0.0 || last + burst_len > n {
            return Err(Error::InvalidInput("bursts must lie inside the recording".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut differential = vec![0.0; n];
    let comp_amp = burst.amplitude * (2.0 / CARRIER_COMPONENTS as f64).sqrt();
    for &start in &starts {
        let comps: Vec<(f64, f64)> = (0..CARRIER_COMPONENTS)
            .map(|_| {
                let f = if burst.carrier_high > burst.carrier_low {
                    rng.random_range(burst.carrier_low..burst.carrier_high)
                } else {
                    burst.carrier_low
                };
                (f, rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        for k in 0..burst_len {
            let t = k as f64 / fs;
            let env = burst_envelope(t, burst);
            if env == 0.0 {
                continue;
            }
            let carrier: f64 = if burst.carrier_high > burst.carrier_low {
                comps.iter().map(|&(f, ph)| (2.0 * PI * f * t + ph).sin()).sum::<f64>() * comp_amp
            } else {
                burst.amplitude * (2.0 * PI * burst.carrier_low * t).sin()
            };
            differential[start + k] += env * carrier;
        }
    }

    let noise = Normal::new(0.0, spec.noise_floor.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let ifc = &spec.interference;
    let mut ch0 = Vec::with_capacity(n);
    let mut ch1 = Vec::with_capacity(n);
    for (i, d) in differential.iter().enumerate() {
        let t = i as f64 / fs;
        let line: f64 = ifc
            .harmonics
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * PI * ifc.line_hz * (k + 1) as f64 * t).sin())
            .sum();
        let (n0, n1) = if spec.noise_floor > 0.0 {
            (noise.sample(&mut rng), noise.sample(&mut rng))
        } else {
            (0.0, 0.0)
        };
        ch0.push(line + 0.5 * d + n0);
        ch1.push(line * (1.0 - ifc.imbalance) - 0.5 * d + n1);
    }
    let labels = starts.iter().map(|&s| s as f64 / fs).collect();
    EmgRecording::new(spec.sample_rate, vec![ch0, ch1], Some(labels))
}

fn burst_envelope(t: f64, p: &BurstParams) -> f64 {
    if t < 0.0 || t >= p.duration {
        return 0.0;
    }
    let rise = if p.attack > 0.0 && t < p.attack {
        0.5 - 0.5 * (PI * t / p.attack).cos()
    } else {
        1.0
    };
    let tail = p.duration - t;
    let fall = if p.release > 0.0 && tail < p.release {
        0.5 - 0.5 * (PI * tail / p.release).cos()
    } else {
        1.0
    };
    rise * fall
}
