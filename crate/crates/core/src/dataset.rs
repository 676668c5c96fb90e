//! Labeled synthetic EMG corpora and onset-detector scoring over them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::emg::{self, BurstParams, EmgRecording, FilterChainConfig, Interference, SynthSpec};
use crate::error::{Error, Result};
use crate::onset::{self, DetectionScore, DetectorConfig};

pub const MANIFEST: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub recordings: u32,
    pub bursts_per_recording: u32,
    pub sample_rate: u32,
    /// Silence between the end of one burst and the start of the next, s.
    pub gap_range: [f64; 2],
    /// Per-recording burst amplitude range.
    pub amplitude_range: [f64; 2],
    pub noise_floor: f64,
    pub lead_in: f64,
    pub tail: f64,
    pub burst: BurstParams,
    pub interference: Interference,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            recordings: 10,
            bursts_per_recording: 20,
            sample_rate: 8000,
            gap_range: [0.25, 0.8],
            amplitude_range: [0.4, 1.4],
            noise_floor: 0.05,
            lead_in: 0.3,
            tail: 0.5,
            burst: BurstParams::default(),
            interference: Interference::default(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.recordings == 0 {
            return Err(Error::config("dataset.recordings", "must be >= 1"));
        }
        if self.bursts_per_recording == 0 {
            return Err(Error::config("dataset.bursts_per_recording", "must be >= 1"));
        }
        if self.sample_rate < emg::MIN_SAMPLE_RATE {
            return Err(Error::config(
                "dataset.sample_rate",
                format!("must be >= {} Hz", emg::MIN_SAMPLE_RATE),
            ));
        }
        let [g0, g1] = self.gap_range;
        if !(g0 > 0.0 && g0 <= g1) {
            return Err(Error::config("dataset.gap_range", "needs 0 < min <= max"));
        }
        let [a0, a1] = self.amplitude_range;
        if !(a0 > 0.0 && a0 <= a1) {
            return Err(Error::config("dataset.amplitude_range", "needs 0 < min <= max"));
        }
        if !(self.noise_floor >= 0.0) {
            return Err(Error::config("dataset.noise_floor", "must be >= 0"));
        }
        if !(self.lead_in >= 0.0 && self.tail >= 0.0) {
            return Err(Error::config("dataset.lead_in", "lead_in and tail must be >= 0"));
        }
        if !(self.burst.duration > 0.0) {
            return Err(Error::config("dataset.burst.duration", "must be > 0"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.burst.carrier_low > 0.0 && self.burst.carrier_low <= self.burst.carrier_high && self.burst.carrier_high < nyquist) {
            return Err(Error::config(
                "dataset.burst.carrier_low",
                format!("carrier band needs 0 < low <= high < {nyquist} Hz"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub file: String,
    pub amplitude: f64,
    pub seed: u64,
    pub recording: EmgRecording,
}

/// Deterministic corpus: recording `i` draws its burst times and amplitude
/// from a stream seeded by `seed` and `i`.
pub fn generate_corpus(config: &DatasetConfig, seed: u64) -> Result<Vec<CorpusEntry>> {
    config.validate()?;
    let fs = config.sample_rate as f64;
    (0..config.recordings)
        .map(|i| {
            let rec_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(rec_seed);
            let amplitude = rng.random_range(config.amplitude_range[0]..=config.amplitude_range[1]);
            let mut t = config.lead_in;
            let mut times = Vec::with_capacity(config.bursts_per_recording as usize);
            for _ in 0..config.bursts_per_recording {
                times.push((t * fs).round() / fs);
                t += config.burst.duration + rng.random_range(config.gap_range[0]..=config.gap_range[1]);
            }
            let spec = SynthSpec {
                sample_rate: config.sample_rate,
                duration: t - config.gap_range[0] + config.tail,
                burst_times: times,
                burst: BurstParams {
                    amplitude,
                    ..config.burst
                },
                interference: config.interference.clone(),
                noise_floor: config.noise_floor,
                seed: rec_seed,
            };
            Ok(CorpusEntry {
                file: format!("rec_{i:03}.csv"),
                amplitude,
                seed: rec_seed,
                recording: emg::synth_emg(&spec)?,
            })
        })
        .collect()
}

pub fn manifest_csv(entries: &[CorpusEntry]) -> String {
    let mut s = String::from("file,bursts,amplitude,seed\n");
    for e in entries {
        let bursts = e.recording.labels().map_or(0, |l| l.len());
        let _ = writeln!(s, "{},{},{},{}", e.file, bursts, e.amplitude, e.seed);
    }
    s
}

/// Writes every recording plus `manifest.csv` into `dir`.
pub fn write_corpus(entries: &[CorpusEntry], dir: &Path) -> Result<()> {
    for e in entries {
        csvio::write_atomic(&dir.join(&e.file), &e.recording.to_csv_string())?;
    }
    csvio::write_atomic(&dir.join(MANIFEST), &manifest_csv(entries))
}

/// Recording files of a corpus directory in name order.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|n| n != MANIFEST)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Channels fed to the differential stage.
    pub channels: [usize; 2],
    pub tolerance: f64,
    /// `--check` fails below this aggregate F1.
    pub min_f1: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            channels: [0, 1],
            tolerance: 0.025,
            min_f1: 0.90,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels[0] == self.channels[1] {
            return Err(Error::config("eval.channels", "needs two distinct channels"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("eval.tolerance", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.min_f1) {
            return Err(Error::config("eval.min_f1", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Filter, detect and score one labeled recording.
pub fn evaluate_recording(
    recording: &EmgRecording,
    filter: &FilterChainConfig,
    detector: &DetectorConfig,
    eval: &EvalConfig,
) -> Result<DetectionScore> {
    let labels = recording
        .labels()
        .ok_or_else(|| Error::InvalidInput("recording has no label column".into()))?;
    let activation = emg::apply_chain(recording, (eval.channels[0], eval.channels[1]), filter)?;
    let onsets = onset::detect(&activation, detector)?;
    onset::score_detection(&onsets, labels, eval.tolerance)
}

#[derive(Debug)]
pub struct CorpusReport {
    pub files: Vec<(String, Result<DetectionScore>)>,
}

impl CorpusReport {
    pub fn aggregate(&self) -> DetectionScore {
        self.files
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok())
            .fold(DetectionScore::from_counts(0, 0, 0), |acc, s| acc.merge(s))
    }

    pub fn errors(&self) -> impl Iterator<Item = (&str, &Error)> {
        self.files
            .iter()
            .filter_map(|(f, r)| r.as_ref().err().map(|e| (f.as_str(), e)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("file,tp,fp,fn,precision,recall,f1\n");
        let mut row = |name: &str, d: &DetectionScore| {
            let _ = writeln!(
                s,
                "{name},{},{},{},{},{},{}",
                d.true_positives, d.false_positives, d.false_negatives, d.precision, d.recall, d.f1
            );
        };
        for (name, r) in &self.files {
            if let Ok(d) = r {
                row(name, d);
            }
        }
        row("ALL", &self.aggregate());
        s
    }
}

/// Scores every recording under `dir`. A malformed file is reported in its
/// slot and does not stop the others.
pub fn evaluate_corpus(
    dir: &Path,
    filter: &FilterChainConfig,
    detector: &DetectorConfig,
    eval: &EvalConfig,
) -> Result<CorpusReport> {
    eval.validate()?;
    detector.validate()?;
    let files = corpus_files(dir)?
        .into_iter()
        .map(|path| {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let score = EmgRecording::read_csv(&path).and_then(|rec| evaluate_recording(&rec, filter, detector, eval));
            (name, score)
        })
        .collect();
    Ok(CorpusReport { files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetConfig {
        DatasetConfig {
            recordings: 2,
            bursts_per_recording: 4,
            ..Default::default()
        }
    }

    #[test]
    fn default_corpus_has_200_bursts() {
        let c = DatasetConfig::default();
        assert_eq!(c.recordings * c.bursts_per_recording, 200);
        assert!(c.interference.harmonics.len() >= 3 && c.interference.harmonics[2] > 0.0);
        assert_eq!(c.interference.line_hz * 3.0, 180.0);
    }

    #[test]
    fn corpus_is_deterministic_per_seed() {
        let a = generate_corpus(&small(), 5).unwrap();
        let b = generate_corpus(&small(), 5).unwrap();
        let c = generate_corpus(&small(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].recording, c[0].recording);
    }

    #[test]
    fn written_corpus_reads_back_and_scores() {
        let dir = tempfile::tempdir().unwrap();
        let entries = generate_corpus(&small(), 1).unwrap();
        write_corpus(&entries, dir.path()).unwrap();
        assert_eq!(corpus_files(dir.path()).unwrap().len(), 2);
        let report = evaluate_corpus(
            dir.path(),
            &FilterChainConfig::default(),
            &DetectorConfig::default(),
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(report.errors().count(), 0);
        assert!(report.aggregate().f1 > 0.9);
    }

    #[test]
    fn empty_dir_is_an_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(corpus_files(dir.path()), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn malformed_file_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let entries = generate_corpus(&small(), 1).unwrap();
        write_corpus(&entries, dir.path()).unwrap();
        fs::write(dir.path().join("rec_bad.csv"), "# sample_rate=8000\ntime,ch0,ch1,label\n0,1,0.5,0\n0.000125,1,oops,0\n").unwrap();
        let report = evaluate_corpus(
            dir.path(),
            &FilterChainConfig::default(),
            &DetectorConfig::default(),
            &EvalConfig::default(),
        )
        .unwrap();
        let errs: Vec<_> = report.errors().collect();
        assert_eq!(errs.len(), 1);
        assert!(matches!(errs[0].1, Error::Parse { line: 4, .. }), "{:?}", errs[0].1);
    }
}
