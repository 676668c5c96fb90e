//! Scenario files: one TOML document configuring every stage, with all
//! defaults embedded. Validation happens at load time and names the field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetConfig, EvalConfig};
use crate::emg::FilterChainConfig;
use crate::error::{Error, Result};
use crate::musician::{ArmPose, ChordRateMap, DriveConfig, MAX_RATE_HZ};
use crate::onset::DetectorConfig;
use crate::performer::{self, Condition, ElbowModel, Motif, Performer};
use crate::stick::{PidGains, StickParams};
use crate::sync::{GridConfig, ScoringConfig};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerformerSection {
    pub spring_interval: f64,
    pub tuning_steps: u32,
}

impl Default for PerformerSection {
    fn default() -> Self {
        let p = Performer::default();
        Self {
            spring_interval: p.spring_interval,
            tuning_steps: p.tuning_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotifSection {
    pub name: String,
    #[serde(default = "default_subdivision")]
    pub subdivision: u32,
    /// Hit grid such as `"1010101010101010"`.
    pub grid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accent: Option<Vec<f64>>,
}

fn default_subdivision() -> u32 {
    4
}

impl From<&Motif> for MotifSection {
    fn from(m: &Motif) -> Self {
        Self {
            name: m.name.clone(),
            subdivision: m.subdivision,
            grid: m.grid_string(),
            accent: m.accent.clone(),
        }
    }
}

fn default_motifs() -> Vec<MotifSection> {
    Motif::defaults().iter().map(MotifSection::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub tempi: Vec<f64>,
    pub trials_per_cell: u32,
    pub alpha: f64,
    /// Motif names to run; empty means all.
    pub motifs: Vec<String>,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridConfig::default();
        Self {
            tempi: g.tempi,
            trials_per_cell: g.trials_per_cell,
            alpha: g.alpha,
            motifs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSection {
    pub motif: String,
    pub tempo: f64,
    pub condition: Condition,
}

impl Default for TrialSection {
    fn default() -> Self {
        Self {
            motif: "straight-16ths".into(),
            tempo: 180.0,
            condition: Condition::Electromechanical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseKey {
    pub time: f64,
    pub hover_height: f64,
    pub velocity_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorSection {
    pub tempo: f64,
    pub resolution: u32,
    pub loops: u32,
    pub rate_range: [f64; 2],
    /// Position of each pitch class within the rate range, 0 to 1.
    pub chord_map: [f64; 12],
    /// How long the last chord keeps rolling, s.
    pub chord_hold: f64,
    pub roll_velocity: f64,
    pub density: f64,
    /// Sample-and-hold arm trajectory.
    pub pose: Vec<PoseKey>,
    /// Play the schedule on the simulated stick and report its impacts.
    pub simulate: bool,
    pub drive: DriveConfig,
}

impl Default for BehaviorSection {
    fn default() -> Self {
        Self {
            tempo: 100.0,
            resolution: 4,
            loops: 4,
            rate_range: [2.0, MAX_RATE_HZ],
            chord_map: ChordRateMap::default().position,
            chord_hold: 2.0,
            roll_velocity: 0.8,
            density: 0.0,
            pose: vec![PoseKey {
                time: 0.0,
                hover_height: 0.0,
                velocity_scale: 1.0,
            }],
            simulate: false,
            drive: DriveConfig::default(),
        }
    }
}

impl BehaviorSection {
    pub fn poses(&self) -> Result<Vec<(f64, ArmPose)>> {
        self.pose
            .iter()
            .map(|k| Ok((k.time, ArmPose::new(k.hover_height, k.velocity_scale)?)))
            .collect()
    }

    pub fn chord_map(&self) -> ChordRateMap {
        ChordRateMap {
            position: self.chord_map,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tempo > 0.0) {
            return Err(Error::config("behaviors.tempo", "must be > 0"));
        }
        if self.resolution == 0 {
            return Err(Error::config("behaviors.resolution", "must be >= 1"));
        }
        let [lo, hi] = self.rate_range;
        if !(lo > 0.0 && lo < hi && hi <= MAX_RATE_HZ) {
            return Err(Error::config(
                "behaviors.rate_range",
                format!("needs 0 < min < max <= {MAX_RATE_HZ} Hz"),
            ));
        }
        self.chord_map().validate()?;
        if !(self.chord_hold > 0.0) {
            return Err(Error::config("behaviors.chord_hold", "must be > 0"));
        }
        if !(self.roll_velocity > 0.0 && self.roll_velocity <= 1.0) {
            return Err(Error::config("behaviors.roll_velocity", "must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::config("behaviors.density", "must be in [0, 1]"));
        }
        if self.pose.is_empty() {
            return Err(Error::config("behaviors.pose", "needs at least one key"));
        }
        if self.pose.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::config("behaviors.pose", "keys must be sorted by time"));
        }
        self.poses()
            .map_err(|e| Error::config("behaviors.pose", e.to_string()))?;
        self.drive.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub filter: FilterChainConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub stick: StickParams,
    #[serde(default)]
    pub gains: PidGains,
    #[serde(default)]
    pub elbow: ElbowModel,
    #[serde(default)]
    pub performer: PerformerSection,
    #[serde(default)]
    pub scoring: ScoringConfig,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default = "default_motifs")]
    pub motifs: Vec<MotifSection>,
    #[serde(default)]
    pub trial: TrialSection,
    #[serde(default)]
    pub behaviors: BehaviorSection,
}

fn default_seed() -> u64 {
    GridConfig::default().seed
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: default_seed(),
            filter: FilterChainConfig::default(),
            detector: DetectorConfig::default(),
            dataset: DatasetConfig::default(),
            eval: EvalConfig::default(),
            stick: StickParams::default(),
            gains: PidGains::default(),
            elbow: ElbowModel::default(),
            performer: PerformerSection::default(),
            scoring: ScoringConfig::default(),
            grid: GridSection::default(),
            motifs: default_motifs(),
            trial: TrialSection::default(),
            behaviors: BehaviorSection::default(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(
                "version",
                format!("unsupported version {} (expected {CONFIG_VERSION})", self.version),
            ));
        }
        self.dataset.validate()?;
        self.filter.validate(self.dataset.sample_rate as f64)?;
        self.detector.validate()?;
        self.eval.validate()?;
        self.stick.validate()?;
        self.gains.validate()?;
        self.elbow.validate()?;
        if !(self.performer.spring_interval > 0.0) {
            return Err(Error::config("performer.spring_interval", "must be > 0"));
        }
        if self.performer.tuning_steps == 0 {
            return Err(Error::config("performer.tuning_steps", "must be >= 1"));
        }
        self.scoring.validate()?;
        let motifs = self.motif_list()?;
        for name in &self.grid.motifs {
            if !motifs.iter().any(|m| &m.name == name) {
                return Err(Error::config("grid.motifs", format!("unknown motif `{name}`")));
            }
        }
        self.grid_config().validate()?;
        if !motifs.iter().any(|m| m.name == self.trial.motif) {
            return Err(Error::config("trial.motif", format!("unknown motif `{}`", self.trial.motif)));
        }
        check_tempo("trial.tempo", self.trial.tempo)?;
        self.behaviors.validate()
    }

    pub fn motif_list(&self) -> Result<Vec<Motif>> {
        let mut out: Vec<Motif> = Vec::with_capacity(self.motifs.len());
        for (i, m) in self.motifs.iter().enumerate() {
            if out.iter().any(|o| o.name == m.name) {
                return Err(Error::config(format!("motifs[{i}].name"), format!("duplicate motif `{}`", m.name)));
            }
            let motif = Motif::from_grid(m.name.clone(), m.subdivision, &m.grid, m.accent.clone())
                .map_err(|e| Error::config(format!("motifs[{i}]"), e.to_string()))?;
            out.push(motif);
        }
        if out.is_empty() {
            return Err(Error::config("motifs", "needs at least one motif"));
        }
        Ok(out)
    }

    pub fn motif(&self, name: &str) -> Result<Motif> {
        self.motif_list()?
            .into_iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::config("motif", format!("unknown motif `{name}`")))
    }

    /// Motifs the grid runs, in config order.
    pub fn grid_motifs(&self) -> Result<Vec<Motif>> {
        let all = self.motif_list()?;
        if self.grid.motifs.is_empty() {
            return Ok(all);
        }
        Ok(all.into_iter().filter(|m| self.grid.motifs.contains(&m.name)).collect())
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            tempi: self.grid.tempi.clone(),
            trials_per_cell: self.grid.trials_per_cell,
            seed: self.seed,
            alpha: self.grid.alpha,
        }
    }

    pub fn performer(&self) -> Performer {
        Performer {
            elbow: self.elbow,
            stick: self.stick,
            gains: self.gains,
            spring_interval: self.performer.spring_interval,
            tuning_steps: self.performer.tuning_steps,
        }
    }
}

pub fn check_tempo(field: &str, tempo: f64) -> Result<()> {
    if !(performer::MIN_TEMPO..=performer::MAX_TEMPO).contains(&tempo) {
        return Err(Error::config(
            field,
            format!("{tempo} bpm is outside [{}, {}]", performer::MIN_TEMPO, performer::MAX_TEMPO),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::from_toml(text, Path::new("s.toml"))
    }

    fn field_of(r: Result<ScenarioConfig>) -> String {
        match r {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gets_all_defaults() {
        assert_eq!(parse("version = 1\n").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ScenarioConfig::default();
        assert_eq!(parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn version_is_required_and_checked() {
        assert!(matches!(parse("seed = 3\n"), Err(Error::Parse { .. })));
        assert_eq!(field_of(parse("version = 2\n")), "version");
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(parse("version = 1\n[filter]\nhpf_cutoff = -1.0\n")), "filter.hpf_cutoff");
        assert_eq!(field_of(parse("version = 1\n[trial]\ntempo = 211.0\n")), "trial.tempo");
        assert_eq!(field_of(parse("version = 1\n[grid]\ntempi = [80.0]\n")), "grid.tempi");
        assert_eq!(field_of(parse("version = 1\n[grid]\nmotifs = [\"nope\"]\n")), "grid.motifs");
        assert_eq!(field_of(parse("version = 1\n[behaviors]\nrate_range = [2.0, 25.0]\n")), "behaviors.rate_range");
    }

    #[test]
    fn unknown_keys_report_a_line() {
        match parse("version = 1\n\n[stick]\nmass = 3.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn custom_motifs_replace_defaults() {
        let c = parse(
            "version = 1\n[trial]\nmotif = \"quarters\"\ntempo = 120.0\n[[motifs]]\nname = \"quarters\"\ngrid = \"1000100010001000\"\n",
        )
        .unwrap();
        assert_eq!(c.grid_motifs().unwrap().len(), 1);
        assert_eq!(c.motif("quarters").unwrap().hits_per_measure(), 4);
    }

    #[test]
    fn bundled_scenario_is_the_default() {
        let bundled = parse(include_str!("../data/scenario.toml")).unwrap();
        assert_eq!(bundled, ScenarioConfig::default());
    }
}
