use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::control::ControlGains;
use crate::cpg::GaitTable;
use crate::plant::{Corruption, PlantParams, Segment, TerrainSpec};
use crate::reservoir::{PretrainConfig, ReservoirParams};
use crate::{Error, GaitId, Result};

/// Named experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scenario {
    TrainFlat,
    GapDouble,
    RoughElastic(f64),
    Obstacle(f64),
    Stairs,
}

impl Scenario {
    /// Gait used when walking this scenario.
    pub fn gait(self) -> GaitId {
        match self {
            Scenario::TrainFlat | Scenario::Obstacle(_) | Scenario::Stairs => GaitId::Wave,
            Scenario::GapDouble => GaitId::Caterpillar,
            Scenario::RoughElastic(_) => GaitId::Tetrapod,
        }
    }

    pub fn default_ticks(self) -> usize {
        match self {
            Scenario::TrainFlat => 3000,
            Scenario::GapDouble => 4000,
            Scenario::RoughElastic(_) => 6000,
            Scenario::Obstacle(_) | Scenario::Stairs => 4000,
        }
    }

    pub fn default_terrain(self) -> TerrainSpec {
        let flat = |length| Segment::Flat { length };
        let segments = match self {
            Scenario::TrainFlat => vec![flat(100_000.0)],
            Scenario::GapDouble => vec![
                flat(170.0),
                Segment::Gap { length: 15.0 },
                flat(150.0),
                Segment::Gap { length: 11.0 },
                flat(400.0),
            ],
            Scenario::RoughElastic(e) => {
                vec![flat(60.0), Segment::Rough { length: 150.0, obstacle_height: 8.0, elasticity: e }, flat(600.0)]
            }
            Scenario::Obstacle(h) => vec![flat(60.0), Segment::Obstacle { height: h, length: 40.0 }, flat(600.0)],
            Scenario::Stairs => vec![flat(60.0), Segment::Stairs { step_height: 8.0, count: 3 }, flat(600.0)],
        };
        TerrainSpec { start: 0.0, segments }
    }

    /// File-name friendly identifier.
    pub fn slug(self) -> String {
        match self {
            Scenario::RoughElastic(e) => format!("rough_elastic_{e}"),
            Scenario::Obstacle(h) => format!("obstacle_{h}"),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::TrainFlat => f.write_str("train_flat"),
            Scenario::GapDouble => f.write_str("gap_double"),
            Scenario::RoughElastic(e) => write!(f, "rough_elastic:{e}"),
            Scenario::Obstacle(h) => write!(f, "obstacle:{h}"),
            Scenario::Stairs => f.write_str("stairs"),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// `train_flat`, `gap_double`, `stairs`, `rough_elastic:<e>` or
    /// `obstacle:<height cm>`; `name(<value>)` is accepted too.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find([':', '(']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')'))),
            None => (s, None),
        };
        let value = |default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(a) => a
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config("scenario", format!("bad argument in {s:?}"))),
            }
        };
        match name {
            "train_flat" => Ok(Scenario::TrainFlat),
            "gap_double" => Ok(Scenario::GapDouble),
            "stairs" => Ok(Scenario::Stairs),
            "rough_elastic" => Ok(Scenario::RoughElastic(value(1.0)?)),
            "obstacle" => Ok(Scenario::Obstacle(value(8.0)?)),
            _ => Err(Error::config("scenario", format!("unknown scenario {s:?}"))),
        }
    }
}

impl TryFrom<String> for Scenario {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scenario> for String {
    fn from(s: Scenario) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Reservoir,
    Baseline,
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reservoir" => Ok(ModelKind::Reservoir),
            "baseline" => Ok(ModelKind::Baseline),
            _ => Err(Error::config("model", format!("expected reservoir or baseline, got {s:?}"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Reservoir => "reservoir",
            ModelKind::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub trials: usize,
    pub scenario: Scenario,
    pub model: ModelKind,
    pub out_dir: PathBuf,
    /// Overrides the scenario's default run length.
    pub ticks: Option<usize>,
    /// Switch off the accumulator-driven offsets and the backbone joint.
    pub adaptation: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 10,
            scenario: Scenario::TrainFlat,
            model: ModelKind::Reservoir,
            out_dir: PathBuf::from("out"),
            ticks: None,
            adaptation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlsSection {
    pub delta_c: f64,
}

impl Default for RlsSection {
    fn default() -> Self {
        Self { delta_c: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    /// Ticks per gait block.
    pub block_ticks: usize,
    /// Full wave → tetrapod → caterpillar cycles.
    pub cycles: usize,
    pub pretrain_epochs: usize,
    pub pretrain: PretrainConfig,
    /// Pattern-generator ticks discarded before any run.
    pub warmup: usize,
    /// Ticks excluded from error statistics and accumulation at run start.
    pub transient: usize,
    /// Ticks after each gait change during which readouts are not updated.
    pub settle: usize,
    /// Largest delay searched when fitting the baseline model.
    pub baseline_max_delay: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            block_ticks: 2500,
            cycles: 3,
            pretrain_epochs: 20,
            pretrain: PretrainConfig::default(),
            warmup: 400,
            transient: 50,
            settle: 300,
            baseline_max_delay: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub reservoir: ReservoirParams,
    pub rls: RlsSection,
    pub training: TrainingSection,
    pub gaits: GaitTable,
    pub plant: PlantParams,
    pub control: ControlGains,
    /// Replaces the scenario's built-in terrain.
    pub terrain: Option<TerrainSpec>,
    pub corruption: Option<Corruption>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run: RunSection::default(),
            reservoir: ReservoirParams::default(),
            rls: RlsSection::default(),
            training: TrainingSection::default(),
            gaits: GaitTable::default(),
            plant: PlantParams::default(),
            control: ControlGains::default(),
            terrain: None,
            corruption: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Parse { path: PathBuf::from("<config>"), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.reservoir.validate()?;
        if !(self.rls.delta_c > 0.0) {
            return Err(Error::config("delta_c", "must be positive"));
        }
        self.training.pretrain.validate()?;
        if self.training.block_ticks == 0 {
            return Err(Error::config("block_ticks", "must be positive"));
        }
        if self.run.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        self.gaits.validate()?;
        self.plant.validate()?;
        self.control.validate()?;
        self.terrain().validate()?;
        if let Some(c) = &self.corruption {
            c.validate(self.ticks())?;
        }
        Ok(())
    }

    pub fn terrain(&self) -> TerrainSpec {
        self.terrain.clone().unwrap_or_else(|| self.run.scenario.default_terrain())
    }

    pub fn ticks(&self) -> usize {
        self.run.ticks.unwrap_or_else(|| self.run.scenario.default_ticks())
    }

    /// Effective configuration as TOML, for echoing into outputs.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("unserialisable config: {e}"))
    }
}
