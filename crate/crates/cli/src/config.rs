//! Run configuration: TOML file values, then command-line flags on top.

use std::path::{Path, PathBuf};

use fipp::flowfield::DEFAULT_V_PED_MAX;
use fipp::metrics::VIOLATION_THRESHOLD;
use fipp::sim::{EpisodeParams, PlannerKind, ScenarioKind, WORLD_SIZE};
use serde::{Deserialize, Serialize};

use crate::exit::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Violation distance, meters.
    pub threshold: f64,
    /// Track-log rows faster than this are rejected, m/s.
    pub v_ped_max: f64,
    pub world: WorldConfig,
    pub scenario: ScenarioConfig,
    pub predict: PredictConfig,
    pub bench: BenchSection,
    /// Grid, flow, cost, simulator and baseline parameters.
    pub params: EpisodeParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            threshold: VIOLATION_THRESHOLD,
            v_ped_max: DEFAULT_V_PED_MAX,
            world: WorldConfig::default(),
            scenario: ScenarioConfig::default(),
            predict: PredictConfig::default(),
            bench: BenchSection::default(),
            params: EpisodeParams::default(),
        }
    }
}

/// Extent of the extraction grid, anchored at the origin, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub width: f64,
    pub height: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: WORLD_SIZE,
            height: WORLD_SIZE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Drawn per seed when unset.
    pub n_peds: Option<usize>,
    pub planner: PlannerKind,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::SingleFlow,
            n_peds: None,
            planner: PlannerKind::Fipp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    /// Advection step, seconds.
    pub dt: f64,
    /// Steps per trajectory when no ground truth is given.
    pub steps: usize,
    /// Force-to-velocity factor; `1 / xi` when unset.
    pub speed_scale: Option<f64>,
    /// Ground-truth tracks are split at jumps longer than this, meters.
    pub max_jump: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            steps: 100,
            speed_scale: None,
            max_jump: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub kinds: Vec<ScenarioKind>,
    pub seeds: Vec<u64>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            kinds: ScenarioKind::FLOWS.to_vec(),
            seeds: (1..=20).collect(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::internal(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(CliError::from)?;
        let positive = [
            ("threshold", self.threshold),
            ("v_ped_max", self.v_ped_max),
            ("world.width", self.world.width),
            ("world.height", self.world.height),
            ("predict.dt", self.predict.dt),
            ("predict.max_jump", self.predict.max_jump),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::input(format!("{name} must be > 0, got {v}")));
            }
        }
        if let Some(s) = self.predict.speed_scale {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(CliError::input(format!(
                    "predict.speed_scale must be >= 0, got {s}"
                )));
            }
        }
        if self.scenario.n_peds == Some(0) {
            return Err(CliError::input("scenario.n_peds must be >= 1"));
        }
        Ok(())
    }

    pub fn speed_scale(&self) -> f64 {
        self.predict
            .speed_scale
            .unwrap_or_else(|| self.params.flow.natural_speed_scale())
    }
}

/// `a..b` (inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = |_| format!("cannot parse seeds `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(bad)?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(bad)?;
        if a > b {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(bad))
        .collect()
}

/// `all`, `flows`, or a comma list of kinds.
pub fn parse_kinds(s: &str) -> Result<Vec<ScenarioKind>, String> {
    match s.trim() {
        "all" | "flows" => Ok(ScenarioKind::FLOWS.to_vec()),
        list => list
            .split(',')
            .map(|k| k.trim().parse().map_err(|e: fipp::Error| e.to_string()))
            .collect(),
    }
}
