use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::domain::Architecture;
use crate::policy::PolicyKind;
use crate::sim::{replication_seed, LagPreset, SimConfig, UniformRange};

/// Observation lag for a scenario: a named preset or explicit bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LagSetting {
    Preset(LagPreset),
    Bounds([f64; 2]),
}

impl LagSetting {
    pub fn bounds(&self) -> UniformRange {
        match *self {
            LagSetting::Preset(p) => p.bounds(),
            LagSetting::Bounds([lo, hi]) => UniformRange::new(lo, hi),
        }
    }

    /// Bounds equal to a preset resolve to that preset.
    pub fn preset(&self) -> Option<LagPreset> {
        match *self {
            LagSetting::Preset(p) => Some(p),
            LagSetting::Bounds(_) => LagPreset::from_bounds(self.bounds()),
        }
    }

    /// Label used in output rows and file names.
    pub fn label(&self) -> String {
        match self.preset() {
            Some(p) => p.as_str().to_string(),
            None => {
                let b = self.bounds();
                format!("custom_{}_{}", b.low, b.high)
            }
        }
    }
}

impl From<LagPreset> for LagSetting {
    fn from(p: LagPreset) -> Self {
        LagSetting::Preset(p)
    }
}

impl fmt::Display for LagSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One experimental cell: a lag regime, architecture and policy, replicated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub lag: LagSetting,
    pub arch: Architecture,
    pub policy: PolicyKind,
    pub replications: u64,
    pub base_seed: u64,
    /// Plant parameters. `lag` and `seed` are overwritten per replication.
    pub sim: SimConfig,
    pub max_reisolations: u32,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            lag: LagSetting::Preset(LagPreset::Medium),
            arch: Architecture::Layer,
            policy: PolicyKind::Edd,
            replications: 50,
            base_seed: 0,
            sim: SimConfig::default(),
            max_reisolations: 5,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replications == 0 {
            return Err(HarnessError::Config("replications must be at least 1".into()));
        }
        self.sim_config(0).validate()?;
        Ok(())
    }

    /// Plant configuration for replication `rep`.
    pub fn sim_config(&self, rep: u64) -> SimConfig {
        SimConfig {
            lag: self.lag.bounds(),
            seed: replication_seed(self.base_seed, rep),
            ..self.sim.clone()
        }
    }

    pub fn seed(&self, rep: u64) -> u64 {
        replication_seed(self.base_seed, rep)
    }
}

/// The full evaluation grid: every lag preset, architecture and policy, each
/// cloned from `template`.
pub fn default_grid(template: &ScenarioSpec) -> Vec<ScenarioSpec> {
    let mut grid = Vec::with_capacity(12);
    for lag in LagPreset::ALL {
        for arch in Architecture::ALL {
            for policy in PolicyKind::ALL {
                grid.push(ScenarioSpec {
                    lag: lag.into(),
                    arch,
                    policy,
                    ..template.clone()
                });
            }
        }
    }
    grid
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    lag: Option<LagSetting>,
    arch: Option<Architecture>,
    policy: Option<PolicyKind>,
    replications: Option<u64>,
    base_seed: Option<u64>,
    max_reisolations: Option<u32>,
    sim: Option<toml::Table>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    lag: Option<LagSetting>,
    arch: Option<Architecture>,
    policy: Option<PolicyKind>,
    replications: Option<u64>,
    base_seed: Option<u64>,
    max_reisolations: Option<u32>,
    sim: Option<toml::Table>,
    #[serde(default)]
    scenario: Vec<RawScenario>,
}

impl RawConfig {
    fn defaults(&self) -> RawScenario {
        RawScenario {
            lag: self.lag,
            arch: self.arch,
            policy: self.policy,
            replications: self.replications,
            base_seed: self.base_seed,
            max_reisolations: self.max_reisolations,
            sim: self.sim.clone(),
        }
    }
}

fn merge_sim(base: &toml::Table, overlay: Option<&toml::Table>, at: &str) -> Result<SimConfig, HarnessError> {
    let mut table = base.clone();
    if let Some(overlay) = overlay {
        for (k, v) in overlay {
            table.insert(k.clone(), v.clone());
        }
    }
    for reserved in ["lag", "seed"] {
        if table.contains_key(reserved) {
            return Err(HarnessError::Config(format!(
                "{at}.sim.{reserved}: set `{}` on the scenario instead",
                if reserved == "lag" { "lag" } else { "base_seed" }
            )));
        }
    }
    table
        .try_into::<SimConfig>()
        .map_err(|e| HarnessError::Config(format!("{at}.sim: {}", e.message())))
}

fn resolve(defaults: &RawScenario, raw: Option<&RawScenario>, at: &str) -> Result<ScenarioSpec, HarnessError> {
    let base = ScenarioSpec::default();
    let lag = raw.and_then(|r| r.lag).or(defaults.lag).unwrap_or(base.lag);
    let arch = raw.and_then(|r| r.arch).or(defaults.arch).unwrap_or(base.arch);
    let policy = raw.and_then(|r| r.policy).or(defaults.policy).unwrap_or(base.policy);
    let replications = raw
        .and_then(|r| r.replications)
        .or(defaults.replications)
        .unwrap_or(base.replications);
    let base_seed = raw.and_then(|r| r.base_seed).or(defaults.base_seed).unwrap_or(base.base_seed);
    let max_reisolations = raw
        .and_then(|r| r.max_reisolations)
        .or(defaults.max_reisolations)
        .unwrap_or(base.max_reisolations);
    let sim = merge_sim(
        defaults.sim.as_ref().unwrap_or(&toml::Table::new()),
        raw.and_then(|r| r.sim.as_ref()),
        at,
    )?;
    let spec = ScenarioSpec {
        lag,
        arch,
        policy,
        replications,
        base_seed,
        sim,
        max_reisolations,
    };
    spec.validate()
        .map_err(|e| HarnessError::Config(format!("{at}: {e}")))?;
    Ok(spec)
}

/// Parses a TOML scenario file.
///
/// Top-level keys (`lag`, `arch`, `policy`, `replications`, `base_seed`,
/// `max_reisolations`, and a `[sim]` table) set defaults; each
/// `[[scenario]]` entry overrides them. Without scenario entries the file
/// describes a single scenario.
pub fn parse_config(text: &str) -> Result<Vec<ScenarioSpec>, HarnessError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let defaults = raw.defaults();
    if raw.scenario.is_empty() {
        return Ok(vec![resolve(&defaults, None, "config")?]);
    }
    raw.scenario
        .iter()
        .enumerate()
        .map(|(i, s)| resolve(&defaults, Some(s), &format!("scenario[{i}]")))
        .collect()
}

pub fn load_config(path: &Path) -> Result<Vec<ScenarioSpec>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
