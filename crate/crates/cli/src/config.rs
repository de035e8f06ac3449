//! Run configuration: JSON with `preset` inheritance and command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use covlm_core::advisor::AdvisorConfig;
use covlm_core::mdpcore::{EnvConfig, RewardParams, TerminationConfig};
use covlm_core::simworld::{BundledMap, SimConfig, WorldMap};
use covlm_core::trainer::{AgentKind, Preset, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const OUT_DIR_ENV: &str = "COVLM_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub agents: Vec<AgentKind>,
    pub seeds: Vec<u64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            agents: AgentKind::ALL.to_vec(),
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    pub agent: AgentKind,
    /// Training map: `seen` or `unseen`.
    pub map: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub eval_episodes: usize,
    pub advisor: AdvisorConfig,
    pub reward: RewardParams,
    pub sim: SimConfig,
    pub termination: TerminationConfig,
    pub train: TrainConfig,
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            preset,
            agent: AgentKind::Covlm,
            map: "seen".into(),
            seed: 0,
            out_dir: None,
            eval_episodes: 10,
            advisor: AdvisorConfig::default(),
            reward: RewardParams::default(),
            sim: SimConfig::default(),
            termination: TerminationConfig::default(),
            train: preset.train_config(),
            bench: BenchConfig::default(),
        }
    }

    pub fn env(&self) -> EnvConfig {
        EnvConfig {
            sim: self.sim,
            reward: self.reward,
            termination: self.termination,
        }
    }

    pub fn map(&self) -> Result<WorldMap> {
        load_named_map(&self.map)
    }

    /// Train config with the run seed and agent rules applied.
    pub fn resolved_train(&self) -> (AdvisorConfig, TrainConfig) {
        let mut advisor = self.advisor.clone();
        let mut train = self.train.clone();
        train.seed = self.seed;
        self.agent.apply(&mut advisor, &mut train);
        (advisor, train)
    }

    /// Same config for another (agent, seed) cell.
    pub fn for_cell(&self, agent: AgentKind, seed: u64) -> Self {
        let mut c = self.clone();
        c.agent = agent;
        c.seed = seed;
        c.train.seed = seed;
        c
    }

    pub fn validate(&self) -> Result<()> {
        load_named_map(&self.map).context("map")?;
        self.advisor.validate().context("advisor")?;
        self.reward.validate().context("reward")?;
        self.train.validate().context("train")?;
        if self.eval_episodes == 0 {
            bail!("eval_episodes must be at least 1");
        }
        Ok(())
    }

    /// Output directory: explicit flag, then config, then the environment, then `runs`.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"))
    }
}

/// `seen`/`unseen`, the bundled map ids, or a path to a map document.
pub fn load_named_map(name: &str) -> Result<WorldMap> {
    if let Some(m) = BundledMap::from_name(name) {
        return Ok(m.load());
    }
    let text = fs::read_to_string(name).with_context(|| format!("unknown map `{name}` (expected seen, unseen or a file)"))?;
    Ok(covlm_core::simworld::load_map(&text)?)
}

/// Recursively overlays `patch` onto `base`; objects merge key by key, anything else replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub agent: Option<AgentKind>,
    pub map: Option<String>,
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
}

impl Overrides {
    fn as_value(&self) -> Value {
        let mut v = serde_json::Map::new();
        if let Some(a) = self.agent {
            v.insert("agent".into(), a.as_str().into());
        }
        if let Some(m) = &self.map {
            v.insert("map".into(), m.clone().into());
        }
        if let Some(s) = self.seed {
            v.insert("seed".into(), s.into());
        }
        if let Some(n) = self.episodes {
            v.insert("eval_episodes".into(), n.into());
        }
        Value::Object(v)
    }
}

/// Resolves preset defaults, then the file (if any), then overrides. Errors name the offending key path.
pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let file_value = match file {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if !v.is_object() {
                bail!("{}: top level must be an object", path.display());
            }
            v
        }
        None => Value::Object(Default::default()),
    };
    let preset = match (overrides.preset, file_value.get("preset")) {
        (Some(p), _) => p,
        (None, Some(Value::String(s))) => s.parse().map_err(anyhow::Error::msg).context("preset")?,
        (None, Some(other)) => bail!("preset: expected a string, found {other}"),
        (None, None) => Preset::Desk,
    };
    let mut value = serde_json::to_value(RunConfig::from_preset(preset))?;
    merge(&mut value, file_value);
    merge(&mut value, overrides.as_value());
    value["preset"] = preset.as_str().into();
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("invalid config at `{path}`: {}", e.into_inner())
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn preset_inheritance_and_overrides() {
        let f = write(r#"{"preset": "paper", "train": {"n_epochs": 3}, "seed": 4}"#);
        let c = resolve(
            Some(f.path()),
            &Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.preset, Preset::Paper);
        assert_eq!(c.train.learning_rate, 1e-6);
        assert_eq!(c.train.n_epochs, 3);
        assert_eq!(c.train.n_steps, 1024);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn unknown_key_reports_path() {
        let f = write(r#"{"train": {"learning_rat": 0.1}}"#);
        let err = resolve(Some(f.path()), &Overrides::default()).unwrap_err().to_string();
        assert!(err.contains("train"), "{err}");
        assert!(err.contains("learning_rat"), "{err}");
    }

    #[test]
    fn wrong_type_reports_path() {
        let f = write(r#"{"advisor": {"query_interval": "ten"}}"#);
        let err = resolve(Some(f.path()), &Overrides::default()).unwrap_err().to_string();
        assert!(err.contains("advisor.query_interval"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        let f = write(r#"{"advisor": {"query_interval": 0}}"#);
        assert!(resolve(Some(f.path()), &Overrides::default()).is_err());
        let f = write(r#"{"map": "atlantis"}"#);
        assert!(resolve(Some(f.path()), &Overrides::default()).is_err());
    }

    #[test]
    fn resolved_config_reproduces_itself() {
        let c = resolve(None, &Overrides { agent: Some(AgentKind::Mrl), ..Default::default() }).unwrap();
        let f = write(&serde_json::to_string(&c).unwrap());
        assert_eq!(resolve(Some(f.path()), &Overrides::default()).unwrap(), c);
    }
}
