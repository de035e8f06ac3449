//! Query scheduling and the per-episode meta-action cache.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::cot::{oracle_dialogue, CoTDialogue, OracleParams, PlanRules};
use super::meta::{MetaAction, SemanticEmbedding};
use super::remote::RemoteClient;
use super::AdvisorError;
use crate::simworld::SceneSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvisorBackend {
    /// No guidance: every step reports IDLE and nothing is queried.
    None,
    /// Scripted ground-truth reasoning.
    Oracle,
    /// Route topology only.
    MapPrior,
    /// HTTP advisor.
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvisorConfig {
    pub backend: AdvisorBackend,
    /// The backend is consulted when `t % query_interval == 0`.
    pub query_interval: u64,
    pub endpoint: Option<String>,
    /// Budget for all three remote stages together.
    pub deadline_ms: u64,
    /// Meta-action used when the remote backend fails.
    pub fallback: MetaAction,
    pub oracle: OracleParams,
}

impl Default for AdvisorConfig {
    fn default() -> Self {
        Self {
            backend: AdvisorBackend::Oracle,
            query_interval: 10,
            endpoint: None,
            deadline_ms: 2000,
            fallback: MetaAction::Idle,
            oracle: OracleParams::default(),
        }
    }
}

impl AdvisorConfig {
    pub fn with_backend(backend: AdvisorBackend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AdvisorError> {
        if self.query_interval == 0 {
            return Err(AdvisorError::InvalidConfig("query_interval must be at least 1".into()));
        }
        if self.deadline_ms == 0 {
            return Err(AdvisorError::InvalidConfig("deadline_ms must be positive".into()));
        }
        if self.backend == AdvisorBackend::Remote && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(AdvisorError::InvalidConfig("remote backend needs an endpoint".into()));
        }
        Ok(())
    }
}

/// What the control loop receives every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Advice {
    pub meta: MetaAction,
    pub embedding: SemanticEmbedding,
    /// Present only on steps where the backend answered.
    pub dialogue: Option<CoTDialogue>,
    pub queried: bool,
    pub fault: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdvisorStats {
    pub queries: u64,
    pub faults: u64,
}

/// Owns the per-episode cache. Remote failures never propagate: they turn
/// into the fallback meta-action and bump the fault counter.
#[derive(Debug, Clone)]
pub struct Advisor {
    config: AdvisorConfig,
    client: Option<RemoteClient>,
    cached: MetaAction,
    stats: AdvisorStats,
}

impl Advisor {
    pub fn new(config: AdvisorConfig) -> Result<Self, AdvisorError> {
        config.validate()?;
        let client = match config.backend {
            AdvisorBackend::Remote => config.endpoint.as_deref().map(RemoteClient::new),
            _ => None,
        };
        Ok(Self {
            config,
            client,
            cached: MetaAction::Idle,
            stats: AdvisorStats::default(),
        })
    }

    pub fn config(&self) -> &AdvisorConfig {
        &self.config
    }

    pub fn cached(&self) -> MetaAction {
        self.cached
    }

    pub fn stats(&self) -> AdvisorStats {
        self.stats
    }

    /// Episode start: forget the previous decision.
    pub fn reset(&mut self) {
        self.cached = MetaAction::Idle;
    }

    fn query(&self, snapshot: &SceneSnapshot) -> Result<CoTDialogue, AdvisorError> {
        let params = &self.config.oracle;
        match self.config.backend {
            AdvisorBackend::None => unreachable!("the none backend is never queried"),
            AdvisorBackend::Oracle => oracle_dialogue(snapshot, params, PlanRules::Full),
            AdvisorBackend::MapPrior => oracle_dialogue(snapshot, params, PlanRules::TopologyOnly),
            AdvisorBackend::Remote => {
                let client = self
                    .client
                    .as_ref()
                    .ok_or_else(|| AdvisorError::InvalidConfig("remote backend needs an endpoint".into()))?;
                client.dialogue(snapshot, Duration::from_millis(self.config.deadline_ms))
            }
        }
    }

    pub fn advise(&mut self, snapshot: &SceneSnapshot) -> Advice {
        let due = snapshot.t % self.config.query_interval == 0;
        if self.config.backend == AdvisorBackend::None || !due {
            return Advice {
                meta: self.cached,
                embedding: self.cached.embedding(),
                dialogue: None,
                queried: false,
                fault: false,
            };
        }
        self.stats.queries += 1;
        match self.query(snapshot) {
            Ok(dialogue) => {
                self.cached = dialogue.plan.meta;
                Advice {
                    meta: self.cached,
                    embedding: self.cached.embedding(),
                    dialogue: Some(dialogue),
                    queried: true,
                    fault: false,
                }
            }
            Err(e) => {
                self.stats.faults += 1;
                log::warn!("advisor fault at t={}: {e}; falling back to {}", snapshot.t, self.config.fallback);
                self.cached = self.config.fallback;
                Advice {
                    meta: self.cached,
                    embedding: self.cached.embedding(),
                    dialogue: None,
                    queried: true,
                    fault: true,
                }
            }
        }
    }
}
