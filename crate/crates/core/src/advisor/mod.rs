//! Semantic guidance: meta-actions, the identify → predict → plan dialogue,
//! plan parsing, and query scheduling over interchangeable backends.

mod convert;
mod cot;
mod meta;
mod protocol;
mod remote;
mod schedule;

use thiserror::Error;

pub use convert::{convert, Conversion, SYNONYMS};
pub use cot::{
    assess, identify, oracle_dialogue, plan, plan_text, predict, upcoming_bend, CoTDialogue, ConflictAssessment,
    IdentificationRecord, IdentifiedObject, OracleParams, PlanRecord, PlanRules, PredictedMotion, PredictionRecord,
};
pub use meta::{MetaAction, SemanticEmbedding, EMBEDDINGS};
pub use protocol::{
    Stage, StageContext, StageRequest, StageResponse, WireEgo, WireIdentification, WireObject, WirePrediction,
    WireSnapshot, PROTOCOL_VERSION, ROUTE_PREVIEW_POINTS,
};
pub use remote::{RemoteClient, StageInput};
pub use schedule::{Advice, Advisor, AdvisorBackend, AdvisorConfig, AdvisorStats};

#[derive(Debug, Error)]
pub enum AdvisorError {
    #[error("stage record is for step {found}, snapshot is step {expected}")]
    StageMismatch { expected: u64, found: u64 },
    #[error("{stage} stage exceeded the deadline")]
    Timeout { stage: &'static str },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("reply violates the protocol schema: {0}")]
    Schema(String),
    #[error("invalid advisor config: {0}")]
    InvalidConfig(String),
}
