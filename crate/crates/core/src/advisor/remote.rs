//! Blocking HTTP client for a remote advisor.

use std::time::{Duration, Instant};

use super::convert::convert;
use super::cot::{CoTDialogue, IdentificationRecord, PlanRecord, PredictionRecord};
use super::protocol::{Stage, StageContext, StageRequest, StageResponse, WireSnapshot, PROTOCOL_VERSION};
use super::AdvisorError;
use crate::simworld::SceneSnapshot;

/// What the remote side gets to look at.
#[derive(Debug, Clone, PartialEq)]
pub enum StageInput {
    Snapshot(WireSnapshot),
    ImageRefs(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct RemoteClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(true)
            .build()
            .into();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// One stage round trip bounded by `timeout`.
    pub fn call(
        &self,
        stage: Stage,
        input: &StageInput,
        context: StageContext,
        timeout: Duration,
    ) -> Result<StageResponse, AdvisorError> {
        if timeout.is_zero() {
            return Err(AdvisorError::Timeout { stage: stage.as_str() });
        }
        let (snapshot, image_refs) = match input {
            StageInput::Snapshot(s) => (Some(s.clone()), None),
            StageInput::ImageRefs(r) => (None, Some(r.clone())),
        };
        let request = StageRequest {
            v: PROTOCOL_VERSION,
            stage,
            snapshot,
            image_refs,
            context,
        };
        let url = format!("{}{}", self.endpoint, stage.path());
        let map_err = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => AdvisorError::Timeout { stage: stage.as_str() },
            ureq::Error::Json(e) => AdvisorError::Schema(e.to_string()),
            other => AdvisorError::Transport(other.to_string()),
        };
        let mut response = self
            .agent
            .post(&url)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .send_json(&request)
            .map_err(map_err)?;
        let reply: StageResponse = response.body_mut().read_json().map_err(map_err)?;
        reply.check_version()?;
        Ok(reply)
    }

    /// Runs identify → predict → plan, all within `deadline` measured from the call.
    pub fn dialogue(&self, snapshot: &SceneSnapshot, deadline: Duration) -> Result<CoTDialogue, AdvisorError> {
        let start = Instant::now();
        let remaining = |stage: Stage| {
            deadline
                .checked_sub(start.elapsed())
                .filter(|d| !d.is_zero())
                .ok_or(AdvisorError::Timeout { stage: stage.as_str() })
        };
        let t = snapshot.t;
        let input = StageInput::Snapshot(WireSnapshot::from_snapshot(snapshot));

        let ident = self.call(Stage::Identify, &input, StageContext::default(), remaining(Stage::Identify)?)?;
        let identification = IdentificationRecord {
            t,
            object: ident.identification()?,
            text: ident.text,
        };

        let context = StageContext {
            ident: Some(identification.text.clone()),
            pred: None,
        };
        let pred = self.call(Stage::Predict, &input, context, remaining(Stage::Predict)?)?;
        let wire = pred.prediction()?;
        let prediction = PredictionRecord {
            t,
            text: pred.text,
            motion: wire.motion,
            time_to_conflict: wire.time_to_conflict,
            corridor_gap: None,
        };

        let context = StageContext {
            ident: Some(identification.text.clone()),
            pred: Some(prediction.text.clone()),
        };
        let plan = self.call(Stage::Plan, &input, context, remaining(Stage::Plan)?)?;
        // The reply may land just inside the transport timeout but after the
        // overall deadline once parsing is included.
        remaining(Stage::Plan)?;
        let conversion = convert(&plan.text);
        if conversion.unparsed {
            log::warn!("remote plan at t={t} did not name a meta-action: {:?}", plan.text);
        }
        Ok(CoTDialogue {
            t,
            identification,
            prediction,
            plan: PlanRecord {
                t,
                text: plan.text,
                meta: conversion.meta,
            },
        })
    }
}
