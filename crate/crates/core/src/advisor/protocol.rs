//! JSON bodies exchanged with a remote advisor over HTTP.

use serde::{Deserialize, Serialize};

use crate::simworld::{ObjectKind, SceneSnapshot};

use super::cot::{IdentifiedObject, PredictedMotion};
use super::AdvisorError;

pub const PROTOCOL_VERSION: u32 = 1;

/// Route points ahead of the ego included in a request.
pub const ROUTE_PREVIEW_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Identify,
    Predict,
    Plan,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Identify => "identify",
            Stage::Predict => "predict",
            Stage::Plan => "plan",
        }
    }

    pub fn path(self) -> &'static str {
        match self {
            Stage::Identify => "/v1/identify",
            Stage::Predict => "/v1/predict",
            Stage::Plan => "/v1/plan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireEgo {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireObject {
    pub id: u32,
    pub kind: ObjectKind,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSnapshot {
    pub t: u64,
    pub ego: WireEgo,
    pub objects: Vec<WireObject>,
    pub route_preview: Vec<[f64; 2]>,
}

impl WireSnapshot {
    pub fn from_snapshot(snapshot: &SceneSnapshot) -> Self {
        let route = &snapshot.route;
        let progress = snapshot.frame.progress;
        let route_preview = route
            .points()
            .iter()
            .zip(route.cumulative())
            .filter(|(_, &s)| s > progress)
            .take(ROUTE_PREVIEW_POINTS)
            .map(|(p, _)| [p.x, p.y])
            .collect();
        Self {
            t: snapshot.t,
            ego: WireEgo {
                x: snapshot.ego.x,
                y: snapshot.ego.y,
                heading: snapshot.ego.heading,
                speed: snapshot.ego.speed,
            },
            objects: snapshot
                .objects
                .iter()
                .map(|o| WireObject {
                    id: o.id,
                    kind: o.kind,
                    x: o.x,
                    y: o.y,
                    heading: o.heading,
                    vx: o.velocity.x,
                    vy: o.velocity.y,
                    radius: o.radius,
                })
                .collect(),
            route_preview,
        }
    }
}

/// Earlier stage outputs forwarded to later stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ident: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRequest {
    pub v: u32,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<WireSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_refs: Option<Vec<String>>,
    pub context: StageContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResponse {
    pub v: u32,
    pub text: String,
    #[serde(default)]
    pub structured: serde_json::Value,
    pub model_id: String,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireIdentification {
    #[serde(default)]
    pub object_id: Option<u32>,
    pub kind: ObjectKind,
    pub bearing: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WirePrediction {
    pub motion: PredictedMotion,
    #[serde(default)]
    pub time_to_conflict: Option<f64>,
}

impl StageResponse {
    pub fn check_version(&self) -> Result<(), AdvisorError> {
        if self.v != PROTOCOL_VERSION {
            return Err(AdvisorError::Schema(format!(
                "protocol version {} (expected {PROTOCOL_VERSION})",
                self.v
            )));
        }
        Ok(())
    }

    /// An identification reply: `structured` is either null/empty (nothing found)
    /// or an object description.
    pub fn identification(&self) -> Result<Option<IdentifiedObject>, AdvisorError> {
        if is_empty(&self.structured) {
            return Ok(None);
        }
        let w: WireIdentification =
            serde_json::from_value(self.structured.clone()).map_err(|e| AdvisorError::Schema(e.to_string()))?;
        if !w.bearing.is_finite() || !w.range.is_finite() || w.range < 0.0 {
            return Err(AdvisorError::Schema("identification has invalid geometry".into()));
        }
        Ok(Some(IdentifiedObject {
            object_id: w.object_id,
            kind: w.kind,
            bearing: w.bearing,
            range: w.range,
        }))
    }

    pub fn prediction(&self) -> Result<WirePrediction, AdvisorError> {
        let w: WirePrediction =
            serde_json::from_value(self.structured.clone()).map_err(|e| AdvisorError::Schema(e.to_string()))?;
        if w.time_to_conflict.is_some_and(|t| !t.is_finite() || t < 0.0) {
            return Err(AdvisorError::Schema("negative or non-finite time to conflict".into()));
        }
        Ok(w)
    }
}

fn is_empty(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Null => true,
        serde_json::Value::Object(m) => m.is_empty(),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn request_omits_absent_fields() {
        let req = StageRequest {
            v: PROTOCOL_VERSION,
            stage: Stage::Plan,
            snapshot: None,
            image_refs: Some(vec!["front.png".into()]),
            context: StageContext {
                ident: Some("a".into()),
                pred: None,
            },
        };
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(
            v,
            json!({"v": 1, "stage": "plan", "image_refs": ["front.png"], "context": {"ident": "a"}})
        );
        let back: StageRequest = serde_json::from_value(v).unwrap();
        assert_eq!(back, req);
    }

    #[test]
    fn structured_parsing() {
        let mut r = StageResponse {
            v: 1,
            text: String::new(),
            structured: json!({}),
            model_id: "m".into(),
            latency_ms: 3.0,
        };
        assert_eq!(r.identification().unwrap(), None);
        r.structured = json!({"object_id": 3, "kind": "pedestrian", "bearing": 10.0, "range": 4.0});
        assert_eq!(r.identification().unwrap().unwrap().object_id, Some(3));
        r.structured = json!({"kind": "pedestrian", "bearing": 10.0});
        assert!(matches!(r.identification(), Err(AdvisorError::Schema(_))));
        r.structured = json!({"motion": "crossing", "time_to_conflict": 1.5});
        assert_eq!(r.prediction().unwrap().motion, PredictedMotion::Crossing);
        r.structured = json!({"motion": "flying"});
        assert!(r.prediction().is_err());
        r.v = 2;
        assert!(r.check_version().is_err());
    }
}
