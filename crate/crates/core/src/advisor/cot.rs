//! Ground-truth identification → prediction → planning stages.

use serde::{Deserialize, Serialize};

use crate::simworld::{wrap_angle, CriticalObject, EgoState, ObjectKind, SceneSnapshot, Vec2};

use super::meta::MetaAction;
use super::AdvisorError;

/// Engineering constants of the scripted oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Objects farther than this are invisible, meters.
    pub sensing_range: f64,
    /// Conflicts predicted within this many seconds trigger SLOW.
    pub conflict_threshold: f64,
    /// Prediction horizon, seconds.
    pub prediction_horizon: f64,
    /// Half-width of the ego corridor, meters.
    pub corridor_half_width: f64,
    /// How far behind the ego front an object still counts as in conflict, meters.
    pub behind_margin: f64,
    /// An object standing in the corridor closer than this also triggers SLOW, meters.
    pub standoff_distance: f64,
    /// Route heading change that counts as a bend, degrees.
    pub bend_threshold_deg: f64,
    /// How far ahead bends are looked for, meters.
    pub bend_lookahead: f64,
    /// FAST below this fraction of the target speed.
    pub fast_speed_fraction: f64,
    pub target_speed_kmh: f64,
    /// Objects slower than this are static, m/s.
    pub static_speed: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            sensing_range: 50.0,
            conflict_threshold: 3.0,
            prediction_horizon: 10.0,
            corridor_half_width: 2.0,
            behind_margin: 2.0,
            standoff_distance: 12.0,
            bend_threshold_deg: 15.0,
            bend_lookahead: 15.0,
            fast_speed_fraction: 0.6,
            target_speed_kmh: 25.0,
            static_speed: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedObject {
    pub object_id: Option<u32>,
    pub kind: ObjectKind,
    /// Angle of the object in the ego frame, degrees, positive to the left.
    pub bearing: f64,
    /// Center distance, meters.
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationRecord {
    pub t: u64,
    pub text: String,
    /// `None` when nothing is within sensing range.
    pub object: Option<IdentifiedObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictedMotion {
    Approaching,
    Receding,
    Crossing,
    Static,
}

impl PredictedMotion {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictedMotion::Approaching => "approaching",
            PredictedMotion::Receding => "receding",
            PredictedMotion::Crossing => "crossing",
            PredictedMotion::Static => "static",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub t: u64,
    pub text: String,
    pub motion: PredictedMotion,
    /// Seconds until the object enters the ego's path ahead, if within the horizon.
    pub time_to_conflict: Option<f64>,
    /// Distance ahead of an object already standing inside the corridor.
    pub corridor_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub t: u64,
    pub text: String,
    pub meta: MetaAction,
}

/// One full identification → prediction → planning exchange. The planning
/// stage cannot exist without the two earlier stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoTDialogue {
    pub t: u64,
    pub identification: IdentificationRecord,
    pub prediction: PredictionRecord,
    pub plan: PlanRecord,
}

/// Which rules the planner may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanRules {
    /// Conflict, bend, and speed rules.
    Full,
    /// Route topology and speed only (no object reasoning).
    TopologyOnly,
}

/// Relative kinematics of one object with respect to the ego corridor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictAssessment {
    /// Object position in the ego frame (forward, left).
    pub rel_position: Vec2,
    /// Object velocity relative to the ego, ego frame.
    pub rel_velocity: Vec2,
    pub time_to_conflict: Option<f64>,
    pub corridor_gap: Option<f64>,
}

/// Interval of τ for which `a + b·τ` lies in `[lo, hi]`.
fn linear_window(a: f64, b: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if b == 0.0 {
        return (lo..=hi).contains(&a).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let t1 = (lo - a) / b;
    let t2 = (hi - a) / b;
    Some((t1.min(t2), t1.max(t2)))
}

/// Constant-velocity extrapolation of ego and object. A conflict is the first
/// time the object sits inside the corridor (|lateral| ≤ half-width) and has
/// reached the ego front (−behind_margin ≤ forward ≤ 0).
pub fn assess(ego: &EgoState, obj: &CriticalObject, params: &OracleParams) -> ConflictAssessment {
    let rel_position = (obj.position() - ego.position()).rotate(-ego.heading);
    let rel_velocity = (obj.velocity - ego.velocity()).rotate(-ego.heading);
    let w = params.corridor_half_width;

    let lateral = linear_window(rel_position.y, rel_velocity.y, -w, w);
    let longitudinal = linear_window(rel_position.x, rel_velocity.x, -params.behind_margin, 0.0);
    let time_to_conflict = match (lateral, longitudinal) {
        (Some((a0, a1)), Some((b0, b1))) => {
            let start = a0.max(b0).max(0.0);
            let end = a1.min(b1).min(params.prediction_horizon);
            (start <= end).then_some(start)
        }
        _ => None,
    };
    let corridor_gap = (rel_position.y.abs() <= w && rel_position.x >= 0.0).then_some(rel_position.x);
    ConflictAssessment {
        rel_position,
        rel_velocity,
        time_to_conflict,
        corridor_gap,
    }
}

fn classify(ego: &EgoState, obj: &CriticalObject, a: &ConflictAssessment, params: &OracleParams) -> PredictedMotion {
    let speed = obj.velocity.norm();
    if speed < params.static_speed {
        return PredictedMotion::Static;
    }
    let along = obj.velocity.dot(Vec2::from_heading(ego.heading)) / speed;
    if along.abs() < 0.5 {
        return PredictedMotion::Crossing;
    }
    let range = a.rel_position.norm();
    let range_rate = if range > 0.0 { a.rel_position.dot(a.rel_velocity) / range } else { 0.0 };
    if range_rate < 0.0 {
        PredictedMotion::Approaching
    } else {
        PredictedMotion::Receding
    }
}

fn stage_key(a: &ConflictAssessment) -> (f64, f64, f64) {
    (
        a.time_to_conflict.unwrap_or(f64::INFINITY),
        a.corridor_gap.unwrap_or(f64::INFINITY),
        a.rel_position.norm(),
    )
}

/// Picks the object with the earliest conflict (then the closest one in the
/// corridor, then the nearest overall) among those within sensing range.
pub fn identify(snapshot: &SceneSnapshot, params: &OracleParams) -> IdentificationRecord {
    let ego = &snapshot.ego;
    let best = snapshot
        .objects
        .iter()
        .filter(|o| o.position().distance(ego.position()) <= params.sensing_range)
        .map(|o| (o, assess(ego, o, params)))
        .min_by(|(oa, a), (ob, b)| {
            let (ka, kb) = (stage_key(a), stage_key(b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
                .then(oa.id.cmp(&ob.id))
        });
    match best {
        None => IdentificationRecord {
            t: snapshot.t,
            text: "No critical object within sensing range.".into(),
            object: None,
        },
        Some((o, a)) => {
            let object = IdentifiedObject {
                object_id: Some(o.id),
                kind: o.kind,
                bearing: a.rel_position.y.atan2(a.rel_position.x).to_degrees(),
                range: a.rel_position.norm(),
            };
            IdentificationRecord {
                t: snapshot.t,
                text: format!(
                    "Critical object: {} #{} at {:.1} m, bearing {:.0} deg.",
                    o.kind.as_str(),
                    o.id,
                    object.range,
                    object.bearing
                ),
                object: Some(object),
            }
        }
    }
}

/// Extrapolates the identified object and estimates its conflict with the ego corridor.
pub fn predict(
    snapshot: &SceneSnapshot,
    ident: &IdentificationRecord,
    params: &OracleParams,
) -> Result<PredictionRecord, AdvisorError> {
    if ident.t != snapshot.t {
        return Err(AdvisorError::StageMismatch {
            expected: snapshot.t,
            found: ident.t,
        });
    }
    let target = ident
        .object
        .and_then(|o| o.object_id)
        .and_then(|id| snapshot.objects.iter().find(|o| o.id == id));
    let Some(obj) = target else {
        return Ok(PredictionRecord {
            t: snapshot.t,
            text: "Nothing to track; no conflict expected.".into(),
            motion: PredictedMotion::Static,
            time_to_conflict: None,
            corridor_gap: None,
        });
    };
    let a = assess(&snapshot.ego, obj, params);
    let motion = classify(&snapshot.ego, obj, &a, params);
    let text = match a.time_to_conflict {
        Some(ttc) => format!("The {} is {}; time to conflict {:.1} s.", obj.kind.as_str(), motion.as_str(), ttc),
        None => format!("The {} is {}; no conflict expected.", obj.kind.as_str(), motion.as_str()),
    };
    Ok(PredictionRecord {
        t: snapshot.t,
        text,
        motion,
        time_to_conflict: a.time_to_conflict,
        corridor_gap: a.corridor_gap,
    })
}

/// Signed heading change (radians, left positive) between the ego's route
/// position and `lookahead` meters further along the route.
pub fn upcoming_bend(snapshot: &SceneSnapshot, lookahead: f64) -> f64 {
    let s = snapshot.frame.progress;
    let route = &snapshot.route;
    wrap_angle(route.heading_at((s + lookahead).min(route.length())) - route.heading_at(s))
}

pub fn plan_text(meta: MetaAction, ident: &IdentificationRecord) -> String {
    match meta {
        MetaAction::Slow => {
            let kind = ident.object.map_or("obstacle", |o| o.kind.as_str());
            format!("Slow down and yield to the {kind} ahead.")
        }
        MetaAction::Fast => "Accelerate toward the target speed.".into(),
        MetaAction::Left => "Turn left to follow the upcoming bend.".into(),
        MetaAction::Right => "Turn right to follow the upcoming bend.".into(),
        MetaAction::Idle => "Maintain the current speed and lane.".into(),
    }
}

/// Rule cascade: conflict → SLOW; bend → LEFT/RIGHT; too slow → FAST; else IDLE.
pub fn plan(
    snapshot: &SceneSnapshot,
    ident: &IdentificationRecord,
    pred: &PredictionRecord,
    params: &OracleParams,
    rules: PlanRules,
) -> Result<PlanRecord, AdvisorError> {
    if ident.t != snapshot.t || pred.t != snapshot.t {
        return Err(AdvisorError::StageMismatch {
            expected: snapshot.t,
            found: if ident.t != snapshot.t { ident.t } else { pred.t },
        });
    }
    let conflict = rules == PlanRules::Full
        && (pred.time_to_conflict.is_some_and(|t| t <= params.conflict_threshold)
            || pred.corridor_gap.is_some_and(|g| g <= params.standoff_distance));
    let bend = upcoming_bend(snapshot, params.bend_lookahead);
    let target_ms = params.target_speed_kmh / 3.6;
    let meta = if conflict {
        MetaAction::Slow
    } else if bend.abs().to_degrees() > params.bend_threshold_deg {
        if bend > 0.0 {
            MetaAction::Left
        } else {
            MetaAction::Right
        }
    } else if snapshot.ego.speed < params.fast_speed_fraction * target_ms {
        MetaAction::Fast
    } else {
        MetaAction::Idle
    };
    Ok(PlanRecord {
        t: snapshot.t,
        text: plan_text(meta, ident),
        meta,
    })
}

/// Runs all three stages on ground truth.
pub fn oracle_dialogue(
    snapshot: &SceneSnapshot,
    params: &OracleParams,
    rules: PlanRules,
) -> Result<CoTDialogue, AdvisorError> {
    let identification = identify(snapshot, params);
    let prediction = predict(snapshot, &identification, params)?;
    let plan = plan(snapshot, &identification, &prediction, params, rules)?;
    Ok(CoTDialogue {
        t: snapshot.t,
        identification,
        prediction,
        plan,
    })
}
