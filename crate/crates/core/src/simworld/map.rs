use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::{Polyline, Vec2};
use super::objects::CriticalObjectSpec;
use super::SimError;

pub const MAP_FORMAT_VERSION: u32 = 1;

const MAP_SEEN_DOC: &str = include_str!("../../maps/map_seen.json");
const MAP_UNSEEN_DOC: &str = include_str!("../../maps/map_unseen.json");

/// Raw on-disk map document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub format: u32,
    pub map_id: String,
    pub lane_width: f64,
    pub lanes: Vec<Vec<Vec2>>,
    pub routes: Vec<Vec<Vec2>>,
    #[serde(default)]
    pub objects: Vec<CriticalObjectSpec>,
}

/// Validated driving map: lane centerlines, navigation routes and object spawns.
#[derive(Debug, Clone)]
pub struct WorldMap {
    pub map_id: String,
    pub lane_width: f64,
    pub lanes: Vec<Polyline>,
    pub routes: Vec<Arc<Polyline>>,
    pub object_spawns: Vec<CriticalObjectSpec>,
}

/// The two maps shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundledMap {
    /// T-junction grid used for training.
    Seen,
    /// Ring road with merges, held out for evaluation.
    Unseen,
}

impl BundledMap {
    pub const ALL: [BundledMap; 2] = [BundledMap::Seen, BundledMap::Unseen];

    pub fn document(self) -> &'static str {
        match self {
            BundledMap::Seen => MAP_SEEN_DOC,
            BundledMap::Unseen => MAP_UNSEEN_DOC,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BundledMap::Seen => "seen",
            BundledMap::Unseen => "unseen",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "seen" | "map_seen" => Some(BundledMap::Seen),
            "unseen" | "map_unseen" => Some(BundledMap::Unseen),
            _ => None,
        }
    }

    pub fn load(self) -> WorldMap {
        load_map(self.document()).expect("bundled map document is valid")
    }
}

/// Parses and validates a map document.
pub fn load_map(document: &str) -> Result<WorldMap, SimError> {
    let doc: MapDocument = serde_json::from_str(document).map_err(SimError::MapParse)?;
    WorldMap::from_document(doc)
}

impl WorldMap {
    pub fn from_document(doc: MapDocument) -> Result<Self, SimError> {
        if doc.format != MAP_FORMAT_VERSION {
            return Err(SimError::MapFormat(doc.format));
        }
        if !(doc.lane_width.is_finite() && doc.lane_width > 0.0) {
            return Err(SimError::MapInvalid(format!(
                "lane_width must be positive, got {}",
                doc.lane_width
            )));
        }
        let lanes = doc
            .lanes
            .into_iter()
            .enumerate()
            .map(|(i, pts)| checked_polyline(pts, "lane", i))
            .collect::<Result<Vec<_>, _>>()?;
        if lanes.is_empty() {
            return Err(SimError::MapInvalid("map has no lanes".into()));
        }
        let routes = doc
            .routes
            .into_iter()
            .enumerate()
            .map(|(i, pts)| checked_polyline(pts, "route", i))
            .collect::<Result<Vec<_>, _>>()?;
        if routes.is_empty() {
            return Err(SimError::MapInvalid("map has no routes".into()));
        }

        let half = doc.lane_width / 2.0;
        for (ri, route) in routes.iter().enumerate() {
            for (wi, &w) in route.points().iter().enumerate() {
                let on_lane = lanes.iter().any(|lane| lane.project(w).distance <= half);
                if !on_lane {
                    return Err(SimError::WaypointOffLane {
                        route: ri,
                        waypoint: wi,
                    });
                }
            }
        }

        for spec in &doc.objects {
            spec.validate()?;
            if let Some(&r) = spec.routes.iter().find(|&&r| r >= routes.len()) {
                return Err(SimError::MapInvalid(format!(
                    "object {} references unknown route {r}",
                    spec.id
                )));
            }
        }

        Ok(Self {
            map_id: doc.map_id,
            lane_width: doc.lane_width,
            lanes,
            routes: routes.into_iter().map(Arc::new).collect(),
            object_spawns: doc.objects,
        })
    }

    /// Spawn specs that apply to `route` (an empty route list means every route).
    pub fn spawns_for_route(&self, route: usize) -> impl Iterator<Item = &CriticalObjectSpec> {
        self.object_spawns
            .iter()
            .filter(move |s| s.routes.is_empty() || s.routes.contains(&route))
    }
}

fn checked_polyline(points: Vec<Vec2>, kind: &'static str, index: usize) -> Result<Polyline, SimError> {
    if points.len() < 2 {
        return Err(SimError::MapInvalid(format!(
            "{kind} {index} needs at least 2 points, got {}",
            points.len()
        )));
    }
    for (pi, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(SimError::MapInvalid(format!("{kind} {index} point {pi} is not finite")));
        }
    }
    if let Some(pi) = points.windows(2).position(|w| w[0] == w[1]) {
        return Err(SimError::DegeneratePolyline {
            kind,
            index,
            point: pi + 1,
        });
    }
    Ok(Polyline::new_unchecked(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::Behavior;

    fn straight_doc(route: &str) -> String {
        format!(
            r#"{{"format":1,"map_id":"straight","lane_width":4.0,
                "lanes":[[[0,0],[100,0]]],"routes":[{route}]}}"#
        )
    }

    #[test]
    fn straight_lane_length() {
        let map = load_map(&straight_doc("[[0,0],[100,0]]")).unwrap();
        assert_eq!(map.lanes.len(), 1);
        assert_eq!(map.lanes[0].length(), 100.0);
        assert_eq!(map.routes[0].length(), 100.0);
    }

    #[test]
    fn off_lane_waypoint_is_named() {
        let err = load_map(&straight_doc("[[0,0],[0,50]]")).unwrap_err();
        match err {
            SimError::WaypointOffLane { route, waypoint } => {
                assert_eq!((route, waypoint), (0, 1));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn repeated_point_rejected() {
        let err = load_map(&straight_doc("[[0,0],[10,0],[10,0]]")).unwrap_err();
        assert!(matches!(
            err,
            SimError::DegeneratePolyline { kind: "route", index: 0, point: 2 }
        ));
    }

    #[test]
    fn parse_failure_and_version() {
        assert!(matches!(load_map("{not json"), Err(SimError::MapParse(_))));
        let doc = straight_doc("[[0,0],[100,0]]").replace("\"format\":1", "\"format\":2");
        assert!(matches!(load_map(&doc), Err(SimError::MapFormat(2))));
    }

    #[test]
    fn bundled_maps_load() {
        let seen = BundledMap::Seen.load();
        assert_eq!(seen.map_id, "map_seen");
        assert!(seen.routes.len() >= 2);
        assert!(seen
            .object_spawns
            .iter()
            .any(|s| matches!(s.behavior, Behavior::CutIn { .. })));
        let unseen = BundledMap::Unseen.load();
        assert_eq!(unseen.map_id, "map_unseen");
        assert!(unseen.routes.len() >= 2);
    }

    #[test]
    fn bundled_maps_share_no_route_geometry() {
        let seen = BundledMap::Seen.load();
        let unseen = BundledMap::Unseen.load();
        for a in &seen.routes {
            for b in &unseen.routes {
                assert_ne!(a.points(), b.points());
            }
        }
    }
}
