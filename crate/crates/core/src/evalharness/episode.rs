//! Per-step episode records and their CSV form.

use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::advisor::MetaAction;
use crate::mdpcore::TerminationReason;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPose {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// State after one control step, with the action that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based index of the step that produced this state.
    pub t: u64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// m/s
    pub speed: f64,
    pub steering: f64,
    pub throttle: f64,
    /// Policy output before the environment clamps it.
    pub action_throttle: f64,
    pub action_steering: f64,
    pub reward: f64,
    /// Signed lateral offset from the route, meters.
    pub d: f64,
    /// Meta-action in force when the action was chosen.
    pub meta: MetaAction,
    pub objects: Vec<ObjectPose>,
}

impl StepRecord {
    pub fn speed_kmh(&self) -> f64 {
        self.speed * 3.6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub map_id: String,
    pub route: usize,
    pub episode_seed: u64,
    pub route_length: f64,
    pub termination: TerminationReason,
    /// Sum of per-step displacements, meters.
    pub distance: f64,
    /// Arc length reached along the route at the end, meters.
    pub progress: f64,
    pub steps: Vec<StepRecord>,
}

const COLUMNS: [&str; 14] = [
    "t",
    "x",
    "y",
    "heading",
    "speed",
    "steering",
    "throttle",
    "action_throttle",
    "action_steering",
    "reward",
    "d",
    "meta",
    "objects",
    "speed_kmh",
];

fn encode_objects(objects: &[ObjectPose]) -> String {
    objects
        .iter()
        .map(|o| format!("{}:{}:{}:{}", o.id, o.x, o.y, o.heading))
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_objects(s: &str) -> Result<Vec<ObjectPose>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            if parts.len() != 4 {
                return Err(format!("bad object entry `{item}`"));
            }
            let f = |k: usize| parts[k].parse::<f64>().map_err(|e| format!("{item}: {e}"));
            Ok(ObjectPose {
                id: parts[0].parse().map_err(|e| format!("{item}: {e}"))?,
                x: f(1)?,
                y: f(2)?,
                heading: f(3)?,
            })
        })
        .collect()
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_success(&self) -> bool {
        self.termination == TerminationReason::RouteComplete
    }

    pub fn progress_fraction(&self) -> f64 {
        if self.route_length > 0.0 {
            (self.progress / self.route_length).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    /// Metadata as `# key=value` lines, then a CSV table. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), EvalError> {
        writeln!(w, "# map_id={}", self.map_id)?;
        writeln!(w, "# route={}", self.route)?;
        writeln!(w, "# episode_seed={}", self.episode_seed)?;
        writeln!(w, "# route_length={}", self.route_length)?;
        writeln!(w, "# termination={}", self.termination)?;
        writeln!(w, "# distance={}", self.distance)?;
        writeln!(w, "# progress={}", self.progress)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(COLUMNS)?;
        for s in &self.steps {
            csv.write_record([
                s.t.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.heading.to_string(),
                s.speed.to_string(),
                s.steering.to_string(),
                s.throttle.to_string(),
                s.action_throttle.to_string(),
                s.action_steering.to_string(),
                s.reward.to_string(),
                s.d.to_string(),
                s.meta.to_string(),
                encode_objects(&s.objects),
                s.speed_kmh().to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, EvalError> {
        let text = std::io::read_to_string(r)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let parse_err = |line: usize, msg: String| EvalError::Parse { line, msg };
        let mut meta = std::collections::HashMap::new();
        let mut body_start = 0;
        for (i, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| parse_err(i + 1, format!("metadata line without `=`: {line}")))?;
                meta.insert(k.trim().to_string(), v.trim().to_string());
                body_start = i + 1;
            } else {
                break;
            }
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| parse_err(0, format!("missing metadata `{k}`")))
        };
        fn num<T: FromStr>(k: &str, v: String) -> Result<T, EvalError>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| EvalError::Parse {
                line: 0,
                msg: format!("{k}: {e}"),
            })
        }
        let termination = get("termination")?
            .parse()
            .map_err(|e: String| parse_err(0, e))?;
        let mut log = EpisodeLog {
            map_id: get("map_id")?,
            route: num("route", get("route")?)?,
            episode_seed: num("episode_seed", get("episode_seed")?)?,
            route_length: num("route_length", get("route_length")?)?,
            termination,
            distance: num("distance", get("distance")?)?,
            progress: num("progress", get("progress")?)?,
            steps: Vec::new(),
        };
        let body: String = text.lines().skip(body_start).map(|l| format!("{l}\n")).collect();
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != COLUMNS {
            return Err(parse_err(body_start + 1, "unexpected column header".into()));
        }
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = body_start + 2 + k;
            let f = |i: usize| -> Result<f64, EvalError> {
                rec[i]
                    .parse()
                    .map_err(|e| parse_err(line, format!("{}: {e}", COLUMNS[i])))
            };
            log.steps.push(StepRecord {
                t: rec[0].parse().map_err(|e| parse_err(line, format!("t: {e}")))?,
                x: f(1)?,
                y: f(2)?,
                heading: f(3)?,
                speed: f(4)?,
                steering: f(5)?,
                throttle: f(6)?,
                action_throttle: f(7)?,
                action_steering: f(8)?,
                reward: f(9)?,
                d: f(10)?,
                meta: rec[11].parse().map_err(|e: String| parse_err(line, e))?,
                objects: decode_objects(&rec[12]).map_err(|e| parse_err(line, e))?,
            });
        }
        Ok(log)
    }
}
