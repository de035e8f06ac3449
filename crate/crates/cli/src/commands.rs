//! The four operator commands. Each returns an outcome struct so tests can drive them in-process.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use covlm_core::advisor::AdvisorConfig;
use covlm_core::evalharness::{
    compare, compute_metrics, replay, run_episodes, write_trajectory, EpisodeLog, FrozenPolicy, MetricsReport,
    ReplayReport,
};
use covlm_core::mdpcore::EnvConfig;
use covlm_core::policy::Checkpoint;
use covlm_core::simworld::WorldMap;
use covlm_core::trainer::{AgentKind, TrainLogWriter, TrainSetup, Trainer};
use serde::{Deserialize, Serialize};

use crate::config::{load_named_map, RunConfig};

pub const RESOLVED_CONFIG: &str = "resolved_config.json";
pub const CURVES: &str = "curves.csv";
pub const FINAL_CHECKPOINT: &str = "final.ckpt.json";
pub const ENV_SNAPSHOT: &str = "env.json";
pub const DEFAULT_EVAL_MAPS: [&str; 2] = ["seen", "unseen"];

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Metadata stored in every checkpoint so evaluation can rebuild the agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub agent: AgentKind,
    pub seed: u64,
    pub update: usize,
    pub step: usize,
    pub advisor: AdvisorConfig,
    pub env: EnvConfig,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub final_checkpoint: PathBuf,
    pub updates: usize,
}

pub fn cmd_train(config: &RunConfig, out_dir: &Path) -> Result<TrainOutcome> {
    fs::create_dir_all(out_dir.join("checkpoints")).with_context(|| format!("creating {}", out_dir.display()))?;
    write_json(&out_dir.join(RESOLVED_CONFIG), config)?;
    let (advisor, train) = config.resolved_train();
    let setup = TrainSetup {
        map: Arc::new(config.map()?),
        env: config.env(),
        advisor: advisor.clone(),
        train: train.clone(),
    };
    let mut trainer = Trainer::new(setup)?;
    let curves = File::create(out_dir.join(CURVES)).context("creating training curve")?;
    let mut log = TrainLogWriter::new(BufWriter::new(curves))?;
    let meta = |trainer: &Trainer| {
        serde_json::to_value(CheckpointMeta {
            agent: config.agent,
            seed: config.seed,
            update: trainer.updates_done(),
            step: trainer.steps_done(),
            advisor: advisor.clone(),
            env: config.env(),
        })
        .expect("checkpoint metadata serializes")
    };
    let interval = train.checkpoint_interval;
    trainer.run(|record, trainer| {
        log.write(record)?;
        if interval > 0 && record.update % interval == 0 {
            let path = out_dir.join("checkpoints").join(format!("update_{:05}.ckpt.json", record.update));
            trainer.checkpoint(meta(trainer)).save(&path)?;
        }
        Ok(())
    })?;
    log.into_inner()?.flush()?;
    let final_checkpoint = out_dir.join(FINAL_CHECKPOINT);
    trainer.checkpoint(meta(&trainer)).save(&final_checkpoint)?;
    log::info!("training finished: {}", final_checkpoint.display());
    Ok(TrainOutcome {
        out_dir: out_dir.to_path_buf(),
        final_checkpoint,
        updates: trainer.updates_done(),
    })
}

#[derive(Debug, Clone)]
pub struct MapReport {
    pub map: String,
    pub dir: PathBuf,
    pub report: MetricsReport,
}

/// Evaluates a checkpoint with the advisor and environment it was trained with.
pub fn cmd_eval(checkpoint: &Path, maps: &[String], episodes: usize, seed: u64, out_dir: &Path) -> Result<Vec<MapReport>> {
    ensure!(!maps.is_empty(), "no maps to evaluate");
    let ckpt = Checkpoint::load(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    let meta: CheckpointMeta =
        serde_json::from_value(ckpt.meta.clone()).context("checkpoint metadata is missing or malformed")?;
    let params = ckpt.params()?;
    let mut out = Vec::with_capacity(maps.len());
    for name in maps {
        let map = load_named_map(name)?;
        let dir = out_dir.join(map_label(name, &map));
        let policy = FrozenPolicy {
            params: &params,
            normalizer: &ckpt.obs_norm,
        };
        let logs = run_episodes(policy, Arc::new(map), meta.env, &meta.advisor, episodes, seed)?;
        let report = write_eval(&dir, &logs, &meta.env)?;
        log::info!("{name}: SR {:.3} RC {:.3} over {episodes} episodes", report.sr, report.rc);
        out.push(MapReport {
            map: name.clone(),
            dir,
            report,
        });
    }
    Ok(out)
}

fn map_label(name: &str, map: &WorldMap) -> String {
    if Path::new(name).exists() {
        map.map_id.clone()
    } else {
        name.to_string()
    }
}

fn write_eval(dir: &Path, logs: &[EpisodeLog], env: &EnvConfig) -> Result<MetricsReport> {
    let episodes = dir.join("episodes");
    fs::create_dir_all(&episodes).with_context(|| format!("creating {}", episodes.display()))?;
    write_json(&dir.join(ENV_SNAPSHOT), env)?;
    for (i, log) in logs.iter().enumerate() {
        let file = File::create(episodes.join(format!("episode_{i:03}.csv")))?;
        log.write_csv(BufWriter::new(file))?;
    }
    let report = compute_metrics(logs)?;
    report.write_csv(File::create(dir.join("metrics.csv"))?)?;
    fs::write(dir.join("metrics.txt"), format!("{report}\n"))?;
    Ok(report)
}

/// Completion marker for one (agent, seed) cell of a benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellMarker {
    pub agent: AgentKind,
    pub seed: u64,
    pub maps: Vec<(String, MetricsReport)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSummary {
    pub map: String,
    /// Per agent, mean of each metric over seeds (equal episode counts make SR the pooled rate).
    pub agents: Vec<(AgentKind, MetricsReport)>,
    /// Per agent, the SR of each seed in `seeds` order.
    pub sr_by_seed: Vec<(AgentKind, Vec<f64>)>,
    /// Median over seeds of SR(agent) minus SR(first agent), paired by seed.
    pub median_sr_gain: Vec<(AgentKind, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSummary {
    pub seeds: Vec<u64>,
    pub maps: Vec<MapSummary>,
}

impl BenchSummary {
    pub fn map(&self, name: &str) -> Option<&MapSummary> {
        self.maps.iter().find(|m| m.map == name)
    }
}

impl MapSummary {
    pub fn sr(&self, agent: AgentKind) -> Option<f64> {
        self.agents.iter().find(|(a, _)| *a == agent).map(|(_, r)| r.sr)
    }

    pub fn median_gain(&self, agent: AgentKind) -> Option<f64> {
        self.median_sr_gain.iter().find(|(a, _)| *a == agent).map(|(_, g)| *g)
    }
}

pub fn cell_marker_path(out_dir: &Path, agent: AgentKind, seed: u64) -> PathBuf {
    out_dir.join("cells").join(format!("{agent}_{seed}.json"))
}

/// Trains and evaluates every (agent, seed) cell, skipping cells that already have a marker.
pub fn cmd_bench(config: &RunConfig, out_dir: &Path) -> Result<BenchSummary> {
    let agents = &config.bench.agents;
    let seeds = &config.bench.seeds;
    ensure!(agents.len() >= 2, "comparison needs at least 2 agents, got {}", agents.len());
    ensure!(!seeds.is_empty(), "bench needs at least one seed");
    fs::create_dir_all(out_dir.join("cells"))?;
    write_json(&out_dir.join(RESOLVED_CONFIG), config)?;
    let maps: Vec<String> = DEFAULT_EVAL_MAPS.iter().map(|s| s.to_string()).collect();
    let mut cells = Vec::new();
    for &agent in agents {
        for &seed in seeds {
            let marker = cell_marker_path(out_dir, agent, seed);
            if marker.exists() {
                let cell: CellMarker = serde_json::from_reader(BufReader::new(File::open(&marker)?))
                    .with_context(|| format!("reading {}", marker.display()))?;
                log::info!("skipping completed cell {agent}/{seed}");
                cells.push(cell);
                continue;
            }
            log::info!("bench cell {agent}/{seed}");
            let cell_config = config.for_cell(agent, seed);
            let run_dir = out_dir.join("runs").join(format!("{agent}_{seed}"));
            if run_dir.exists() {
                fs::remove_dir_all(&run_dir)?;
            }
            let trained = cmd_train(&cell_config, &run_dir)?;
            let reports = cmd_eval(
                &trained.final_checkpoint,
                &maps,
                config.eval_episodes,
                seed,
                &run_dir.join("eval"),
            )?;
            let cell = CellMarker {
                agent,
                seed,
                maps: reports.into_iter().map(|r| (r.map, r.report)).collect(),
            };
            write_json(&marker, &cell)?;
            cells.push(cell);
        }
    }
    let summary = summarize(agents, seeds, &maps, &cells)?;
    for m in &summary.maps {
        let named: Vec<(String, MetricsReport)> = m.agents.iter().map(|(a, r)| (a.to_string(), *r)).collect();
        let table = compare(&named)?;
        table.write_csv(File::create(out_dir.join(format!("comparison_{}.csv", m.map)))?)?;
        fs::write(out_dir.join(format!("comparison_{}.txt", m.map)), table.to_string())?;
    }
    write_json(&out_dir.join("summary.json"), &summary)?;
    fs::write(out_dir.join("summary.txt"), render_summary(&summary, agents[0]))?;
    Ok(summary)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean_report(reports: &[MetricsReport]) -> MetricsReport {
    let n = reports.len() as f64;
    let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    MetricsReport {
        episodes: reports.iter().map(|r| r.episodes).sum(),
        sr: avg(|r| r.sr),
        td: avg(|r| r.td),
        ad: avg(|r| r.ad),
        rc: avg(|r| r.rc),
        sm: avg(|r| r.sm),
        ss: avg(|r| r.ss),
        cdm: avg(|r| r.cdm),
        cds: avg(|r| r.cds),
        rm: avg(|r| r.rm),
        rs: avg(|r| r.rs),
    }
}

fn summarize(agents: &[AgentKind], seeds: &[u64], maps: &[String], cells: &[CellMarker]) -> Result<BenchSummary> {
    let lookup = |agent: AgentKind, seed: u64, map: &str| -> Result<MetricsReport> {
        cells
            .iter()
            .find(|c| c.agent == agent && c.seed == seed)
            .and_then(|c| c.maps.iter().find(|(m, _)| m == map))
            .map(|(_, r)| *r)
            .with_context(|| format!("no result for {agent}/{seed} on {map}"))
    };
    let mut out = Vec::new();
    for map in maps {
        let mut per_agent = Vec::new();
        let mut sr_by_seed = Vec::new();
        for &agent in agents {
            let reports = seeds.iter().map(|&s| lookup(agent, s, map)).collect::<Result<Vec<_>>>()?;
            sr_by_seed.push((agent, reports.iter().map(|r| r.sr).collect::<Vec<_>>()));
            per_agent.push((agent, mean_report(&reports)));
        }
        let base = sr_by_seed[0].1.clone();
        let median_sr_gain = sr_by_seed[1..]
            .iter()
            .map(|(a, srs)| {
                let mut diffs: Vec<f64> = srs.iter().zip(&base).map(|(x, b)| x - b).collect();
                (*a, median(&mut diffs))
            })
            .collect();
        out.push(MapSummary {
            map: map.clone(),
            agents: per_agent,
            sr_by_seed,
            median_sr_gain,
        });
    }
    Ok(BenchSummary {
        seeds: seeds.to_vec(),
        maps: out,
    })
}

fn render_summary(summary: &BenchSummary, baseline: AgentKind) -> String {
    let mut s = format!("seeds: {:?}\n", summary.seeds);
    for m in &summary.maps {
        s.push_str(&format!("\n[{}]\n", m.map));
        for (agent, srs) in &m.sr_by_seed {
            let cells: Vec<String> = srs.iter().map(|v| format!("{v:.2}")).collect();
            s.push_str(&format!("  {agent:<6} SR per seed [{}]  mean {:.3}\n", cells.join(", "), m.sr(*agent).unwrap_or(f64::NAN)));
        }
        for (agent, g) in &m.median_sr_gain {
            s.push_str(&format!("  median SR({agent}) - SR({baseline}) = {g:+.3}\n"));
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub report: ReplayReport,
    pub trajectory: PathBuf,
}

/// Finds the environment snapshot written next to an evaluation's episodes.
fn find_env_snapshot(log_path: &Path) -> Option<PathBuf> {
    log_path
        .ancestors()
        .skip(1)
        .take(3)
        .map(|d| d.join(ENV_SNAPSHOT))
        .find(|p| p.exists())
}

/// Re-simulates a logged episode and writes `<log>.trajectory.csv`.
pub fn cmd_replay(log_path: &Path, env_path: Option<&Path>, map: Option<&str>) -> Result<ReplayOutcome> {
    let file = File::open(log_path).with_context(|| format!("opening {}", log_path.display()))?;
    let log = EpisodeLog::read_csv(BufReader::new(file)).with_context(|| format!("parsing {}", log_path.display()))?;
    let env_file = env_path.map(Path::to_path_buf).or_else(|| find_env_snapshot(log_path));
    let env: EnvConfig = match &env_file {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => {
            log::warn!("no {ENV_SNAPSHOT} found; replaying with default environment settings");
            EnvConfig::default()
        }
    };
    let map = match map {
        Some(name) => load_named_map(name)?,
        None => load_named_map(&log.map_id)?,
    };
    let report = replay(&log, Arc::new(map), env)?;
    let trajectory = log_path.with_extension("trajectory.csv");
    write_trajectory(&log, BufWriter::new(File::create(&trajectory)?))?;
    Ok(ReplayOutcome { report, trajectory })
}

/// Replays every episode CSV under `dir`; returns the number verified.
pub fn replay_dir(dir: &Path) -> Result<usize> {
    let mut count = 0;
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("episode_") && n.ends_with(".csv") && !n.contains("trajectory")) {
                cmd_replay(&path, None, None).with_context(|| format!("replaying {}", path.display()))?;
                count += 1;
            }
        }
    }
    if count == 0 {
        bail!("no episode logs under {}", dir.display());
    }
    Ok(count)
}
