use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use covlm_core::trainer::{AgentKind, Preset};

use crate::commands::{self, DEFAULT_EVAL_MAPS};
use crate::config::{self, Overrides};

#[derive(Debug, Parser)]
#[command(name = "covlm", version, about = "Train and evaluate advisor-guided driving agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run config; may name a `preset` to inherit from.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub agent: Option<AgentKind>,
    /// `seen`, `unseen` or a map file.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluation episodes per map.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Output directory (falls back to the config, then $COVLM_OUT_DIR, then `runs`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<(config::RunConfig, PathBuf)> {
        let overrides = Overrides {
            preset: self.preset,
            agent: self.agent,
            map: self.map.clone(),
            seed: self.seed,
            episodes: self.episodes,
        };
        let config = config::resolve(self.config.as_deref(), &overrides)?;
        let out = config.out_dir(self.out.as_deref());
        Ok((config, out))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one agent and write curves, checkpoints and the resolved config.
    Train(ConfigArgs),
    /// Evaluate a checkpoint on one or more maps.
    Eval {
        checkpoint: PathBuf,
        /// Maps to evaluate on (repeatable); defaults to both bundled maps.
        #[arg(long = "map")]
        maps: Vec<String>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate every configured agent and seed, then compare.
    Bench(ConfigArgs),
    /// Re-simulate a logged episode and check it step by step.
    Replay {
        log: PathBuf,
        /// Environment settings; defaults to the env.json written beside the log.
        #[arg(long)]
        env: Option<PathBuf>,
        /// Map override when the log's map id is not a bundled map.
        #[arg(long)]
        map: Option<String>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let (config, out) = args.resolve()?;
            let outcome = commands::cmd_train(&config, &out)?;
            println!("trained {} updates; checkpoint {}", outcome.updates, outcome.final_checkpoint.display());
        }
        Command::Eval {
            checkpoint,
            maps,
            episodes,
            seed,
            out,
        } => {
            let maps = if maps.is_empty() {
                DEFAULT_EVAL_MAPS.iter().map(|s| s.to_string()).collect()
            } else {
                maps
            };
            let out = out.unwrap_or_else(|| checkpoint.parent().map(|p| p.join("eval")).unwrap_or_else(|| "eval".into()));
            for r in commands::cmd_eval(&checkpoint, &maps, episodes, seed, &out)? {
                println!("[{}] -> {}\n{}", r.map, r.dir.display(), r.report);
            }
        }
        Command::Bench(args) => {
            let (config, out) = args.resolve()?;
            let out = out.join("bench");
            commands::cmd_bench(&config, &out)?;
            print!("{}", std::fs::read_to_string(out.join("summary.txt"))?);
        }
        Command::Replay { log, env, map } => {
            let outcome = commands::cmd_replay(&log, env.as_deref(), map.as_deref())?;
            println!(
                "verified {} steps (max error {:e}); trajectory {}",
                outcome.report.steps,
                outcome.report.max_error,
                outcome.trajectory.display()
            );
        }
    }
    Ok(())
}
