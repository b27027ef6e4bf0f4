//! `aas plan` — ground one plan per task and write them as JSONL.

use std::collections::BTreeMap;
use std::path::PathBuf;

use aas_core::Plan;

use crate::config::{
    build_plan_source, load_episodes, load_schema, CliError, HttpArgs, PlanSourceArgs,
};
use crate::ioutil::{atomic_write, to_jsonl};

#[derive(clap::Args)]
pub struct PlanCmd {
    /// Action schema JSON.
    #[arg(long)]
    schema: PathBuf,
    /// Episodes JSONL.
    #[arg(long)]
    episodes: PathBuf,
    #[command(flatten)]
    source: PlanSourceArgs,
    #[command(flatten)]
    http: HttpArgs,
    /// Plans JSONL to write.
    #[arg(long)]
    out: PathBuf,
    /// Fail on malformed episodes or any planning failure.
    #[arg(long)]
    strict: bool,
}

pub fn run(cmd: &PlanCmd) -> Result<(), CliError> {
    let schema = load_schema(&cmd.schema)?;
    let episodes = load_episodes(&cmd.episodes, cmd.strict)?;
    let source = build_plan_source(&cmd.source, &cmd.http)?;

    let mut plans: BTreeMap<String, Plan> = BTreeMap::new();
    let mut failures = 0usize;
    for episode in &episodes {
        match source.plan_for(&schema, episode) {
            Ok(plan) => {
                if let Some(prev) = plans.get(&plan.task_id) {
                    if *prev != plan {
                        log::warn!(
                            "task {}: conflicting plans across episodes; keeping the first",
                            plan.task_id
                        );
                    }
                } else {
                    plans.insert(plan.task_id.clone(), plan);
                }
            }
            Err(message) => {
                failures += 1;
                log::warn!("episode {}: {message}", episode.episode_id);
            }
        }
    }

    let ordered: Vec<Plan> = plans.into_values().collect();
    atomic_write(&cmd.out, &to_jsonl(&ordered))?;
    println!(
        "planned {} tasks from {} episodes ({} failures)",
        ordered.len(),
        episodes.len(),
        failures
    );
    if cmd.strict && failures > 0 {
        return Err(CliError::Strict(format!("{failures} episodes could not be planned")));
    }
    Ok(())
}
