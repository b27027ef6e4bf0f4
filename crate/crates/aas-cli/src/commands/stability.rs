//! `aas stability` — measure how much proposed boundaries move when
//! keyframes are jittered, without any validation gating.
//!
//! Each episode is segmented twice — once from clean keyframes, once
//! from jittered ones — and the two boundary sets are compared: shared
//! boundaries (within-one-frame agreement over cut points) and
//! step-duration concordance between the two runs.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use aas_core::ingest::select_keyframes;
use aas_core::metrics::{kendalls_w, stability};
use aas_core::segmenter::{build_request, project_to_valid};
use aas_core::util::mix_seed;
use aas_core::{Boundaries, Episode};
use serde::Serialize;

use crate::config::{
    build_backend, build_plan_source, fmt_opt, load_episodes, load_schema, map_episodes,
    resolve_parallel, BackendArgs, CliError, HttpArgs, PlanSourceArgs,
};
use crate::ioutil::{atomic_write, to_pretty};

#[derive(clap::Args)]
pub struct StabilityCmd {
    /// Action schema JSON.
    #[arg(long)]
    schema: PathBuf,
    /// Episodes JSONL.
    #[arg(long)]
    episodes: PathBuf,
    #[command(flatten)]
    source: PlanSourceArgs,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    http: HttpArgs,
    /// Reference segmentations JSONL for the oracle backend.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Keyframe budget per request.
    #[arg(long, default_value_t = 8)]
    budget: usize,
    /// Keyframe jitter magnitude for the second run.
    #[arg(long, default_value_t = 2)]
    jitter: u32,
    /// Base seed for keyframe selection.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (falls back to AAS_PARALLEL, then 1).
    #[arg(long)]
    parallel: Option<usize>,
    /// Stability report JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Fail on malformed episodes or any episode that cannot be compared.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
struct EpisodeAgreement {
    #[serde(skip_serializing_if = "Option::is_none")]
    stability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kendalls_w: Option<f64>,
}

#[derive(Debug, Serialize)]
struct StabilityReport {
    episodes: usize,
    compared: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    stability_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kendalls_w_mean: Option<f64>,
    per_episode: BTreeMap<String, EpisodeAgreement>,
}

pub fn run(cmd: &StabilityCmd) -> Result<(), CliError> {
    let schema = Arc::new(load_schema(&cmd.schema)?);
    let episodes = load_episodes(&cmd.episodes, cmd.strict)?;
    let source = build_plan_source(&cmd.source, &cmd.http)?;
    let backend = build_backend(&cmd.backend, &cmd.http, &schema, cmd.references.as_deref())?;
    let threads = resolve_parallel(cmd.parallel)?;

    let both_runs = |episode: &Episode| -> Result<(Boundaries, Boundaries), String> {
        let plan = source.plan_for(&schema, episode)?;
        let mut runs = Vec::with_capacity(2);
        for (tag, jitter, seed_tag) in [("j0", 0, "0"), ("j2", cmd.jitter, "2")] {
            let seed = mix_seed(cmd.seed, &[&episode.episode_id, "0", seed_tag]);
            let keyframes = select_keyframes(episode, cmd.budget, jitter, seed)
                .map_err(|e| e.to_string())?;
            let request = build_request(episode, &plan, &keyframes, &[]);
            let raw = backend.propose(&request, episode, tag).map_err(|e| e.to_string())?;
            runs.push(
                project_to_valid(&raw.spans(), episode.num_frames).map_err(|e| e.to_string())?,
            );
        }
        let jittered = runs.pop().expect("two runs");
        let base = runs.pop().expect("two runs");
        Ok((base, jittered))
    };

    let outcomes = map_episodes(&episodes, threads, |episode| {
        (episode.episode_id.clone(), both_runs(episode))
    })?;

    let mut per_episode = BTreeMap::new();
    let mut failures = 0usize;
    for (episode_id, outcome) in outcomes {
        match outcome {
            Ok((base, jittered)) => {
                let mut entry = EpisodeAgreement {
                    stability: Some(stability(&base, &jittered)),
                    kendalls_w: None,
                };
                if base.len() == jittered.len() {
                    let durations = |b: &Boundaries| -> Vec<f64> {
                        b.iter().map(|s| s.len() as f64).collect()
                    };
                    entry.kendalls_w = kendalls_w(&[durations(&base), durations(&jittered)]).ok();
                }
                per_episode.insert(episode_id, entry);
            }
            Err(message) => {
                failures += 1;
                log::warn!("episode {episode_id}: {message}");
            }
        }
    }

    let mean = |values: Vec<f64>| -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    let report = StabilityReport {
        episodes: episodes.len(),
        compared: per_episode.len(),
        stability_mean: mean(per_episode.values().filter_map(|e| e.stability).collect()),
        kendalls_w_mean: mean(per_episode.values().filter_map(|e| e.kendalls_w).collect()),
        per_episode,
    };
    atomic_write(&cmd.out, &to_pretty(&report))?;
    println!(
        "compared {} of {} episodes: stability {} kendalls_w {}",
        report.compared,
        report.episodes,
        fmt_opt(report.stability_mean),
        fmt_opt(report.kendalls_w_mean)
    );
    if cmd.strict && failures > 0 {
        return Err(CliError::Strict(format!("{failures} episodes could not be compared")));
    }
    Ok(())
}
