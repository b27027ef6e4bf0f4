//! `aas validate` — run the validation chain over stored proposals.
//!
//! Takes a JSON map of episode id to raw proposal (plus, optionally, a
//! second map from a jittered run for the agreement signal) and applies
//! the same checks as the full pipeline: step count, then label order,
//! then boundary projection, then duration bounds, then confidence
//! calibration. No backend is contacted and there are no retries —
//! each proposal is judged exactly as given.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aas_core::segmenter::{clamp_span, project_to_valid};
use aas_core::validator::{
    calibrate_confidence, check_count, check_duration, check_order, duration_slack, span_iou,
    CalibrationConfig, DurationBoundsConfig, RejectReason,
};
use aas_core::{
    ActionSchema, Boundaries, Episode, EpisodeResult, EpisodeStatus, Plan, RawProposal,
    ValidatedSegment,
};

use crate::config::{load_episodes, load_plans, load_schema, CliError};
use crate::ioutil::{atomic_write, read_file, to_jsonl};

#[derive(clap::Args)]
pub struct ValidateCmd {
    /// Action schema JSON.
    #[arg(long)]
    schema: PathBuf,
    /// Episodes JSONL.
    #[arg(long)]
    episodes: PathBuf,
    /// Plans JSONL keyed by task id.
    #[arg(long)]
    plans: PathBuf,
    /// JSON map of episode id to raw proposal.
    #[arg(long)]
    proposals: PathBuf,
    /// Same map from a jittered run; enables the agreement signal.
    #[arg(long)]
    proposals_jitter: Option<PathBuf>,
    /// Duration bounds overrides JSON.
    #[arg(long)]
    bounds: Option<PathBuf>,
    /// Confidence weight config JSON.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Results JSONL to write.
    #[arg(long)]
    out: PathBuf,
    /// Fail on malformed episodes or any rejection.
    #[arg(long)]
    strict: bool,
}

fn load_proposal_map(path: &Path) -> Result<BTreeMap<String, RawProposal>, CliError> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::Config(format!("{}: bad proposal map: {e}", path.display())))
}

pub fn run(cmd: &ValidateCmd) -> Result<(), CliError> {
    let schema = load_schema(&cmd.schema)?;
    let episodes = load_episodes(&cmd.episodes, cmd.strict)?;
    let plans = load_plans(&cmd.plans)?;
    let proposals = load_proposal_map(&cmd.proposals)?;
    let jittered = match &cmd.proposals_jitter {
        Some(path) => Some(load_proposal_map(path)?),
        None => None,
    };
    let bounds: DurationBoundsConfig = match &cmd.bounds {
        Some(path) => serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Config(format!("{}: bad bounds config: {e}", path.display())))?,
        None => DurationBoundsConfig::default(),
    };
    let calibration: CalibrationConfig = match &cmd.calibration {
        Some(path) => serde_json::from_str(&read_file(path)?).map_err(|e| {
            CliError::Config(format!("{}: bad calibration config: {e}", path.display()))
        })?,
        None => CalibrationConfig::default(),
    };

    let mut results: Vec<EpisodeResult> = Vec::new();
    let mut skipped = 0usize;
    for episode in &episodes {
        let Some(raw) = proposals.get(&episode.episode_id) else {
            skipped += 1;
            log::warn!("episode {}: no proposal on file; skipping", episode.episode_id);
            continue;
        };
        let result = match plans.get(&episode.task_id) {
            Some(plan) => {
                let raw2 = jittered.as_ref().and_then(|m| m.get(&episode.episode_id));
                validate_one(&schema, episode, plan, raw, raw2, &bounds, &calibration)
            }
            None => EpisodeResult::planning_failure(
                episode,
                format!("no plan on file for task {}", episode.task_id),
            ),
        };
        results.push(result);
    }
    results.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));

    atomic_write(&cmd.out, &to_jsonl(&results))?;
    let accepted = results.iter().filter(|r| r.status.is_accepted()).count();
    println!(
        "validated {} episodes: {} accepted, {} rejected, {} without proposals",
        results.len(),
        accepted,
        results.len() - accepted,
        skipped
    );
    if cmd.strict && accepted < results.len() {
        return Err(CliError::Strict(format!("{} episodes rejected", results.len() - accepted)));
    }
    Ok(())
}

/// The validation chain for one stored proposal, mirroring the live
/// pipeline's single-attempt behavior. Without a jittered counterpart
/// the agreement signal is absent and the confidence weights handle the
/// gap per config.
fn validate_one(
    schema: &ActionSchema,
    episode: &Episode,
    plan: &Plan,
    raw: &RawProposal,
    raw_jitter: Option<&RawProposal>,
    bounds: &DurationBoundsConfig,
    calibration: &CalibrationConfig,
) -> EpisodeResult {
    let k = plan.k();
    let t = episode.num_frames;
    let reject = |reason: RejectReason| EpisodeResult {
        episode_id: episode.episode_id.clone(),
        task_id: episode.task_id.clone(),
        num_frames: t,
        status: EpisodeStatus::Rejected(reason),
        segments: Vec::new(),
        attempts: 1,
    };
    let backend_fail =
        |message: String| RejectReason::BackendFail { message };

    if let Err(reason) = check_count(raw, k) {
        return reject(reason);
    }
    if let Err(reason) = check_order(raw, &plan.labels()) {
        return reject(reason);
    }
    let base = match project_to_valid(&raw.spans(), t) {
        Ok(base) => base,
        Err(e) => return reject(backend_fail(e.to_string())),
    };
    if let Err(reason) = check_duration(&base, plan, bounds, schema, t) {
        return reject(reason);
    }

    let jittered: Option<Boundaries> = raw_jitter.map(|r2| {
        if r2.steps.len() == k {
            project_to_valid(&r2.spans(), t)
                .unwrap_or_else(|_| r2.spans().iter().map(|&(s, e)| clamp_span(s, e, t)).collect())
        } else {
            r2.spans().iter().map(|&(s, e)| clamp_span(s, e, t)).collect()
        }
    });

    let mut segments = Vec::with_capacity(k);
    for (i, (span, step)) in base.iter().zip(&plan.steps).enumerate() {
        let (lo, hi) = bounds.resolve(schema, &plan.task_id, &step.option, t);
        let slack = duration_slack(span.len(), lo, hi);
        let agreement = jittered
            .as_ref()
            .map(|j| j.get(i).map(|js| span_iou(*span, *js)).unwrap_or(0.0));
        let confidence =
            match calibrate_confidence(raw.steps[i].score, slack, agreement, calibration) {
                Ok(c) => c,
                Err(e) => return reject(backend_fail(e.to_string())),
            };
        segments.push(ValidatedSegment { step: step.clone(), span: *span, confidence });
    }

    EpisodeResult {
        episode_id: episode.episode_id.clone(),
        task_id: episode.task_id.clone(),
        num_frames: t,
        status: EpisodeStatus::Accepted,
        segments,
        attempts: 1,
    }
}
