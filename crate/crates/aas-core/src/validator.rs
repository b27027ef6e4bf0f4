//! Stage three: validation gate and confidence calibration.
//!
//! A proposal survives only if it passes, in order: step count against
//! the plan, label order (and raw start monotonicity), and per-step
//! duration bounds after projection. Surviving episodes get one
//! confidence per step, blending the backend's own score, duration
//! slack inside the bounds, and agreement between a base and a
//! jitter-perturbed run. Failures are recorded with the first check
//! that failed on the final attempt.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{select_keyframes, Episode};
use crate::schema::{ActionSchema, GroundedOption, Plan};
use crate::segmenter::{
    build_request, clamp_span, project_to_valid, Boundaries, RawProposal, SegmentBackend,
};
use crate::span::Span;
use crate::util::mix_seed;

/// Why an episode was rejected. `step` indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RejectReason {
    CountFail { expected: usize, got: usize },
    OrderFail { detail: String },
    DurationFail { step: usize, duration: u32, d_min: u32, d_max: u32 },
    BackendFail { message: String },
}

/// One accepted step: the plan's grounded option, its frame span, and a
/// calibrated confidence in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatedSegment {
    pub step: GroundedOption,
    pub span: Span,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Accepted,
    Rejected(RejectReason),
}

impl EpisodeStatus {
    pub fn is_accepted(&self) -> bool {
        matches!(self, EpisodeStatus::Accepted)
    }
}

/// Final per-episode outcome, one JSONL line in run output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub task_id: String,
    pub num_frames: u32,
    pub status: EpisodeStatus,
    /// Empty unless accepted.
    #[serde(default)]
    pub segments: Vec<ValidatedSegment>,
    /// Backend attempts consumed (0 when planning already failed).
    pub attempts: u32,
}

impl EpisodeResult {
    /// Result for an episode whose plan could not be produced at all.
    pub fn planning_failure(episode: &Episode, message: String) -> Self {
        EpisodeResult {
            episode_id: episode.episode_id.clone(),
            task_id: episode.task_id.clone(),
            num_frames: episode.num_frames,
            status: EpisodeStatus::Rejected(RejectReason::BackendFail { message }),
            segments: Vec::new(),
            attempts: 0,
        }
    }
}

/// Duration bounds from config files, consulted before schema bounds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurationBoundsConfig {
    /// Option name -> `[d_min, d_max]`.
    #[serde(default)]
    pub per_option: BTreeMap<String, (u32, u32)>,
    /// Task id -> option name -> `[d_min, d_max]`; beats `per_option`.
    #[serde(default)]
    pub per_task: BTreeMap<String, BTreeMap<String, (u32, u32)>>,
}

impl DurationBoundsConfig {
    /// Bounds for one step: task override, then per-option, then the
    /// schema's declared bounds, then the permissive default `(2, T)`.
    pub fn resolve(
        &self,
        schema: &ActionSchema,
        task_id: &str,
        option: &str,
        t: u32,
    ) -> (u32, u32) {
        if let Some(b) = self.per_task.get(task_id).and_then(|m| m.get(option)) {
            return *b;
        }
        if let Some(b) = self.per_option.get(option) {
            return *b;
        }
        if let Some(b) = schema.option(option).and_then(|o| o.duration_bounds) {
            return b;
        }
        (2, t)
    }
}

/// Weights for blending the three confidence signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub w_model: f64,
    pub w_duration: f64,
    pub w_jitter: f64,
    /// With a signal missing: renormalize over the present ones (true)
    /// or score the missing signal as zero (false).
    pub renormalize_on_missing: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            w_model: 0.4,
            w_duration: 0.3,
            w_jitter: 0.3,
            renormalize_on_missing: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ValidatorError {
    #[error("calibration weights are degenerate: {message}")]
    DegenerateWeights { message: String },
}

/// Everything `validate_episode` needs beyond the episode and plan.
#[derive(Clone, Debug)]
pub struct ValidationConfig {
    pub keyframe_budget: usize,
    /// Jitter magnitude for the agreement re-run.
    pub jitter: u32,
    /// Extra backend attempts after the first.
    pub retries: u32,
    pub seed: u64,
    pub fewshot: Vec<String>,
    pub bounds: DurationBoundsConfig,
    pub calibration: CalibrationConfig,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            keyframe_budget: 8,
            jitter: 2,
            retries: 2,
            seed: 0,
            fewshot: Vec::new(),
            bounds: DurationBoundsConfig::default(),
            calibration: CalibrationConfig::default(),
        }
    }
}

/// Accepted episodes also expose both boundary runs for stability
/// analysis; rejected episodes only carry the result.
#[derive(Clone, Debug)]
pub struct ValidationOutput {
    pub result: EpisodeResult,
    pub runs: Option<JitterRuns>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JitterRuns {
    pub base: Boundaries,
    pub jittered: Boundaries,
}

/// Count check: one proposed step per plan step.
pub fn check_count(raw: &RawProposal, expected: usize) -> Result<(), RejectReason> {
    let got = raw.steps.len();
    if got == expected {
        Ok(())
    } else {
        Err(RejectReason::CountFail { expected, got })
    }
}

/// Order check: labels must equal the plan labels positionally and raw
/// starts must be strictly increasing.
pub fn check_order(raw: &RawProposal, plan_labels: &[String]) -> Result<(), RejectReason> {
    for (i, (step, expected)) in raw.steps.iter().zip(plan_labels).enumerate() {
        if step.label != *expected {
            return Err(RejectReason::OrderFail {
                detail: format!(
                    "step {i}: label {:?} does not match plan step {expected:?}",
                    step.label
                ),
            });
        }
    }
    for (i, w) in raw.steps.windows(2).enumerate() {
        if w[1].start <= w[0].start {
            return Err(RejectReason::OrderFail {
                detail: format!(
                    "step {} starts at {} which is not after step {} (start {})",
                    i + 1,
                    w[1].start,
                    i,
                    w[0].start
                ),
            });
        }
    }
    Ok(())
}

/// Duration check on projected spans, first violation wins.
pub fn check_duration(
    spans: &[Span],
    plan: &Plan,
    bounds: &DurationBoundsConfig,
    schema: &ActionSchema,
    t: u32,
) -> Result<(), RejectReason> {
    for (k, (span, step)) in spans.iter().zip(&plan.steps).enumerate() {
        let (lo, hi) = bounds.resolve(schema, &plan.task_id, &step.option, t);
        let d = span.len();
        if d < lo || d > hi {
            return Err(RejectReason::DurationFail { step: k, duration: d, d_min: lo, d_max: hi });
        }
    }
    Ok(())
}

/// How comfortably a duration sits inside its bounds: 1.0 at the
/// midpoint, 0.0 at either bound, linear in between. Point bounds give
/// full slack.
pub fn duration_slack(d: u32, d_min: u32, d_max: u32) -> f64 {
    if d_min >= d_max {
        return 1.0;
    }
    let margin = d.saturating_sub(d_min).min(d_max.saturating_sub(d)) as f64;
    (2.0 * margin / (d_max - d_min) as f64).clamp(0.0, 1.0)
}

/// Inclusive-interval intersection-over-union of two spans.
pub fn span_iou(a: Span, b: Span) -> f64 {
    let inter = a.intersection_len(&b) as f64;
    let union = (a.len() + b.len()) as f64 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Blends model score, duration slack, and jitter agreement into one
/// confidence. Missing signals are either renormalized away or scored
/// as zero, per config. Monotone non-decreasing in every signal.
pub fn calibrate_confidence(
    model_score: Option<f64>,
    slack: f64,
    agreement: Option<f64>,
    cfg: &CalibrationConfig,
) -> Result<f64, ValidatorError> {
    for (name, w) in [
        ("w_model", cfg.w_model),
        ("w_duration", cfg.w_duration),
        ("w_jitter", cfg.w_jitter),
    ] {
        if !w.is_finite() || w < 0.0 {
            return Err(ValidatorError::DegenerateWeights {
                message: format!("{name} = {w} (weights must be finite and non-negative)"),
            });
        }
    }
    let mut numerator = 0.0;
    let mut present_weight = 0.0;
    let mut add = |weight: f64, value: Option<f64>| {
        if let Some(v) = value {
            numerator += weight * v;
            present_weight += weight;
        }
    };
    add(cfg.w_model, model_score);
    add(cfg.w_duration, Some(slack));
    add(cfg.w_jitter, agreement);
    let denominator = if cfg.renormalize_on_missing {
        present_weight
    } else {
        cfg.w_model + cfg.w_duration + cfg.w_jitter
    };
    if denominator <= 0.0 {
        return Err(ValidatorError::DegenerateWeights {
            message: "no signal carries positive weight".to_string(),
        });
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

fn run_tag(base: &str, attempt: u32) -> String {
    if attempt == 0 {
        base.to_string()
    } else {
        format!("{base}.r{attempt}")
    }
}

/// Runs the full per-episode pipeline: keyframes, proposal, the check
/// chain, the jitter agreement re-run, and confidence calibration, with
/// up to `retries` extra attempts. Never panics on backend garbage —
/// every failure mode becomes a rejection carrying the first check that
/// failed on the last attempt.
pub fn validate_episode(
    schema: &ActionSchema,
    episode: &Episode,
    plan: &Plan,
    backend: &dyn SegmentBackend,
    cfg: &ValidationConfig,
) -> ValidationOutput {
    let k = plan.k();
    let t = episode.num_frames;
    let plan_labels = plan.labels();
    let mut last_reason = RejectReason::BackendFail { message: "no attempts made".to_string() };

    for attempt in 0..=cfg.retries {
        let attempt_tag = attempt.to_string();
        let reason = match attempt_once(
            schema, episode, plan, backend, cfg, k, t, &plan_labels, attempt, &attempt_tag,
        ) {
            Ok(output) => return output,
            Err(reason) => reason,
        };
        last_reason = reason;
    }

    ValidationOutput {
        result: EpisodeResult {
            episode_id: episode.episode_id.clone(),
            task_id: episode.task_id.clone(),
            num_frames: t,
            status: EpisodeStatus::Rejected(last_reason),
            segments: Vec::new(),
            attempts: cfg.retries + 1,
        },
        runs: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn attempt_once(
    schema: &ActionSchema,
    episode: &Episode,
    plan: &Plan,
    backend: &dyn SegmentBackend,
    cfg: &ValidationConfig,
    k: usize,
    t: u32,
    plan_labels: &[String],
    attempt: u32,
    attempt_tag: &str,
) -> Result<ValidationOutput, RejectReason> {
    let backend_fail = |message: String| RejectReason::BackendFail { message };

    // Base run: unjittered keyframes.
    let kf0 = select_keyframes(
        episode,
        cfg.keyframe_budget,
        0,
        mix_seed(cfg.seed, &[&episode.episode_id, attempt_tag, "0"]),
    )
    .map_err(|e| backend_fail(e.to_string()))?;
    let req0 = build_request(episode, plan, &kf0, &cfg.fewshot);
    let raw0 = backend
        .propose(&req0, episode, &run_tag("j0", attempt))
        .map_err(|e| backend_fail(e.to_string()))?;

    check_count(&raw0, k)?;
    check_order(&raw0, plan_labels)?;
    let base = project_to_valid(&raw0.spans(), t).map_err(|e| backend_fail(e.to_string()))?;
    check_duration(&base, plan, &cfg.bounds, schema, t)?;

    // Agreement run: jittered keyframes, judged but never gating.
    let kf2 = select_keyframes(
        episode,
        cfg.keyframe_budget,
        cfg.jitter,
        mix_seed(cfg.seed, &[&episode.episode_id, attempt_tag, "2"]),
    )
    .map_err(|e| backend_fail(e.to_string()))?;
    let req2 = build_request(episode, plan, &kf2, &cfg.fewshot);
    let raw2 = backend
        .propose(&req2, episode, &run_tag("j2", attempt))
        .map_err(|e| backend_fail(e.to_string()))?;
    let jittered: Boundaries = if raw2.steps.len() == k {
        project_to_valid(&raw2.spans(), t).map_err(|e| backend_fail(e.to_string()))?
    } else {
        raw2.spans().iter().map(|&(s, e)| clamp_span(s, e, t)).collect()
    };

    let mut segments = Vec::with_capacity(k);
    for (i, (span, step)) in base.iter().zip(&plan.steps).enumerate() {
        let (lo, hi) = cfg.bounds.resolve(schema, &plan.task_id, &step.option, t);
        let slack = duration_slack(span.len(), lo, hi);
        let agreement = jittered.get(i).map(|j| span_iou(*span, *j)).unwrap_or(0.0);
        let confidence =
            calibrate_confidence(raw0.steps[i].score, slack, Some(agreement), &cfg.calibration)
                .map_err(|e| backend_fail(e.to_string()))?;
        segments.push(ValidatedSegment { step: step.clone(), span: *span, confidence });
    }

    Ok(ValidationOutput {
        result: EpisodeResult {
            episode_id: episode.episode_id.clone(),
            task_id: episode.task_id.clone(),
            num_frames: t,
            status: EpisodeStatus::Accepted,
            segments,
            attempts: attempt + 1,
        },
        runs: Some(JitterRuns { base, jittered }),
    })
}
