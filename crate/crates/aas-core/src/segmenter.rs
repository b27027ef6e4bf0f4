//! Stage two: schema-constrained boundary proposal.
//!
//! A segmentation backend receives the episode's plan labels and
//! keyframes and returns one raw step per plan step. Raw proposals may
//! be arbitrarily sloppy — overlapping, gapped, inverted, out of range —
//! and [`project_to_valid`] snaps them onto the nearest exact partition
//! of `[1, T]`, which is the only form later stages accept.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{summarize_state, Episode, KeyframeSet, StateSummary};
use crate::remote::{RemoteClient, RemoteError};
use crate::schema::{ActionSchema, Plan};
use crate::span::Span;

/// Everything a backend may look at when proposing boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRequest {
    pub episode_id: String,
    pub instruction: String,
    /// Canonical plan labels, in order; the proposal must follow these.
    pub plan_labels: Vec<String>,
    pub keyframes: Vec<u32>,
    pub state_summaries: Vec<StateSummary>,
    #[serde(default)]
    pub fewshot: Vec<String>,
    pub num_frames: u32,
}

/// One proposed step, exactly as the backend produced it. Nothing here
/// is trusted: bounds may be inverted, out of range, or overlapping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawStep {
    pub label: String,
    pub start: i64,
    pub end: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// A backend's full answer for one episode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawProposal {
    pub steps: Vec<RawStep>,
}

impl RawProposal {
    pub fn labels(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn spans(&self) -> Vec<(i64, i64)> {
        self.steps.iter().map(|s| (s.start, s.end)).collect()
    }
}

/// Validated, contiguous spans covering `[1, T]`.
pub type Boundaries = Vec<Span>;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("no replayed proposal under key {key:?}")]
    MissingReplay { key: String },
    #[error("proposal request is infeasible: {message}")]
    Infeasible { message: String },
    #[error("backend returned a malformed proposal: {message}")]
    Malformed { message: String },
}

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("cannot project an empty proposal")]
    EmptyProposal,
    #[error("{k} steps cannot partition {t} frames")]
    TooManySteps { k: usize, t: u32 },
}

/// Boundary proposal strategy. Implementations must be safe to call
/// from parallel episode workers.
///
/// `run_tag` names the call site ("j0", "j2", retry suffixes) so that
/// replayed runs can distinguish proposals for the same episode.
pub trait SegmentBackend: Send + Sync {
    fn propose(
        &self,
        request: &SegmentationRequest,
        episode: &Episode,
        run_tag: &str,
    ) -> Result<RawProposal, BackendError>;

    fn id(&self) -> &str;
}

/// Packages plan, keyframes, and per-keyframe state for a backend.
pub fn build_request(
    episode: &Episode,
    plan: &Plan,
    keyframes: &KeyframeSet,
    fewshot: &[String],
) -> SegmentationRequest {
    SegmentationRequest {
        episode_id: episode.episode_id.clone(),
        instruction: episode.instruction.clone(),
        plan_labels: plan.labels(),
        keyframes: keyframes.indices.clone(),
        state_summaries: keyframes.indices.iter().map(|&i| summarize_state(episode, i)).collect(),
        fewshot: fewshot.to_vec(),
        num_frames: episode.num_frames,
    }
}

/// Swaps inverted bounds and clamps both ends into `[1, t]`.
pub fn clamp_span(start: i64, end: i64, t: u32) -> Span {
    let (lo, hi) = if start <= end { (start, end) } else { (end, start) };
    let clamp = |v: i64| v.clamp(1, t as i64) as u32;
    Span::new(clamp(lo), clamp(hi))
}

/// Snaps raw spans onto the nearest exact partition of `[1, t]`.
///
/// Each raw span is normalized (swap + clamp), spans are ordered by
/// midpoint, and each adjacent pair contributes one cut at the midpoint
/// between them; cuts are then clamped so every step keeps at least one
/// frame. The result always has `k` spans, starts at 1, ends at `t`,
/// and is contiguous — and projecting a valid partition returns it
/// unchanged, so the operation is idempotent.
pub fn project_to_valid(raw: &[(i64, i64)], t: u32) -> Result<Boundaries, ProjectionError> {
    let k = raw.len();
    if k == 0 {
        return Err(ProjectionError::EmptyProposal);
    }
    if k as u64 > t as u64 {
        return Err(ProjectionError::TooManySteps { k, t });
    }
    let mut spans: Vec<Span> = raw.iter().map(|&(s, e)| clamp_span(s, e, t)).collect();
    spans.sort_by_key(|s| s.start as u64 + s.end as u64);

    let ti = t as i64;
    let ki = k as i64;
    let mut cuts: Vec<i64> = Vec::with_capacity(k - 1);
    for i in 0..k - 1 {
        let desired = (spans[i].end as i64 + spans[i + 1].start as i64) / 2;
        let idx = i as i64 + 1; // this cut ends step idx (1-based)
        let mut cut = desired.clamp(idx, ti - (ki - idx));
        if let Some(&prev) = cuts.last() {
            cut = cut.max(prev + 1);
        }
        cuts.push(cut);
    }

    let mut out = Vec::with_capacity(k);
    let mut prev = 0i64;
    for &cut in &cuts {
        out.push(Span::new((prev + 1) as u32, cut as u32));
        prev = cut;
    }
    out.push(Span::new((prev + 1) as u32, t));
    Ok(out)
}

/// Checks the partition contract: `k` spans, `[1, t]` covered exactly,
/// contiguous, each span at least one frame.
pub fn is_valid_partition(spans: &[Span], t: u32) -> bool {
    if spans.is_empty() || spans[0].start != 1 || spans[spans.len() - 1].end != t {
        return false;
    }
    spans.iter().all(|s| s.start <= s.end)
        && spans.windows(2).all(|w| w[0].end + 1 == w[1].start)
}

// ---------------------------------------------------------------------------
// Heuristic backend: gripper-event cuts with schema-aware separation
// ---------------------------------------------------------------------------

/// Signal-driven backend: cuts at the largest gripper-width changes,
/// kept at least one minimum-duration apart; falls back to uniform
/// splitting when the signal cannot support `K - 1` cuts.
pub struct HeuristicBackend {
    schema: Arc<ActionSchema>,
}

impl HeuristicBackend {
    pub fn new(schema: Arc<ActionSchema>) -> Self {
        HeuristicBackend { schema }
    }

    /// Smallest declared minimum duration among the plan's options.
    fn min_separation(&self, plan_labels: &[String]) -> u32 {
        plan_labels
            .iter()
            .filter_map(|label| {
                let name = label.split('(').next().unwrap_or(label);
                self.schema.option(name).and_then(|o| o.duration_bounds).map(|b| b.0)
            })
            .min()
            .unwrap_or(1)
            .max(1)
    }
}

impl SegmentBackend for HeuristicBackend {
    fn propose(
        &self,
        request: &SegmentationRequest,
        episode: &Episode,
        _run_tag: &str,
    ) -> Result<RawProposal, BackendError> {
        let k = request.plan_labels.len();
        let t = request.num_frames;
        if k == 0 {
            return Err(BackendError::Infeasible { message: "plan has no steps".into() });
        }
        if k as u64 > t as u64 {
            return Err(BackendError::Infeasible {
                message: format!("{k} steps cannot fit in {t} frames"),
            });
        }

        // Candidate cuts: position f (1..T-1) where the gripper channel
        // changes between frames f and f+1, strongest first.
        let mut magnitudes: Vec<f64> = vec![0.0; t as usize]; // index by cut position
        if let Some(series) = episode.channel(crate::ingest::GRIPPER_CHANNEL) {
            for f in 1..t as usize {
                magnitudes[f] = (series[f] - series[f - 1]).abs();
            }
        }
        let max_mag = magnitudes.iter().cloned().fold(0.0f64, f64::max);
        let mut candidates: Vec<u32> =
            (1..t).filter(|&f| magnitudes[f as usize] > 0.0).collect();
        candidates.sort_by(|&a, &b| {
            magnitudes[b as usize]
                .partial_cmp(&magnitudes[a as usize])
                .unwrap()
                .then_with(|| a.cmp(&b))
        });

        let min_sep = self.min_separation(&request.plan_labels);
        let mut accepted: Vec<u32> = Vec::new();
        for f in candidates {
            if accepted.len() + 1 >= k {
                break;
            }
            let clears_edges = f >= min_sep && t - f >= min_sep;
            let clears_others =
                accepted.iter().all(|&g| (f as i64 - g as i64).unsigned_abs() >= min_sep as u64);
            if clears_edges && clears_others {
                accepted.push(f);
            }
        }

        let (cuts, uniform): (Vec<u32>, bool) = if accepted.len() + 1 < k {
            // Not enough signal: uniform split.
            ((1..k as u32).map(|i| (i as u64 * t as u64 / k as u64) as u32).collect(), true)
        } else {
            accepted.sort_unstable();
            (accepted, false)
        };

        let mut steps = Vec::with_capacity(k);
        let mut prev = 0u32;
        for (i, label) in request.plan_labels.iter().enumerate() {
            let end = if i == k - 1 { t } else { cuts[i] };
            // Confidence from the strength of the cut that bounds this
            // step (its terminating cut; the last step uses its opening
            // cut). Uniform fallback and K = 1 carry a neutral 0.5.
            let score = if uniform || cuts.is_empty() {
                0.5
            } else {
                let cut = if i == k - 1 { cuts[i - 1] } else { cuts[i] };
                let m = magnitudes[cut as usize];
                if m > 0.0 && max_mag > 0.0 {
                    m / max_mag
                } else {
                    0.5
                }
            };
            steps.push(RawStep {
                label: label.clone(),
                start: (prev + 1) as i64,
                end: end as i64,
                score: Some(score),
            });
            prev = end;
        }
        Ok(RawProposal { steps })
    }

    fn id(&self) -> &str {
        "heuristic"
    }
}

// ---------------------------------------------------------------------------
// Replay backend: canned proposals for offline reproduction
// ---------------------------------------------------------------------------

/// Proposals recorded from an earlier run, keyed
/// `"{episode_id}/{source_id}/{run_tag}"`.
pub type ReplayStore = BTreeMap<String, RawProposal>;

pub fn replay_key(episode_id: &str, source_id: &str, run_tag: &str) -> String {
    format!("{episode_id}/{source_id}/{run_tag}")
}

pub fn parse_replay_store(text: &str) -> Result<ReplayStore, BackendError> {
    serde_json::from_str(text)
        .map_err(|e| BackendError::Malformed { message: format!("replay store: {e}") })
}

pub fn serialize_replay_store(store: &ReplayStore) -> String {
    serde_json::to_string_pretty(store).expect("replay store serialization cannot fail")
}

/// Replays stored proposals; a missing key is a backend failure.
pub struct ReplayBackend {
    store: ReplayStore,
    source_id: String,
}

impl ReplayBackend {
    pub fn new(store: ReplayStore, source_id: &str) -> Self {
        ReplayBackend { store, source_id: source_id.to_string() }
    }
}

impl SegmentBackend for ReplayBackend {
    fn propose(
        &self,
        request: &SegmentationRequest,
        _episode: &Episode,
        run_tag: &str,
    ) -> Result<RawProposal, BackendError> {
        let key = replay_key(&request.episode_id, &self.source_id, run_tag);
        self.store.get(&key).cloned().ok_or(BackendError::MissingReplay { key })
    }

    fn id(&self) -> &str {
        &self.source_id
    }
}

// ---------------------------------------------------------------------------
// Remote backend: POST the request to a segmentation service
// ---------------------------------------------------------------------------

/// Sends the request to `{endpoint}/segment`. With `anchored` set, the
/// response's labels are overwritten positionally with the plan labels
/// (for services that return boundaries but garble label text).
pub struct RemoteBackend {
    client: RemoteClient,
    anchored: bool,
}

impl RemoteBackend {
    pub fn new(client: RemoteClient, anchored: bool) -> Self {
        RemoteBackend { client, anchored }
    }
}

impl SegmentBackend for RemoteBackend {
    fn propose(
        &self,
        request: &SegmentationRequest,
        _episode: &Episode,
        _run_tag: &str,
    ) -> Result<RawProposal, BackendError> {
        let body = serde_json::to_value(request)
            .map_err(|e| BackendError::Malformed { message: e.to_string() })?;
        let value = self.client.call("segment", &body)?;
        let mut proposal: RawProposal = serde_json::from_value(value)
            .map_err(|e| BackendError::Malformed { message: e.to_string() })?;
        if self.anchored {
            for (step, label) in proposal.steps.iter_mut().zip(&request.plan_labels) {
                step.label = label.clone();
            }
        }
        Ok(proposal)
    }

    fn id(&self) -> &str {
        "remote"
    }
}
