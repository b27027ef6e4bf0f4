//! Episode ingestion: demonstration records, scene descriptions,
//! keyframe selection, and per-frame state summaries.
//!
//! Episodes arrive as JSON Lines, one record per line. Frames are
//! indexed 1..=T throughout. Unknown fields (raw action streams,
//! per-frame extras) are tolerated and ignored so recorder output can
//! be fed in directly.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::Literal;

/// The state channel keyframe selection treats as the event signal.
pub const GRIPPER_CHANNEL: &str = "gripper_width";

/// One named, typed object in a scene.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub name: String,
    #[serde(rename = "type")]
    pub object_type: String,
}

/// Objects plus symbolic initial and goal literals for one episode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub init: Vec<Literal>,
    #[serde(default)]
    pub goal: Vec<Literal>,
}

impl SceneDescription {
    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects.iter().find(|o| o.name == name).map(|o| o.object_type.as_str())
    }
}

/// One demonstration episode of T frames.
///
/// `state_channels` maps channel name to a length-T series; channels are
/// stored in a sorted map so iteration order is stable everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    pub task_id: String,
    #[serde(default)]
    pub instruction: String,
    pub num_frames: u32,
    #[serde(default)]
    pub state_channels: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_refs: Option<Vec<String>>,
    #[serde(default)]
    pub scene: SceneDescription,
}

impl Episode {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.state_channels.get(name).map(Vec::as_slice)
    }
}

/// Sorted 1-based frame indices chosen to represent an episode, plus the
/// jitter magnitude they were drawn with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyframeSet {
    pub indices: Vec<u32>,
    pub jitter: u32,
}

/// Channel values at a single frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub frame: u32,
    pub values: BTreeMap<String, f64>,
}

/// A non-fatal problem with one input line (lenient mode records these
/// instead of aborting).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IngestIssue {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub message: String,
}

/// Parsed episodes plus any lines that were skipped.
#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub episodes: Vec<Episode>,
    pub issues: Vec<IngestIssue>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error("keyframe budget must be at least 2, got {0}")]
    BudgetTooSmall(usize),
}

fn check_record(ep: &Episode) -> Result<(), String> {
    if ep.episode_id.is_empty() {
        return Err("episode_id must be nonempty".to_string());
    }
    if ep.task_id.is_empty() {
        return Err("task_id must be nonempty".to_string());
    }
    if ep.num_frames < 1 {
        return Err("num_frames must be at least 1".to_string());
    }
    for (name, series) in &ep.state_channels {
        if series.len() != ep.num_frames as usize {
            return Err(format!(
                "channel {:?} has {} samples, expected num_frames = {}",
                name,
                series.len(),
                ep.num_frames
            ));
        }
        if series.iter().any(|v| !v.is_finite()) {
            return Err(format!("channel {name:?} contains a non-finite sample"));
        }
    }
    if let Some(refs) = &ep.frame_refs {
        if refs.len() != ep.num_frames as usize {
            return Err(format!(
                "frame_refs has {} entries, expected num_frames = {}",
                refs.len(),
                ep.num_frames
            ));
        }
    }
    Ok(())
}

/// Parses a JSON Lines episode stream.
///
/// In strict mode the first malformed or invalid record aborts with an
/// error carrying its line number. In lenient mode bad records (and
/// repeated episode ids) are skipped and reported as issues. Blank lines
/// are ignored in both modes.
pub fn parse_episodes(text: &str, strict: bool) -> Result<IngestReport, IngestError> {
    let mut report = IngestReport::default();
    let mut seen_ids: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let message = match serde_json::from_str::<Episode>(raw) {
            Ok(ep) => match check_record(&ep) {
                Ok(()) if seen_ids.contains(&ep.episode_id) => {
                    Some(format!("duplicate episode_id {:?}", ep.episode_id))
                }
                Ok(()) => {
                    seen_ids.push(ep.episode_id.clone());
                    report.episodes.push(ep);
                    None
                }
                Err(m) => Some(m),
            },
            Err(e) => Some(e.to_string()),
        };
        if let Some(message) = message {
            if strict {
                return Err(IngestError::BadRecord { line, message });
            }
            report.issues.push(IngestIssue { line, message });
        }
    }
    Ok(report)
}

/// Selects up to `budget` representative frames from an episode.
///
/// The set always contains frames 1 and T. A uniform grid provides
/// coverage; the remaining budget goes to the frames right after the
/// largest gripper-width changes, which is where segment boundaries tend
/// to live. When `jitter > 0`, every interior index is shifted by a
/// uniform integer in `[-jitter, +jitter]` (clamped to `[2, T-1]`),
/// seeded so the same `(seed, jitter)` pair always yields the same set.
pub fn select_keyframes(
    episode: &Episode,
    budget: usize,
    jitter: u32,
    seed: u64,
) -> Result<KeyframeSet, IngestError> {
    if budget < 2 {
        return Err(IngestError::BudgetTooSmall(budget));
    }
    let t = episode.num_frames;
    let mut picked: Vec<u32> = if budget >= t as usize {
        (1..=t).collect()
    } else {
        // Uniform coverage grid over [1, T], endpoints included.
        let g = (budget.div_ceil(2)).max(2);
        let mut set: Vec<u32> = Vec::new();
        for i in 0..g {
            let pos = 1.0 + ((t - 1) as f64) * (i as f64) / ((g - 1) as f64);
            let idx = pos.round() as u32;
            if !set.contains(&idx) {
                set.push(idx);
            }
        }
        // Event frames: frame t+1 after each gripper-width step, largest
        // magnitude first, ties broken toward earlier frames.
        match episode.channel(GRIPPER_CHANNEL) {
            Some(series) => {
                let mut events: Vec<(f64, u32)> = Vec::new();
                for cut in 1..t {
                    let mag = (series[cut as usize] - series[(cut - 1) as usize]).abs();
                    if mag > 0.0 {
                        events.push((mag, cut + 1));
                    }
                }
                events.sort_by(|a, b| {
                    b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1))
                });
                for (_, frame) in events {
                    if set.len() >= budget {
                        break;
                    }
                    if !set.contains(&frame) {
                        set.push(frame);
                    }
                }
            }
            None => {
                log::warn!(
                    "episode {}: no {GRIPPER_CHANNEL:?} channel; keyframes from grid only",
                    episode.episode_id
                );
            }
        }
        set
    };
    picked.sort_unstable();

    if jitter > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = jitter as i64;
        let mut shifted: Vec<u32> = Vec::new();
        for &idx in &picked {
            let new = if idx == 1 || idx == t {
                idx
            } else {
                let delta = rng.random_range(-j..=j);
                (idx as i64 + delta).clamp(2, (t as i64 - 1).max(2)) as u32
            };
            if !shifted.contains(&new) {
                shifted.push(new);
            }
        }
        if !shifted.contains(&1) {
            shifted.push(1);
        }
        if !shifted.contains(&t) {
            shifted.push(t);
        }
        shifted.sort_unstable();
        picked = shifted;
    }

    Ok(KeyframeSet { indices: picked, jitter })
}

/// Reads every channel's value at one frame (1-based).
pub fn summarize_state(episode: &Episode, frame: u32) -> StateSummary {
    debug_assert!(frame >= 1 && frame <= episode.num_frames);
    let values = episode
        .state_channels
        .iter()
        .map(|(name, series)| (name.clone(), series[(frame - 1) as usize]))
        .collect();
    StateSummary { frame, values }
}
