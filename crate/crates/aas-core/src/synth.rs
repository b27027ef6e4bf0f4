//! Synthetic episode generation with exact ground truth, and a
//! noise-controllable oracle backend built on that ground truth.
//!
//! Generated episodes carry a gripper-width channel that steps between
//! two levels at every true boundary, so signal-driven components see
//! realistic structure. The oracle backend reproduces the reference
//! segmentation exactly at zero noise and degrades controllably:
//! boundary shifts grow with `sigma`, labels flip at a configured rate,
//! and steps drop at another, which exercises every rejection path.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Episode, SceneDescription, GRIPPER_CHANNEL};
use crate::metrics::LabeledSpan;
use crate::planner::{PlanRegistry, PlanTemplate, TemplateStep};
use crate::schema::{ActionSchema, GroundedOption, OptionType, Plan};
use crate::segmenter::{BackendError, RawProposal, RawStep, SegmentBackend, SegmentationRequest};
use crate::util::mix_seed;

/// Gripper level inside even-indexed segments (open) and the per-sample
/// channel noise (1% of the step height).
const GRIPPER_OPEN: f64 = 0.08;
const CHANNEL_NOISE: f64 = 0.0008;

const OPTION_POOL: [&str; 12] = [
    "approach",
    "grasp",
    "lift",
    "transfer",
    "place",
    "release",
    "open_gripper",
    "close_gripper",
    "push",
    "pull",
    "rotate",
    "align",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_episodes: usize,
    /// Inclusive range of steps per episode.
    pub k_range: (usize, usize),
    /// Inclusive range of frames per episode.
    pub t_range: (u32, u32),
    pub seed: u64,
    /// Suite name: task ids are `{prefix}/task_NNNN`, episode ids
    /// `{prefix}_ep_NNNN`.
    pub task_prefix: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_episodes: 100,
            k_range: (2, 4),
            t_range: (150, 350),
            seed: 42,
            task_prefix: "synth".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("empty {what} range: ({lo}, {hi})")]
    EmptyRange { what: &'static str, lo: u64, hi: u64 },
    #[error("step count range must start at 1 or more")]
    ZeroSteps,
    #[error("shortest episode ({t_min} frames) cannot hold {k_max} steps of 2+ frames")]
    InfeasibleRanges { t_min: u32, k_max: usize },
    #[error("task prefix {0:?} must be a bare identifier")]
    BadPrefix(String),
}

/// A generated dataset: episodes, their schema, plans (one per task),
/// the registry that grounds to those plans, and exact references.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthBundle {
    pub schema: ActionSchema,
    pub episodes: Vec<Episode>,
    pub plans: Vec<Plan>,
    pub registry: PlanRegistry,
    pub references: BTreeMap<String, Vec<LabeledSpan>>,
}

fn option_pool(k_max: usize) -> Vec<String> {
    let mut pool: Vec<String> = OPTION_POOL.iter().map(|s| s.to_string()).collect();
    for i in pool.len()..k_max {
        pool.push(format!("skill_{i}"));
    }
    pool
}

/// Generates `num_episodes` episodes with exact ground truth.
/// Deterministic in the config: the same config always produces the
/// same bundle, with per-episode randomness derived independently so
/// episode i does not depend on how many came before it.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<SynthBundle, SynthError> {
    let (k_min, k_max) = cfg.k_range;
    let (t_min, t_max) = cfg.t_range;
    if k_min > k_max {
        return Err(SynthError::EmptyRange { what: "step", lo: k_min as u64, hi: k_max as u64 });
    }
    if k_min < 1 {
        return Err(SynthError::ZeroSteps);
    }
    if t_min > t_max {
        return Err(SynthError::EmptyRange { what: "frame", lo: t_min as u64, hi: t_max as u64 });
    }
    if (t_min as usize) < 2 * k_max {
        return Err(SynthError::InfeasibleRanges { t_min, k_max });
    }
    let prefix_ok = !cfg.task_prefix.is_empty()
        && cfg
            .task_prefix
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && cfg.task_prefix.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_') == Some(true);
    if !prefix_ok {
        return Err(SynthError::BadPrefix(cfg.task_prefix.clone()));
    }

    let pool = option_pool(k_max);
    let schema = ActionSchema {
        name: format!("{}_domain", cfg.task_prefix),
        object_types: vec![],
        predicates: vec![],
        constants: vec![],
        options: pool
            .iter()
            .map(|name| OptionType {
                name: name.clone(),
                params: vec![],
                preconditions: vec![],
                add_effects: vec![],
                del_effects: vec![],
                termination: "synthetic option".to_string(),
                duration_bounds: Some((2, t_max)),
            })
            .collect(),
    };

    let mut bundle = SynthBundle {
        schema,
        episodes: Vec::with_capacity(cfg.num_episodes),
        plans: Vec::with_capacity(cfg.num_episodes),
        registry: PlanRegistry::default(),
        references: BTreeMap::new(),
    };

    for i in 0..cfg.num_episodes {
        let episode_id = format!("{}_ep_{i:04}", cfg.task_prefix);
        let task_id = format!("{}/task_{i:04}", cfg.task_prefix);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &["episode", &episode_id]));

        let k = rng.random_range(k_min..=k_max);
        let t = rng.random_range(t_min..=t_max);

        // Durations: a composition of T into K parts, each at least 2.
        let extra = t as usize - 2 * k;
        let mut marks: Vec<usize> = (0..k - 1).map(|_| rng.random_range(0..=extra)).collect();
        marks.sort_unstable();
        marks.insert(0, 0);
        marks.push(extra);
        let durations: Vec<u32> =
            marks.windows(2).map(|w| (2 + w[1] - w[0]) as u32).collect();

        // Distinct options for the K steps.
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.shuffle(&mut rng);
        let labels: Vec<String> = order[..k].iter().map(|&idx| pool[idx].clone()).collect();

        // Reference spans from the durations.
        let mut reference = Vec::with_capacity(k);
        let mut cursor = 0u32;
        for (label, &d) in labels.iter().zip(&durations) {
            reference.push(LabeledSpan::new(label, cursor + 1, cursor + d));
            cursor += d;
        }
        debug_assert_eq!(cursor, t);

        // Gripper channel: alternate levels per segment, tiny noise.
        let mut channel = Vec::with_capacity(t as usize);
        for (seg_idx, step) in reference.iter().enumerate() {
            let level = if seg_idx % 2 == 0 { GRIPPER_OPEN } else { 0.0 };
            for _ in step.start..=step.end {
                let noise: f64 = rng.sample(StandardNormal);
                channel.push(level + CHANNEL_NOISE * noise);
            }
        }

        let mut state_channels = BTreeMap::new();
        state_channels.insert(GRIPPER_CHANNEL.to_string(), channel);

        bundle.episodes.push(Episode {
            episode_id: episode_id.clone(),
            task_id: task_id.clone(),
            instruction: format!("perform {}", labels.join(", then ")),
            num_frames: t,
            state_channels,
            frame_refs: None,
            scene: SceneDescription::default(),
        });
        bundle.plans.push(Plan {
            task_id: task_id.clone(),
            steps: labels.iter().map(|l| GroundedOption::new(l, &[])).collect(),
        });
        bundle.registry.tasks.insert(
            task_id,
            PlanTemplate {
                steps: labels
                    .iter()
                    .map(|l| TemplateStep { option: l.clone(), args: None })
                    .collect(),
            },
        );
        bundle.references.insert(episode_id, reference);
    }

    Ok(bundle)
}

/// Noise knobs for the oracle backend. All zeros reproduces the
/// reference exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation, in frames, of boundary shifts.
    pub sigma: f64,
    /// Per-step probability of swapping the label for another one.
    pub label_error_rate: f64,
    /// Per-step probability of dropping the step entirely.
    pub drop_rate: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { sigma: 0.0, label_error_rate: 0.0, drop_rate: 0.0, seed: 0 }
    }
}

/// Perturbs a reference segmentation into a raw proposal.
///
/// Draw order is fixed — boundary shifts first, then label-error draws,
/// then drop draws — so two configs differing only in `sigma` share the
/// same standard-normal shift variables: boundary displacement is
/// pointwise monotone in `sigma`, which makes noise sweeps comparable.
pub fn noisy_oracle_tagged(
    reference: &[LabeledSpan],
    cfg: &NoiseConfig,
    episode_id: &str,
    run_tag: &str,
) -> RawProposal {
    let k = reference.len();
    if k == 0 {
        return RawProposal::default();
    }
    let t = reference[k - 1].end as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &[episode_id, run_tag]));

    // Boundary shifts: one per internal cut.
    let shifts: Vec<i64> = if cfg.sigma > 0.0 {
        (0..k - 1)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                (z * cfg.sigma).round() as i64
            })
            .collect()
    } else {
        vec![0; k.saturating_sub(1)]
    };

    // Shifted cuts, spans rebuilt contiguously (inversions allowed —
    // this is a raw proposal).
    let mut steps = Vec::with_capacity(k);
    let mut prev = 0i64;
    for (i, step) in reference.iter().enumerate() {
        let end = if i == k - 1 { t } else { step.end as i64 + shifts[i] };
        let cut_shift = if k == 1 {
            None
        } else if i == k - 1 {
            Some(shifts[i - 1])
        } else {
            Some(shifts[i])
        };
        let score = match cut_shift {
            None => 1.0,
            Some(s) => (-(s.abs() as f64) / cfg.sigma.max(1.0)).exp(),
        };
        steps.push(RawStep {
            label: step.label.clone(),
            start: prev + 1,
            end,
            score: Some(score),
        });
        prev = end;
    }

    // Label errors.
    let distinct: Vec<&str> = {
        let mut seen: Vec<&str> = Vec::new();
        for step in reference {
            if !seen.contains(&step.label.as_str()) {
                seen.push(&step.label);
            }
        }
        seen
    };
    for step in steps.iter_mut() {
        let gate: f64 = rng.random();
        if gate < cfg.label_error_rate {
            let alternatives: Vec<&str> =
                distinct.iter().copied().filter(|l| *l != step.label).collect();
            if !alternatives.is_empty() {
                let idx = rng.random_range(0..alternatives.len());
                step.label = alternatives[idx].to_string();
            }
        }
    }

    // Drops.
    let mut kept = Vec::with_capacity(steps.len());
    for step in steps {
        let gate: f64 = rng.random();
        if gate >= cfg.drop_rate {
            kept.push(step);
        }
    }

    RawProposal { steps: kept }
}

/// [`noisy_oracle_tagged`] with an empty run tag, for standalone use.
pub fn noisy_oracle(reference: &[LabeledSpan], cfg: &NoiseConfig) -> RawProposal {
    noisy_oracle_tagged(reference, cfg, "", "")
}

/// Backend that answers from ground-truth references with configurable
/// noise. The run tag participates in the noise seed, so base and
/// jittered runs see independent perturbations.
pub struct OracleBackend {
    references: BTreeMap<String, Vec<LabeledSpan>>,
    noise: NoiseConfig,
}

impl OracleBackend {
    pub fn new(references: BTreeMap<String, Vec<LabeledSpan>>, noise: NoiseConfig) -> Self {
        OracleBackend { references, noise }
    }
}

impl SegmentBackend for OracleBackend {
    fn propose(
        &self,
        request: &SegmentationRequest,
        _episode: &Episode,
        run_tag: &str,
    ) -> Result<RawProposal, BackendError> {
        let reference = self.references.get(&request.episode_id).ok_or_else(|| {
            BackendError::Infeasible {
                message: format!("no reference for episode {:?}", request.episode_id),
            }
        })?;
        Ok(noisy_oracle_tagged(reference, &self.noise, &request.episode_id, run_tag))
    }

    fn id(&self) -> &str {
        "oracle"
    }
}
