//! Evaluation metrics for predicted segmentations against references,
//! plus run-level aggregation.
//!
//! Label-sequence metrics (exact match, edit similarity, count+order)
//! and boundary metrics (positional IoU, boundary MAE) are computed per
//! episode; stability and rank concordance compare a base run against a
//! jitter-perturbed run of the same episode. The aggregate report is
//! what the run command prints and writes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::Span;
use crate::validator::{span_iou, EpisodeResult, JitterRuns};

/// One labeled step of a segmentation, as used by every metric.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub label: String,
    pub start: u32,
    pub end: u32,
}

impl LabeledSpan {
    pub fn new(label: &str, start: u32, end: u32) -> Self {
        LabeledSpan { label: label.to_string(), start, end }
    }

    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

/// Ground-truth segmentation for one episode (one JSONL line).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub episode_id: String,
    pub steps: Vec<LabeledSpan>,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("edit similarity is undefined for two empty sequences")]
    BothEmpty,
    #[error("positional IoU needs a nonempty reference")]
    EmptyReference,
    #[error("rank concordance needs at least 2 raters, got {0}")]
    TooFewRaters(usize),
    #[error("rank concordance needs at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("rater {rater} rated {got} items, expected {expected}")]
    RaggedRatings { rater: usize, expected: usize, got: usize },
    #[error("rank concordance is undefined when every rater ties every item")]
    DegenerateDenominator,
    #[error("reference parse error at line {line}: {message}")]
    BadReference { line: usize, message: String },
}

/// Extracts an accepted episode's prediction in metric form.
pub fn predicted_steps(result: &EpisodeResult) -> Vec<LabeledSpan> {
    result
        .segments
        .iter()
        .map(|s| LabeledSpan { label: s.step.label(), start: s.span.start, end: s.span.end })
        .collect()
}

/// 1.0 iff the label sequences are identical (length and order), else 0.0.
pub fn seq_acc(pred: &[LabeledSpan], reference: &[LabeledSpan]) -> f64 {
    let same = pred.len() == reference.len()
        && pred.iter().zip(reference).all(|(p, r)| p.label == r.label);
    if same {
        1.0
    } else {
        0.0
    }
}

/// Token-level edit distance (insert, delete, substitute; unit costs).
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Normalized token-level edit similarity:
/// `1 - distance / max(len_pred, len_ref)`. Whole labels are the
/// tokens. Undefined when both sequences are empty.
pub fn edit_sim(pred: &[LabeledSpan], reference: &[LabeledSpan]) -> Result<f64, MetricsError> {
    let denom = pred.len().max(reference.len());
    if denom == 0 {
        return Err(MetricsError::BothEmpty);
    }
    let pl: Vec<&str> = pred.iter().map(|s| s.label.as_str()).collect();
    let rl: Vec<&str> = reference.iter().map(|s| s.label.as_str()).collect();
    Ok(1.0 - levenshtein(&pl, &rl) as f64 / denom as f64)
}

/// 1.0 iff the prediction has the reference's step count, identical
/// labels in order, and strictly increasing start frames; else 0.0.
pub fn cnt_ord(pred: &[LabeledSpan], reference: &[LabeledSpan]) -> f64 {
    if seq_acc(pred, reference) != 1.0 {
        return 0.0;
    }
    if pred.windows(2).all(|w| w[0].start < w[1].start) {
        1.0
    } else {
        0.0
    }
}

/// Mean positional IoU: step i of the prediction against step i of the
/// reference, unmatched reference steps scoring zero, divided by the
/// reference step count.
pub fn iou_idx(pred: &[LabeledSpan], reference: &[LabeledSpan]) -> Result<f64, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let matched: f64 = pred
        .iter()
        .zip(reference)
        .map(|(p, r)| span_iou(p.span(), r.span()))
        .sum();
    Ok(matched / reference.len() as f64)
}

/// Mean absolute boundary errors `(start, end, duration)` in frames.
/// Only defined when the step counts match.
pub fn mae(pred: &[LabeledSpan], reference: &[LabeledSpan]) -> Option<(f64, f64, f64)> {
    if pred.len() != reference.len() || pred.is_empty() {
        return None;
    }
    let n = pred.len() as f64;
    let mut ds = 0.0;
    let mut de = 0.0;
    let mut dd = 0.0;
    for (p, r) in pred.iter().zip(reference) {
        ds += (p.start as f64 - r.start as f64).abs();
        de += (p.end as f64 - r.end as f64).abs();
        dd += (p.span().len() as f64 - r.span().len() as f64).abs();
    }
    Some((ds / n, de / n, dd / n))
}

/// Mean positional IoU between two runs of the same episode, divided by
/// the larger step count (unmatched steps score zero). Two empty runs
/// are vacuously stable.
pub fn stability(base: &[Span], jittered: &[Span]) -> f64 {
    let n = base.len().max(jittered.len());
    if n == 0 {
        return 1.0;
    }
    let matched: f64 = base.iter().zip(jittered).map(|(a, b)| span_iou(*a, *b)).sum();
    matched / n as f64
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j share the average of ranks i+1 ..= j+1.
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Kendall's coefficient of concordance with tie correction.
///
/// `ratings[j][i]` is rater j's rating of item i. With m raters, n
/// items, rank sums R_i, S = Σ (R_i - m(n+1)/2)², and per-rater tie
/// term T_j = Σ (t³ - t) over tie groups:
/// `W = 12 S / (m²(n³ - n) - m Σ T_j)`, clamped into [0, 1]. Undefined
/// when every rater ties every item (zero denominator).
pub fn kendalls_w(ratings: &[Vec<f64>]) -> Result<f64, MetricsError> {
    let m = ratings.len();
    if m < 2 {
        return Err(MetricsError::TooFewRaters(m));
    }
    let n = ratings[0].len();
    if n < 2 {
        return Err(MetricsError::TooFewItems(n));
    }
    for (j, row) in ratings.iter().enumerate() {
        if row.len() != n {
            return Err(MetricsError::RaggedRatings { rater: j, expected: n, got: row.len() });
        }
    }

    let mut rank_sums = vec![0.0; n];
    let mut tie_term = 0.0;
    for row in ratings {
        let ranks = average_ranks(row);
        for (i, r) in ranks.iter().enumerate() {
            rank_sums[i] += r;
        }
        // Tie groups by rating value.
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }

    let mf = m as f64;
    let nf = n as f64;
    let mean = mf * (nf + 1.0) / 2.0;
    let s: f64 = rank_sums.iter().map(|&r| (r - mean) * (r - mean)).sum();
    let denominator = mf * mf * (nf * nf * nf - nf) - mf * tie_term;
    if denominator <= 0.0 {
        return Err(MetricsError::DegenerateDenominator);
    }
    Ok((12.0 * s / denominator).clamp(0.0, 1.0))
}

/// Per-episode metric values; fields are absent when their inputs are
/// (no reference, mismatched counts, no jitter runs).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edit_sim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cnt_ord: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou_idx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_dur: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kendalls_w: Option<f64>,
}

/// Means of the per-episode metrics over accepted episodes.
pub type AggregateMetrics = EpisodeMetrics;

/// The full run report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_segments: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_traj_len: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kendalls_w_mean: Option<f64>,
    pub aggregate: AggregateMetrics,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_episode: BTreeMap<String, EpisodeMetrics>,
}

/// Inputs for [`aggregate_report`]; references and jitter runs are both
/// optional and keyed by episode id.
#[derive(Default)]
pub struct ReportInputs<'a> {
    pub results: &'a [EpisodeResult],
    pub references: Option<&'a BTreeMap<String, Vec<LabeledSpan>>>,
    pub runs: Option<&'a BTreeMap<String, JitterRuns>>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        None
    } else {
        Some(sum / count as f64)
    }
}

/// Computes per-episode metrics for every accepted episode and averages
/// them, along with run-level success rate, segment and trajectory
/// means, and mean step-duration concordance across jitter runs.
pub fn aggregate_report(inputs: &ReportInputs<'_>) -> MetricsReport {
    let results = inputs.results;
    let mut per_episode: BTreeMap<String, EpisodeMetrics> = BTreeMap::new();

    for result in results.iter().filter(|r| r.status.is_accepted()) {
        let mut em = EpisodeMetrics::default();
        let pred = predicted_steps(result);
        if let Some(reference) =
            inputs.references.and_then(|m| m.get(&result.episode_id))
        {
            em.seq_acc = Some(seq_acc(&pred, reference));
            em.edit_sim = edit_sim(&pred, reference).ok();
            em.cnt_ord = Some(cnt_ord(&pred, reference));
            em.iou_idx = iou_idx(&pred, reference).ok();
            if let Some((s, e, d)) = mae(&pred, reference) {
                em.mae_start = Some(s);
                em.mae_end = Some(e);
                em.mae_dur = Some(d);
            }
        }
        if let Some(runs) = inputs.runs.and_then(|m| m.get(&result.episode_id)) {
            em.stability = Some(stability(&runs.base, &runs.jittered));
            let durations = |spans: &[Span]| spans.iter().map(|s| s.len() as f64).collect();
            let ratings: Vec<Vec<f64>> =
                vec![durations(&runs.base), durations(&runs.jittered)];
            em.kendalls_w = kendalls_w(&ratings).ok();
        }
        per_episode.insert(result.episode_id.clone(), em);
    }

    let accepted: Vec<&EpisodeResult> =
        results.iter().filter(|r| r.status.is_accepted()).collect();
    let pick = |f: fn(&EpisodeMetrics) -> Option<f64>| mean(per_episode.values().filter_map(f));

    MetricsReport {
        success_rate: if results.is_empty() {
            None
        } else {
            Some(accepted.len() as f64 / results.len() as f64)
        },
        avg_segments: mean(accepted.iter().map(|r| r.segments.len() as f64)),
        avg_traj_len: mean(results.iter().map(|r| r.num_frames as f64)),
        kendalls_w_mean: pick(|m| m.kendalls_w),
        aggregate: AggregateMetrics {
            seq_acc: pick(|m| m.seq_acc),
            edit_sim: pick(|m| m.edit_sim),
            cnt_ord: pick(|m| m.cnt_ord),
            iou_idx: pick(|m| m.iou_idx),
            mae_start: pick(|m| m.mae_start),
            mae_end: pick(|m| m.mae_end),
            mae_dur: pick(|m| m.mae_dur),
            stability: pick(|m| m.stability),
            kendalls_w: pick(|m| m.kendalls_w),
        },
        per_episode,
    }
}

/// Parses a JSONL reference file into an id-keyed map.
pub fn parse_references(text: &str) -> Result<BTreeMap<String, Vec<LabeledSpan>>, MetricsError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let record: ReferenceRecord =
            serde_json::from_str(raw).map_err(|e| MetricsError::BadReference {
                line: idx + 1,
                message: e.to_string(),
            })?;
        out.insert(record.episode_id, record.steps);
    }
    Ok(out)
}

pub fn serialize_references(refs: &BTreeMap<String, Vec<LabeledSpan>>) -> String {
    let mut out = String::new();
    for (episode_id, steps) in refs {
        let record = ReferenceRecord { episode_id: episode_id.clone(), steps: steps.clone() };
        out.push_str(&serde_json::to_string(&record).expect("reference serialization"));
        out.push('\n');
    }
    out
}
