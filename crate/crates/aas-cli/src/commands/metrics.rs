//! `aas metrics` — score predictions against references and measure
//! agreement across repeated runs.
//!
//! Predictions come either from a results file written by `run` or
//! `validate` (`--results`) or from a segmentation JSONL in the same
//! shape as references (`--pred`, which then requires `--refs`).
//! Repeated `--runs` files (two or more) add boundary stability and
//! step-duration concordance across runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use aas_core::metrics::{
    aggregate_report, kendalls_w, stability, LabeledSpan, MetricsReport, ReportInputs,
};
use aas_core::{EpisodeResult, EpisodeStatus, GroundedOption, Span, ValidatedSegment};

use crate::config::{fmt_opt, load_references, load_results, CliError};
use crate::ioutil::{atomic_write, to_pretty};

#[derive(clap::Args)]
pub struct MetricsCmd {
    /// Results JSONL written by `run` or `validate`.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Predicted segmentations JSONL (same shape as references).
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Reference segmentations JSONL.
    #[arg(long)]
    refs: Option<PathBuf>,
    /// Segmentation JSONL for one run; repeat for two or more runs.
    #[arg(long = "runs")]
    runs: Vec<PathBuf>,
    /// Metric report JSON to write.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cmd: &MetricsCmd) -> Result<(), CliError> {
    let results: Vec<EpisodeResult> = match (&cmd.results, &cmd.pred) {
        (Some(path), None) => load_results(path)?,
        (None, Some(path)) => {
            if cmd.refs.is_none() {
                return Err(CliError::Config("--pred needs --refs for trajectory lengths".into()));
            }
            let pred = load_references(path)?;
            let refs = load_references(cmd.refs.as_ref().expect("checked above"))?;
            pred_results(&pred, &refs)?
        }
        _ => {
            return Err(CliError::Config(
                "choose exactly one prediction source: --results or --pred".into(),
            ))
        }
    };
    let references = match &cmd.refs {
        Some(path) => Some(load_references(path)?),
        None => None,
    };
    if cmd.runs.len() == 1 {
        return Err(CliError::Config("--runs needs at least two files to compare".into()));
    }

    let mut report = aggregate_report(&ReportInputs {
        results: &results,
        references: references.as_ref(),
        runs: None,
    });
    if !cmd.runs.is_empty() {
        let mut run_maps = Vec::with_capacity(cmd.runs.len());
        for path in &cmd.runs {
            run_maps.push(load_references(path)?);
        }
        merge_run_agreement(&mut report, &run_maps);
    }

    atomic_write(&cmd.out, &to_pretty(&report))?;
    println!(
        "episodes {} success_rate {} avg_segments {}",
        results.len(),
        fmt_opt(report.success_rate),
        fmt_opt(report.avg_segments)
    );
    let agg = &report.aggregate;
    println!(
        "seq_acc {} edit_sim {} cnt_ord {} iou_idx {}",
        fmt_opt(agg.seq_acc),
        fmt_opt(agg.edit_sim),
        fmt_opt(agg.cnt_ord),
        fmt_opt(agg.iou_idx)
    );
    println!(
        "mae_start {} mae_end {} mae_dur {} stability {} kendalls_w {}",
        fmt_opt(agg.mae_start),
        fmt_opt(agg.mae_end),
        fmt_opt(agg.mae_dur),
        fmt_opt(agg.stability),
        fmt_opt(report.kendalls_w_mean)
    );
    Ok(())
}

/// Lifts a prediction segmentation file into accepted results so the
/// shared report path applies. Trajectory length is taken from the
/// reference partition's final frame; episodes without a reference are
/// dropped with a warning.
fn pred_results(
    pred: &BTreeMap<String, Vec<LabeledSpan>>,
    refs: &BTreeMap<String, Vec<LabeledSpan>>,
) -> Result<Vec<EpisodeResult>, CliError> {
    let mut results = Vec::new();
    for (episode_id, steps) in pred {
        let Some(reference) = refs.get(episode_id) else {
            log::warn!("episode {episode_id}: prediction has no reference; dropped");
            continue;
        };
        let num_frames = reference.last().map(|s| s.end).unwrap_or(0);
        let mut segments = Vec::with_capacity(steps.len());
        for step in steps {
            let grounded = GroundedOption::parse_label(&step.label).ok_or_else(|| {
                CliError::Config(format!("episode {episode_id}: bad step label {:?}", step.label))
            })?;
            segments.push(ValidatedSegment {
                step: grounded,
                span: Span { start: step.start, end: step.end },
                confidence: 1.0,
            });
        }
        results.push(EpisodeResult {
            episode_id: episode_id.clone(),
            task_id: episode_id.clone(),
            num_frames,
            status: EpisodeStatus::Accepted,
            segments,
            attempts: 1,
        });
    }
    Ok(results)
}

/// Fills stability and concordance from repeated run files: stability
/// over boundary spans when exactly two runs are given, step-duration
/// concordance across all runs for episodes present in every run.
fn merge_run_agreement(report: &mut MetricsReport, runs: &[BTreeMap<String, Vec<LabeledSpan>>]) {
    let first = &runs[0];
    for (episode_id, base_steps) in first {
        let all: Option<Vec<&Vec<LabeledSpan>>> =
            runs.iter().map(|m| m.get(episode_id)).collect();
        let Some(per_run) = all else { continue };

        let entry = report.per_episode.entry(episode_id.clone()).or_default();
        if runs.len() == 2 {
            let spans = |steps: &[LabeledSpan]| -> Vec<Span> {
                steps.iter().map(LabeledSpan::span).collect()
            };
            entry.stability = Some(stability(&spans(base_steps), &spans(per_run[1])));
        }
        let counts_match = per_run.iter().all(|r| r.len() == base_steps.len());
        if counts_match {
            let ratings: Vec<Vec<f64>> = per_run
                .iter()
                .map(|r| r.iter().map(|s| s.span().len() as f64).collect())
                .collect();
            entry.kendalls_w = kendalls_w(&ratings).ok();
        }
    }

    let mean = |values: Vec<f64>| -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    report.aggregate.stability =
        mean(report.per_episode.values().filter_map(|m| m.stability).collect());
    report.aggregate.kendalls_w =
        mean(report.per_episode.values().filter_map(|m| m.kendalls_w).collect());
    report.kendalls_w_mean = report.aggregate.kendalls_w;
}
