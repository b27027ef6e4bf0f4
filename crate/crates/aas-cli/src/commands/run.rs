//! `aas run` — the full pipeline: plan each episode, propose and
//! validate boundaries, calibrate confidences, then write results, the
//! segment manifest, dataset stats, and the metric report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use aas_core::exporter::{compute_stats, export_manifest, serialize_manifest, serialize_stats, DatasetStats};
use aas_core::metrics::{aggregate_report, MetricsReport, ReportInputs};
use aas_core::validator::{validate_episode, JitterRuns, ValidationOutput};
use aas_core::EpisodeResult;

use crate::config::{
    build_backend, build_plan_source, build_validation_config, fmt_opt, load_episodes,
    load_references, load_schema, map_episodes, resolve_parallel, BackendArgs, CliError, HttpArgs,
    PipelineArgs, PlanSourceArgs,
};
use crate::ioutil::{atomic_write, to_jsonl, to_pretty};

#[derive(clap::Args)]
pub struct RunCmd {
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
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Reference segmentations JSONL; scores accepted episodes and
    /// feeds the oracle backend.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Minimum confidence for a segment to reach the manifest.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Worker threads (falls back to AAS_PARALLEL, then 1).
    #[arg(long)]
    parallel: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Fail on malformed episodes or any rejected episode.
    #[arg(long)]
    strict: bool,
}

pub fn run(cmd: &RunCmd) -> Result<(), CliError> {
    let schema = Arc::new(load_schema(&cmd.schema)?);
    let episodes = load_episodes(&cmd.episodes, cmd.strict)?;
    let source = build_plan_source(&cmd.source, &cmd.http)?;
    let backend = build_backend(&cmd.backend, &cmd.http, &schema, cmd.references.as_deref())?;
    let vcfg = build_validation_config(&cmd.pipeline)?;
    let threads = resolve_parallel(cmd.parallel)?;
    let references = match &cmd.references {
        Some(path) => Some(load_references(path)?),
        None => None,
    };

    let mut outputs: Vec<ValidationOutput> = map_episodes(&episodes, threads, |episode| {
        match source.plan_for(&schema, episode) {
            Ok(plan) => validate_episode(&schema, episode, &plan, backend.as_ref(), &vcfg),
            Err(message) => ValidationOutput {
                result: EpisodeResult::planning_failure(episode, message),
                runs: None,
            },
        }
    })?;
    outputs.sort_by(|a, b| a.result.episode_id.cmp(&b.result.episode_id));

    let results: Vec<EpisodeResult> = outputs.iter().map(|o| o.result.clone()).collect();
    let runs: BTreeMap<String, JitterRuns> = outputs
        .iter()
        .filter_map(|o| o.runs.clone().map(|r| (o.result.episode_id.clone(), r)))
        .collect();

    let report = aggregate_report(&ReportInputs {
        results: &results,
        references: references.as_ref(),
        runs: Some(&runs),
    });
    let manifest = export_manifest(&results, cmd.threshold);
    let stats = compute_stats(&results, &manifest);

    atomic_write(&cmd.out.join("results.jsonl"), &to_jsonl(&results))?;
    atomic_write(&cmd.out.join("manifest.jsonl"), &serialize_manifest(&manifest))?;
    atomic_write(&cmd.out.join("stats.json"), &serialize_stats(&stats))?;
    atomic_write(&cmd.out.join("metrics.json"), &to_pretty(&report))?;

    print_summary(&report, &stats);

    if cmd.strict {
        let rejected = results.iter().filter(|r| !r.status.is_accepted()).count();
        if rejected > 0 {
            return Err(CliError::Strict(format!("{rejected} episodes rejected")));
        }
    }
    Ok(())
}

/// Terminal summary of a finished run.
pub fn print_summary(report: &MetricsReport, stats: &DatasetStats) {
    println!(
        "episodes {} accepted {} segments {}",
        stats.episodes_in, stats.episodes_accepted, stats.segments_out
    );
    println!(
        "success_rate {} avg_segments {} avg_traj_len {}",
        fmt_opt(report.success_rate),
        fmt_opt(report.avg_segments),
        fmt_opt(report.avg_traj_len)
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
        "mae_start {} mae_end {} mae_dur {}",
        fmt_opt(agg.mae_start),
        fmt_opt(agg.mae_end),
        fmt_opt(agg.mae_dur)
    );
    println!(
        "stability {} kendalls_w {}",
        fmt_opt(agg.stability),
        fmt_opt(report.kendalls_w_mean)
    );
}
