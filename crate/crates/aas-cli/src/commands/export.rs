//! `aas export` — planner-facing outputs: the segment manifest, dataset
//! stats, the STRIPS domain, and per-episode STRIPS problems.

use std::path::PathBuf;

use aas_core::exporter::{
    compute_stats, emit_pddl_domain, emit_pddl_problem, export_manifest, serialize_manifest,
    serialize_stats, strips_check,
};

use crate::config::{load_episodes, load_results, load_schema, CliError};
use crate::ioutil::atomic_write;

#[derive(clap::Args)]
pub struct ExportCmd {
    /// Action schema JSON.
    #[arg(long)]
    schema: PathBuf,
    /// Results JSONL written by `run` or `validate`.
    #[arg(long)]
    results: PathBuf,
    /// Episodes JSONL; enables per-episode problem files.
    #[arg(long)]
    episodes: Option<PathBuf>,
    /// Minimum confidence for a segment to reach the manifest.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Fail on malformed episodes or any unexportable scene.
    #[arg(long)]
    strict: bool,
}

pub fn run(cmd: &ExportCmd) -> Result<(), CliError> {
    let schema = load_schema(&cmd.schema)?;
    let results = load_results(&cmd.results)?;

    let manifest = export_manifest(&results, cmd.threshold);
    let stats = compute_stats(&results, &manifest);
    let domain = emit_pddl_domain(&schema);
    strips_check(&domain).map_err(|e| {
        CliError::Config(format!("internal error: emitted domain fails its grammar check: {e}"))
    })?;

    atomic_write(&cmd.out.join("manifest.jsonl"), &serialize_manifest(&manifest))?;
    atomic_write(&cmd.out.join("stats.json"), &serialize_stats(&stats))?;
    atomic_write(&cmd.out.join("domain.pddl"), &domain)?;

    let mut problems = 0usize;
    let mut scene_failures = 0usize;
    if let Some(path) = &cmd.episodes {
        let episodes = load_episodes(path, cmd.strict)?;
        for episode in &episodes {
            match emit_pddl_problem(&schema, &episode.scene) {
                Ok(problem) => {
                    strips_check(&problem).map_err(|e| {
                        CliError::Config(format!(
                            "internal error: emitted problem for {} fails its grammar check: {e}",
                            episode.episode_id
                        ))
                    })?;
                    let file = cmd.out.join("problems").join(format!("{}.pddl", episode.episode_id));
                    atomic_write(&file, &problem)?;
                    problems += 1;
                }
                Err(e) => {
                    scene_failures += 1;
                    log::warn!("episode {}: scene not exportable: {e}", episode.episode_id);
                }
            }
        }
    }

    println!(
        "exported {} manifest rows, {} suites, {} problem files ({} scenes skipped)",
        manifest.len(),
        stats.per_suite.len(),
        problems,
        scene_failures
    );
    if cmd.strict && scene_failures > 0 {
        return Err(CliError::Strict(format!("{scene_failures} scenes not exportable")));
    }
    Ok(())
}
