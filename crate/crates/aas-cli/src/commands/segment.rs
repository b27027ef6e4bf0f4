//! `aas segment` — record raw boundary proposals into a replay store.
//!
//! For every episode this issues the same two requests the validator
//! would issue on its first attempt — the base run and the jittered
//! agreement run — and stores the raw proposals keyed by episode,
//! backend id, and run tag. A later `aas run --backend replay
//! --replay-source <id> --retries 0` with the same seed, budget, and
//! jitter consumes the store byte-for-byte.

use std::path::PathBuf;
use std::sync::Arc;

use aas_core::ingest::select_keyframes;
use aas_core::segmenter::{build_request, replay_key, serialize_replay_store, ReplayStore};
use aas_core::util::mix_seed;
use aas_core::{Episode, RawProposal};

use crate::config::{
    build_backend, build_plan_source, load_episodes, load_schema, map_episodes, resolve_parallel,
    BackendArgs, CliError, HttpArgs, PlanSourceArgs,
};
use crate::ioutil::{atomic_write, read_file};

#[derive(clap::Args)]
pub struct SegmentCmd {
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
    /// Few-shot exemplar text file, one exemplar per line.
    #[arg(long)]
    fewshot: Option<PathBuf>,
    /// Worker threads (falls back to AAS_PARALLEL, then 1).
    #[arg(long)]
    parallel: Option<usize>,
    /// Replay store JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Fail on malformed episodes or any proposal failure.
    #[arg(long)]
    strict: bool,
}

/// Both first-attempt proposals for one episode.
struct Recorded {
    episode_id: String,
    base: RawProposal,
    jittered: RawProposal,
}

pub fn run(cmd: &SegmentCmd) -> Result<(), CliError> {
    let schema = Arc::new(load_schema(&cmd.schema)?);
    let episodes = load_episodes(&cmd.episodes, cmd.strict)?;
    let source = build_plan_source(&cmd.source, &cmd.http)?;
    let backend = build_backend(&cmd.backend, &cmd.http, &schema, cmd.references.as_deref())?;
    let threads = resolve_parallel(cmd.parallel)?;
    let fewshot: Vec<String> = match &cmd.fewshot {
        Some(path) => read_file(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };

    let propose_pair = |episode: &Episode| -> Result<Recorded, String> {
        let plan = source.plan_for(&schema, episode)?;
        let mut runs = Vec::with_capacity(2);
        for (tag, jitter, seed_tag) in [("j0", 0, "0"), ("j2", cmd.jitter, "2")] {
            let seed = mix_seed(cmd.seed, &[&episode.episode_id, "0", seed_tag]);
            let keyframes = select_keyframes(episode, cmd.budget, jitter, seed)
                .map_err(|e| e.to_string())?;
            let request = build_request(episode, &plan, &keyframes, &fewshot);
            runs.push(backend.propose(&request, episode, tag).map_err(|e| e.to_string())?);
        }
        let jittered = runs.pop().expect("two runs");
        let base = runs.pop().expect("two runs");
        Ok(Recorded { episode_id: episode.episode_id.clone(), base, jittered })
    };

    let recorded: Vec<Result<Recorded, (String, String)>> =
        map_episodes(&episodes, threads, |episode| {
            propose_pair(episode).map_err(|message| (episode.episode_id.clone(), message))
        })?;

    let mut store = ReplayStore::new();
    let mut failures = 0usize;
    for item in recorded {
        match item {
            Ok(rec) => {
                store.insert(replay_key(&rec.episode_id, backend.id(), "j0"), rec.base);
                store.insert(replay_key(&rec.episode_id, backend.id(), "j2"), rec.jittered);
            }
            Err((episode_id, message)) => {
                failures += 1;
                log::warn!("episode {episode_id}: {message}");
            }
        }
    }

    atomic_write(&cmd.out, &serialize_replay_store(&store))?;
    println!(
        "recorded {} proposals for {} episodes ({} failures) as source {}",
        store.len(),
        episodes.len() - failures,
        failures,
        backend.id()
    );
    if cmd.strict && failures > 0 {
        return Err(CliError::Strict(format!("{failures} episodes produced no proposal")));
    }
    Ok(())
}
