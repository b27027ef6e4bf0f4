//! Shared argument groups, input loaders, and builders that turn CLI
//! flags into pipeline components.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use aas_core::ingest::parse_episodes;
use aas_core::metrics::{parse_references, LabeledSpan};
use aas_core::planner::{discover_plan, parse_registry, remote_plan, PlanRegistry};
use aas_core::remote::{HttpTransport, RemoteClient};
use aas_core::schema::{parse_schema, validate_plan};
use aas_core::segmenter::{parse_replay_store, HeuristicBackend, RemoteBackend, ReplayBackend, SegmentBackend};
use aas_core::synth::{NoiseConfig, OracleBackend};
use aas_core::validator::ValidationConfig;
use aas_core::{ActionSchema, Episode, EpisodeResult, Plan};
use rayon::prelude::*;

use crate::ioutil::{parse_jsonl, read_file};

/// Failure of a subcommand. `Config` means bad input or I/O and exits 2;
/// `Strict` means the data failed a `--strict` gate and exits 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Strict(String),
}

/// Boundary proposal strategies selectable on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendKind {
    /// Cut at the largest gripper-width steps, uniform fallback.
    Heuristic,
    /// Look proposals up in a recorded store; never guesses.
    Replay,
    /// POST each request to a segmentation service.
    Remote,
    /// Replay reference segmentations, optionally noised.
    Oracle,
}

/// Flags for talking to a remote service over HTTP.
#[derive(Clone, Debug, clap::Args)]
pub struct HttpArgs {
    /// Base URL of the remote service (falls back to AAS_ENDPOINT).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Retry budget for transient transport failures.
    #[arg(long, default_value_t = 2)]
    pub http_retries: u32,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub http_timeout: u64,
}

impl HttpArgs {
    /// Builds a client, resolving the endpoint from the flag or the
    /// AAS_ENDPOINT environment variable.
    pub fn client(&self) -> Result<RemoteClient, CliError> {
        let endpoint = match &self.endpoint {
            Some(e) => e.clone(),
            None => match std::env::var("AAS_ENDPOINT") {
                Ok(e) if !e.trim().is_empty() => e,
                _ => {
                    return Err(CliError::Config(
                        "remote access needs --endpoint or AAS_ENDPOINT".to_string(),
                    ))
                }
            },
        };
        let transport = HttpTransport::new(self.http_timeout);
        Ok(RemoteClient::new(Box::new(transport), &endpoint, self.http_retries))
    }
}

/// Flags selecting and configuring the proposal backend.
#[derive(Clone, Debug, clap::Args)]
pub struct BackendArgs {
    /// Boundary proposal backend.
    #[arg(long, value_enum, default_value_t = BackendKind::Heuristic)]
    pub backend: BackendKind,
    /// Recorded proposal store JSON (backend = replay).
    #[arg(long)]
    pub replay_store: Option<PathBuf>,
    /// Source id the store was recorded from (backend = replay).
    #[arg(long, default_value = "oracle")]
    pub replay_source: String,
    /// Overwrite remote step labels with the plan's labels, by position.
    #[arg(long)]
    pub anchored: bool,
    /// Boundary shift sigma in frames (backend = oracle).
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Per-step probability of a wrong label (backend = oracle).
    #[arg(long, default_value_t = 0.0)]
    pub label_error_rate: f64,
    /// Per-step probability of dropping a step (backend = oracle).
    #[arg(long, default_value_t = 0.0)]
    pub drop_rate: f64,
    /// Seed for oracle noise draws.
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
}

/// Builds the proposal backend; `references` supplies the oracle's
/// ground truth and comes from the calling command's flag.
pub fn build_backend(
    args: &BackendArgs,
    http: &HttpArgs,
    schema: &Arc<ActionSchema>,
    references: Option<&Path>,
) -> Result<Box<dyn SegmentBackend>, CliError> {
    match args.backend {
        BackendKind::Heuristic => Ok(Box::new(HeuristicBackend::new(schema.clone()))),
        BackendKind::Replay => {
            let path = args
                .replay_store
                .as_ref()
                .ok_or_else(|| CliError::Config("--backend replay needs --replay-store".into()))?;
            let store = parse_replay_store(&read_file(path)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok(Box::new(ReplayBackend::new(store, &args.replay_source)))
        }
        BackendKind::Remote => {
            let client = http.client()?;
            Ok(Box::new(RemoteBackend::new(client, args.anchored)))
        }
        BackendKind::Oracle => {
            let path = references
                .ok_or_else(|| CliError::Config("--backend oracle needs --references".into()))?;
            let refs = load_references(path)?;
            let noise = NoiseConfig {
                sigma: args.sigma,
                label_error_rate: args.label_error_rate,
                drop_rate: args.drop_rate,
                seed: args.noise_seed,
            };
            Ok(Box::new(OracleBackend::new(refs, noise)))
        }
    }
}

/// Flags selecting where plans come from.
#[derive(Clone, Debug, clap::Args)]
pub struct PlanSourceArgs {
    /// Plan template registry JSON.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Ready-made plans JSONL, keyed by task id.
    #[arg(long)]
    pub plans: Option<PathBuf>,
    /// Ask the remote planning service for each episode's plan.
    #[arg(long)]
    pub remote_planner: bool,
}

/// A resolved plan provider: registry grounding, a plans file, or a
/// remote planning service.
pub enum PlanSource {
    Registry(PlanRegistry),
    File(BTreeMap<String, Plan>),
    Remote(RemoteClient),
}

impl PlanSource {
    /// Produces the plan for one episode; whatever the source, the
    /// result has passed schema and scene validation.
    pub fn plan_for(&self, schema: &ActionSchema, episode: &Episode) -> Result<Plan, String> {
        match self {
            PlanSource::Registry(registry) => {
                discover_plan(schema, registry, episode).map_err(|e| e.to_string())
            }
            PlanSource::File(plans) => {
                let plan = plans
                    .get(&episode.task_id)
                    .cloned()
                    .ok_or_else(|| format!("no plan on file for task {}", episode.task_id))?;
                let errors = validate_plan(schema, &plan, &episode.scene);
                if errors.is_empty() {
                    Ok(plan)
                } else {
                    let msgs: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
                    Err(format!("plan for task {} is invalid: {}", plan.task_id, msgs.join("; ")))
                }
            }
            PlanSource::Remote(client) => {
                remote_plan(client, schema, episode).map_err(|e| e.to_string())
            }
        }
    }
}

/// Resolves the plan source flags; exactly one source must be chosen.
pub fn build_plan_source(args: &PlanSourceArgs, http: &HttpArgs) -> Result<PlanSource, CliError> {
    let chosen =
        args.registry.is_some() as u8 + args.plans.is_some() as u8 + args.remote_planner as u8;
    if chosen != 1 {
        return Err(CliError::Config(
            "choose exactly one plan source: --registry, --plans, or --remote-planner".into(),
        ));
    }
    if let Some(path) = &args.registry {
        let registry = parse_registry(&read_file(path)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return Ok(PlanSource::Registry(registry));
    }
    if let Some(path) = &args.plans {
        return Ok(PlanSource::File(load_plans(path)?));
    }
    Ok(PlanSource::Remote(http.client()?))
}

/// Validation loop knobs plus the bounds and calibration config files.
#[derive(Clone, Debug, clap::Args)]
pub struct PipelineArgs {
    /// Keyframe budget per proposal request.
    #[arg(long, default_value_t = 8)]
    pub budget: usize,
    /// Keyframe jitter magnitude for the agreement re-run.
    #[arg(long, default_value_t = 2)]
    pub jitter: u32,
    /// Extra proposal attempts after the first.
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    /// Base seed for keyframe selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Duration bounds overrides JSON.
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    /// Confidence weight config JSON.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Few-shot exemplar text file, one exemplar per line.
    #[arg(long)]
    pub fewshot: Option<PathBuf>,
}

/// Assembles the per-episode validation config from flags and files.
pub fn build_validation_config(args: &PipelineArgs) -> Result<ValidationConfig, CliError> {
    let mut cfg = ValidationConfig {
        keyframe_budget: args.budget,
        jitter: args.jitter,
        retries: args.retries,
        seed: args.seed,
        ..ValidationConfig::default()
    };
    if let Some(path) = &args.fewshot {
        cfg.fewshot = read_file(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect();
    }
    if let Some(path) = &args.bounds {
        cfg.bounds = serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Config(format!("{}: bad bounds config: {e}", path.display())))?;
    }
    if let Some(path) = &args.calibration {
        cfg.calibration = serde_json::from_str(&read_file(path)?).map_err(|e| {
            CliError::Config(format!("{}: bad calibration config: {e}", path.display()))
        })?;
    }
    Ok(cfg)
}

/// Loads and parses the action schema file.
pub fn load_schema(path: &Path) -> Result<ActionSchema, CliError> {
    parse_schema(&read_file(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Loads episodes; in lenient mode malformed records are logged and
/// skipped, in strict mode they abort with a config error.
pub fn load_episodes(path: &Path, strict: bool) -> Result<Vec<Episode>, CliError> {
    let report = parse_episodes(&read_file(path)?, strict)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for issue in &report.issues {
        log::warn!("{}: line {}: {}", path.display(), issue.line, issue.message);
    }
    Ok(report.episodes)
}

/// Loads a plans JSONL file into a task-id map; a task appearing twice
/// keeps the first plan and logs the conflict.
pub fn load_plans(path: &Path) -> Result<BTreeMap<String, Plan>, CliError> {
    let plans: Vec<Plan> = parse_jsonl(&read_file(path)?, "plan", path)?;
    let mut by_task = BTreeMap::new();
    for plan in plans {
        if let Some(prev) = by_task.get(&plan.task_id) {
            if *prev != plan {
                log::warn!("{}: task {} has conflicting plans; keeping the first", path.display(), plan.task_id);
            }
            continue;
        }
        by_task.insert(plan.task_id.clone(), plan);
    }
    Ok(by_task)
}

/// Loads a reference segmentation JSONL file.
pub fn load_references(path: &Path) -> Result<BTreeMap<String, Vec<LabeledSpan>>, CliError> {
    parse_references(&read_file(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Loads per-episode results JSONL written by `run` or `validate`.
pub fn load_results(path: &Path) -> Result<Vec<EpisodeResult>, CliError> {
    parse_jsonl(&read_file(path)?, "result", path)
}

/// Worker thread count: the flag, else AAS_PARALLEL, else 1.
pub fn resolve_parallel(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("AAS_PARALLEL") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("AAS_PARALLEL is not a number: {s}")))?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(CliError::Config("thread count must be at least 1".into()));
    }
    Ok(n)
}

/// Maps episodes on a dedicated thread pool. Output order follows input
/// order, so results are deterministic at any thread count.
pub fn map_episodes<T, F>(episodes: &[Episode], threads: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(&Episode) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(|| episodes.par_iter().map(&f).collect()))
}

/// Formats an optional metric for terminal summaries.
pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "-".to_string(),
    }
}
