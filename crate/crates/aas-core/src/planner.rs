//! Stage one: fixing the expected step sequence for an episode before
//! any boundary is proposed.
//!
//! Plans come from either a task registry (templates grounded against
//! the episode's scene) or a remote planning service. Both paths end in
//! the same checks, so every plan handed to the segmenter names real
//! schema options applied to real scene objects — downstream stages
//! treat the plan as ground truth for step count and labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Episode;
use crate::remote::{RemoteClient, RemoteError};
use crate::schema::{validate_plan, ActionSchema, GroundedOption, Plan, PlanError};

/// One template step: an option name plus argument patterns.
///
/// Each argument is either a literal object name or `$type`, which
/// grounds to the unique scene object (or schema constant) of that
/// type. When `args` is omitted entirely, every declared parameter is
/// grounded by its own type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateStep {
    pub option: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTemplate {
    pub steps: Vec<TemplateStep>,
}

/// Task-id-keyed plan templates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRegistry {
    pub tasks: BTreeMap<String, PlanTemplate>,
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("registry syntax error at line {line}, column {column}: {message}")]
    RegistrySyntax { line: usize, column: usize, message: String },
    #[error("no plan template for task {task_id:?}")]
    UnknownTask { task_id: String },
    #[error("task {task_id:?}: template has no steps")]
    EmptyTemplate { task_id: String },
    #[error("task {task_id:?} step {step}: unknown option {option:?}")]
    UnknownOption { task_id: String, step: usize, option: String },
    #[error("task {task_id:?} step {step}: option {option:?} takes {expected} args, template gives {got}")]
    TemplateArityMismatch { task_id: String, step: usize, option: String, expected: usize, got: usize },
    #[error("task {task_id:?} step {step}: no object of type {wanted_type:?} in scene")]
    GroundingFailure { task_id: String, step: usize, wanted_type: String },
    #[error("task {task_id:?} step {step}: type {wanted_type:?} is ambiguous (candidates: {})", candidates.join(", "))]
    AmbiguousGrounding { task_id: String, step: usize, wanted_type: String, candidates: Vec<String> },
    #[error("task {task_id:?} step {step}: {object:?} is not a scene object or constant")]
    UnknownObject { task_id: String, step: usize, object: String },
    #[error("task {task_id:?} step {step}: {object:?} has type {actual:?}, expected {expected:?}")]
    TypeMismatch { task_id: String, step: usize, object: String, expected: String, actual: String },
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("remote plan for task {task_id:?} is malformed: {message}")]
    MalformedRemotePlan { task_id: String, message: String },
    #[error("remote plan for task {task_id:?} failed validation: {}", errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidRemotePlan { task_id: String, errors: Vec<PlanError> },
}

/// Parses a registry document (`{"tasks": {task_id: {"steps": [...]}}}`).
pub fn parse_registry(text: &str) -> Result<PlanRegistry, PlannerError> {
    serde_json::from_str(text).map_err(|e| PlannerError::RegistrySyntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn serialize_registry(registry: &PlanRegistry) -> String {
    serde_json::to_string_pretty(registry).expect("registry serialization cannot fail")
}

/// All (name, type) pairs an argument may ground to: scene objects plus
/// schema constants, scene names shadowing constants on collision.
fn grounding_pool<'a>(
    schema: &'a ActionSchema,
    episode: &'a Episode,
) -> Vec<(&'a str, &'a str)> {
    let mut pool: Vec<(&str, &str)> = episode
        .scene
        .objects
        .iter()
        .map(|o| (o.name.as_str(), o.object_type.as_str()))
        .collect();
    for c in &schema.constants {
        if !pool.iter().any(|(n, _)| *n == c.name) {
            pool.push((c.name.as_str(), c.object_type.as_str()));
        }
    }
    pool
}

fn ground_by_type(
    pool: &[(&str, &str)],
    wanted: &str,
    task_id: &str,
    step: usize,
) -> Result<String, PlannerError> {
    let candidates: Vec<String> =
        pool.iter().filter(|(_, t)| *t == wanted).map(|(n, _)| n.to_string()).collect();
    match candidates.len() {
        0 => Err(PlannerError::GroundingFailure {
            task_id: task_id.to_string(),
            step,
            wanted_type: wanted.to_string(),
        }),
        1 => Ok(candidates.into_iter().next().unwrap()),
        _ => Err(PlannerError::AmbiguousGrounding {
            task_id: task_id.to_string(),
            step,
            wanted_type: wanted.to_string(),
            candidates,
        }),
    }
}

/// Grounds the registry template for `episode.task_id` into a concrete
/// plan. The returned plan always passes [`validate_plan`].
pub fn discover_plan(
    schema: &ActionSchema,
    registry: &PlanRegistry,
    episode: &Episode,
) -> Result<Plan, PlannerError> {
    let task_id = episode.task_id.clone();
    let template = registry
        .tasks
        .get(&task_id)
        .ok_or_else(|| PlannerError::UnknownTask { task_id: task_id.clone() })?;
    if template.steps.is_empty() {
        return Err(PlannerError::EmptyTemplate { task_id });
    }
    let pool = grounding_pool(schema, episode);
    let mut steps = Vec::with_capacity(template.steps.len());
    for (step, ts) in template.steps.iter().enumerate() {
        let opt = schema.option(&ts.option).ok_or_else(|| PlannerError::UnknownOption {
            task_id: task_id.clone(),
            step,
            option: ts.option.clone(),
        })?;
        let args = match &ts.args {
            None => {
                // Ground every parameter by its declared type.
                let mut args = Vec::with_capacity(opt.params.len());
                for p in &opt.params {
                    args.push(ground_by_type(&pool, &p.object_type, &task_id, step)?);
                }
                args
            }
            Some(patterns) => {
                if patterns.len() != opt.params.len() {
                    return Err(PlannerError::TemplateArityMismatch {
                        task_id,
                        step,
                        option: ts.option.clone(),
                        expected: opt.params.len(),
                        got: patterns.len(),
                    });
                }
                let mut args = Vec::with_capacity(patterns.len());
                for (param, pat) in opt.params.iter().zip(patterns) {
                    if let Some(ty) = pat.strip_prefix('$') {
                        args.push(ground_by_type(&pool, ty, &task_id, step)?);
                    } else {
                        let actual = pool.iter().find(|(n, _)| n == pat).map(|(_, t)| *t);
                        match actual {
                            None => {
                                return Err(PlannerError::UnknownObject {
                                    task_id,
                                    step,
                                    object: pat.clone(),
                                })
                            }
                            Some(t) if t != param.object_type => {
                                return Err(PlannerError::TypeMismatch {
                                    task_id,
                                    step,
                                    object: pat.clone(),
                                    expected: param.object_type.clone(),
                                    actual: t.to_string(),
                                })
                            }
                            Some(_) => args.push(pat.clone()),
                        }
                    }
                }
                args
            }
        };
        steps.push(GroundedOption { option: ts.option.clone(), args });
    }
    let plan = Plan { task_id, steps };
    debug_assert!(validate_plan(schema, &plan, &episode.scene).is_empty());
    Ok(plan)
}

#[derive(Deserialize)]
struct RemotePlanResponse {
    steps: Vec<GroundedOption>,
}

/// Asks a remote planning service for the episode's plan, then checks
/// it against the schema and scene exactly like a registry plan.
pub fn remote_plan(
    client: &RemoteClient,
    schema: &ActionSchema,
    episode: &Episode,
) -> Result<Plan, PlannerError> {
    let body = serde_json::json!({
        "instruction": episode.instruction,
        "scene": episode.scene,
        "schema_name": schema.name,
    });
    let value = client.call("plan", &body)?;
    let resp: RemotePlanResponse =
        serde_json::from_value(value).map_err(|e| PlannerError::MalformedRemotePlan {
            task_id: episode.task_id.clone(),
            message: e.to_string(),
        })?;
    let plan = Plan { task_id: episode.task_id.clone(), steps: resp.steps };
    let errors = validate_plan(schema, &plan, &episode.scene);
    if errors.is_empty() {
        Ok(plan)
    } else {
        Err(PlannerError::InvalidRemotePlan { task_id: episode.task_id.clone(), errors })
    }
}
