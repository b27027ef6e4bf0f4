//! Planner-facing exports: segment manifests, dataset statistics, and
//! STRIPS-style domain/problem documents.
//!
//! The emitters produce byte-stable output (sorted where declaration
//! order is not meaningful), and [`strips_check`] is a standalone
//! s-expression grammar checker that validates emitted documents
//! without sharing any code with the emitters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SceneDescription;
use crate::schema::{ActionSchema, Literal, OptionType};
use crate::validator::EpisodeResult;

/// One exported segment: enough for a planner to index demonstrations
/// by option.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub episode_id: String,
    /// 0-based position within the episode.
    pub segment_index: usize,
    /// Bare option name; arguments are carried separately.
    pub label: String,
    pub args: Vec<String>,
    pub t_s: u32,
    pub t_e: u32,
    pub confidence: f64,
    pub source_task_id: String,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("manifest parse error at line {line}: {message}")]
    BadManifest { line: usize, message: String },
    #[error("scene object {object:?} has type {object_type:?} which the schema does not declare")]
    UnknownObjectType { object: String, object_type: String },
    #[error("scene literal uses undeclared predicate {predicate:?}")]
    UndeclaredPredicate { predicate: String },
    #[error("scene literal {predicate:?} expects {expected} args, got {got}")]
    LiteralArity { predicate: String, expected: usize, got: usize },
    #[error("scene literal argument {object:?} is not a scene object or constant")]
    UnknownObject { object: String },
    #[error("initial state cannot contain the negated literal {predicate:?}")]
    NegatedInit { predicate: String },
    #[error("problem has an empty goal")]
    EmptyGoal,
}

/// Collects every accepted segment with confidence at or above
/// `min_confidence`, in (episode, step) order.
pub fn export_manifest(results: &[EpisodeResult], min_confidence: f64) -> Vec<ManifestEntry> {
    let mut out = Vec::new();
    for result in results.iter().filter(|r| r.status.is_accepted()) {
        for (segment_index, seg) in result.segments.iter().enumerate() {
            if seg.confidence >= min_confidence {
                out.push(ManifestEntry {
                    episode_id: result.episode_id.clone(),
                    segment_index,
                    label: seg.step.option.clone(),
                    args: seg.step.args.clone(),
                    t_s: seg.span.start,
                    t_e: seg.span.end,
                    confidence: seg.confidence,
                    source_task_id: result.task_id.clone(),
                });
            }
        }
    }
    out
}

pub fn serialize_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(entry).expect("manifest serialization"));
        out.push('\n');
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, ExportError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(raw).map_err(|e| ExportError::BadManifest {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Per-suite episode and segment counts. The suite of a task is the
/// task id's prefix before the first `/` (or the whole id).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteStats {
    pub demos: usize,
    pub segments: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub episodes_in: usize,
    pub episodes_accepted: usize,
    pub segments_out: usize,
    pub per_suite: BTreeMap<String, SuiteStats>,
}

pub fn suite_of(task_id: &str) -> &str {
    task_id.split('/').next().unwrap_or(task_id)
}

/// Counts demonstrations and exported segments, total and per suite.
pub fn compute_stats(results: &[EpisodeResult], manifest: &[ManifestEntry]) -> DatasetStats {
    let mut stats = DatasetStats {
        episodes_in: results.len(),
        episodes_accepted: results.iter().filter(|r| r.status.is_accepted()).count(),
        segments_out: manifest.len(),
        per_suite: BTreeMap::new(),
    };
    for result in results {
        stats.per_suite.entry(suite_of(&result.task_id).to_string()).or_default().demos += 1;
    }
    for entry in manifest {
        stats
            .per_suite
            .entry(suite_of(&entry.source_task_id).to_string())
            .or_default()
            .segments += 1;
    }
    stats
}

pub fn serialize_stats(stats: &DatasetStats) -> String {
    let mut text = serde_json::to_string_pretty(stats).expect("stats serialization");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// STRIPS-style emission
// ---------------------------------------------------------------------------

fn render_args<F: Fn(&str) -> String>(args: &[String], render: F) -> String {
    args.iter().map(|a| render(a)).collect::<Vec<_>>().join(" ")
}

fn render_application(lit: &Literal, render_arg: &dyn Fn(&str) -> String) -> String {
    if lit.args.is_empty() {
        format!("({})", lit.predicate)
    } else {
        format!("({} {})", lit.predicate, render_args(&lit.args, render_arg))
    }
}

fn render_literal(lit: &Literal, render_arg: &dyn Fn(&str) -> String) -> String {
    let app = render_application(lit, render_arg);
    if lit.negated {
        format!("(not {app})")
    } else {
        app
    }
}

fn render_and(parts: &[String]) -> String {
    if parts.is_empty() {
        "(and)".to_string()
    } else {
        format!("(and {})", parts.join(" "))
    }
}

fn render_action(opt: &OptionType) -> String {
    let is_param = |name: &str| opt.params.iter().any(|p| p.name == name);
    let arg = move |name: &str| {
        if is_param(name) {
            format!("?{name}")
        } else {
            name.to_string()
        }
    };
    let params = opt
        .params
        .iter()
        .map(|p| format!("?{} - {}", p.name, p.object_type))
        .collect::<Vec<_>>()
        .join(" ");
    let pre: Vec<String> = opt.preconditions.iter().map(|l| render_literal(l, &arg)).collect();
    let mut effects: Vec<String> =
        opt.add_effects.iter().map(|l| render_literal(l, &arg)).collect();
    effects.extend(
        opt.del_effects.iter().map(|l| format!("(not {})", render_application(l, &arg))),
    );
    format!(
        "  (:action {}\n    :parameters ({})\n    :precondition {}\n    :effect {})",
        opt.name,
        params,
        render_and(&pre),
        render_and(&effects)
    )
}

/// Emits the schema as a STRIPS domain document.
///
/// Types and predicates are emitted sorted; actions keep schema
/// declaration order. Preconditions and effects always get an `(and)`
/// wrapper and deletes a `(not)` wrapper, so the shape is uniform.
pub fn emit_pddl_domain(schema: &ActionSchema) -> String {
    let mut lines: Vec<String> = Vec::new();
    lines.push(format!("(define (domain {})", schema.name));
    lines.push("  (:requirements :strips :typing)".to_string());

    let mut types = schema.object_types.clone();
    types.sort();
    if !types.is_empty() {
        lines.push(format!("  (:types {})", types.join(" ")));
    }

    if !schema.constants.is_empty() {
        let rendered = schema
            .constants
            .iter()
            .map(|c| format!("{} - {}", c.name, c.object_type))
            .collect::<Vec<_>>()
            .join(" ");
        lines.push(format!("  (:constants {rendered})"));
    }

    let mut predicates = schema.predicates.clone();
    predicates.sort_by(|a, b| a.name.cmp(&b.name));
    if !predicates.is_empty() {
        lines.push("  (:predicates".to_string());
        for (i, p) in predicates.iter().enumerate() {
            let vars =
                (0..p.arity).map(|k| format!(" ?x{k}")).collect::<Vec<_>>().join("");
            let close = if i + 1 == predicates.len() { ")" } else { "" };
            lines.push(format!("    ({}{vars}){close}", p.name));
        }
    }

    for opt in &schema.options {
        lines.push(render_action(opt));
    }

    lines.push(")".to_string());
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

fn check_scene_literal(
    schema: &ActionSchema,
    scene: &SceneDescription,
    lit: &Literal,
) -> Result<(), ExportError> {
    let decl = schema
        .predicates
        .iter()
        .find(|p| p.name == lit.predicate)
        .ok_or_else(|| ExportError::UndeclaredPredicate { predicate: lit.predicate.clone() })?;
    if decl.arity != lit.args.len() {
        return Err(ExportError::LiteralArity {
            predicate: lit.predicate.clone(),
            expected: decl.arity,
            got: lit.args.len(),
        });
    }
    for arg in &lit.args {
        let known = scene.objects.iter().any(|o| o.name == *arg)
            || schema.constants.iter().any(|c| c.name == *arg);
        if !known {
            return Err(ExportError::UnknownObject { object: arg.clone() });
        }
    }
    Ok(())
}

/// Emits one scene as a STRIPS problem (`{domain}-problem`) against the
/// schema's domain. The initial state must be positive literals and the
/// goal must be nonempty.
pub fn emit_pddl_problem(
    schema: &ActionSchema,
    scene: &SceneDescription,
) -> Result<String, ExportError> {
    for obj in &scene.objects {
        if !schema.has_type(&obj.object_type) {
            return Err(ExportError::UnknownObjectType {
                object: obj.name.clone(),
                object_type: obj.object_type.clone(),
            });
        }
    }
    for lit in &scene.init {
        if lit.negated {
            return Err(ExportError::NegatedInit { predicate: lit.predicate.clone() });
        }
        check_scene_literal(schema, scene, lit)?;
    }
    if scene.goal.is_empty() {
        return Err(ExportError::EmptyGoal);
    }
    for lit in &scene.goal {
        check_scene_literal(schema, scene, lit)?;
    }

    let bare = |name: &str| name.to_string();
    let mut lines: Vec<String> = Vec::new();
    lines.push(format!("(define (problem {}-problem)", schema.name));
    lines.push(format!("  (:domain {})", schema.name));
    if !scene.objects.is_empty() {
        let objects = scene
            .objects
            .iter()
            .map(|o| format!("{} - {}", o.name, o.object_type))
            .collect::<Vec<_>>()
            .join(" ");
        lines.push(format!("  (:objects {objects})"));
    }
    let init = scene
        .init
        .iter()
        .map(|l| render_application(l, &bare))
        .collect::<Vec<_>>()
        .join(" ");
    if init.is_empty() {
        lines.push("  (:init)".to_string());
    } else {
        lines.push(format!("  (:init {init})"));
    }
    let goal: Vec<String> = scene.goal.iter().map(|l| render_literal(l, &bare)).collect();
    lines.push(format!("  (:goal {})", render_and(&goal)));
    lines.push(")".to_string());
    let mut out = lines.join("\n");
    out.push('\n');
    Ok(out)
}

// ---------------------------------------------------------------------------
// Independent STRIPS grammar checker
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
#[error("STRIPS grammar violation: {0}")]
pub struct StripsError(String);

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn parse_sexp(tokens: &[String], pos: &mut usize) -> Result<Sexp, StripsError> {
    if *pos >= tokens.len() {
        return Err(StripsError("unexpected end of input".into()));
    }
    let token = &tokens[*pos];
    *pos += 1;
    match token.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                if *pos >= tokens.len() {
                    return Err(StripsError("unclosed parenthesis".into()));
                }
                if tokens[*pos] == ")" {
                    *pos += 1;
                    return Ok(Sexp::List(items));
                }
                items.push(parse_sexp(tokens, pos)?);
            }
        }
        ")" => Err(StripsError("unexpected closing parenthesis".into())),
        atom => Ok(Sexp::Atom(atom.to_string())),
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && !s.starts_with('?') && !s.starts_with(':') && s != "-"
}

fn is_var(s: &str) -> bool {
    s.len() > 1 && s.starts_with('?')
}

/// Typed list grammar: `name+ (- type)?` repeated; entries are names or
/// (when `vars` is set) variables.
fn check_typed_list(items: &[Sexp], vars: bool, what: &str) -> Result<(), StripsError> {
    let mut saw_entry = false;
    let mut expect_type = false;
    for item in items {
        let atom = item
            .atom()
            .ok_or_else(|| StripsError(format!("{what}: expected atoms, found a list")))?;
        if expect_type {
            if !is_name(atom) {
                return Err(StripsError(format!("{what}: {atom:?} is not a type name")));
            }
            expect_type = false;
            saw_entry = false;
        } else if atom == "-" {
            if !saw_entry {
                return Err(StripsError(format!("{what}: dangling '-' with no entries")));
            }
            expect_type = true;
        } else {
            let ok = if vars { is_var(atom) } else { is_name(atom) };
            if !ok {
                return Err(StripsError(format!("{what}: unexpected token {atom:?}")));
            }
            saw_entry = true;
        }
    }
    if expect_type {
        return Err(StripsError(format!("{what}: trailing '-' without a type")));
    }
    Ok(())
}

fn check_application(items: &[Sexp], ground: bool, what: &str) -> Result<(), StripsError> {
    let Some(head) = items.first().and_then(Sexp::atom) else {
        return Err(StripsError(format!("{what}: application must start with a predicate name")));
    };
    if !is_name(head) {
        return Err(StripsError(format!("{what}: {head:?} is not a predicate name")));
    }
    for arg in &items[1..] {
        let atom = arg
            .atom()
            .ok_or_else(|| StripsError(format!("{what}: application args must be atoms")))?;
        let ok = if ground { is_name(atom) } else { is_name(atom) || is_var(atom) };
        if !ok {
            return Err(StripsError(format!("{what}: bad application argument {atom:?}")));
        }
    }
    Ok(())
}

fn check_formula(sexp: &Sexp, what: &str) -> Result<(), StripsError> {
    let Sexp::List(items) = sexp else {
        return Err(StripsError(format!("{what}: formula must be a list")));
    };
    match items.first().and_then(Sexp::atom) {
        Some("and") => {
            for child in &items[1..] {
                check_formula(child, what)?;
            }
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(StripsError(format!("{what}: (not ...) takes exactly one formula")));
            }
            check_formula(&items[1], what)
        }
        _ => check_application(items, false, what),
    }
}

fn section_keyword(section: &Sexp) -> Result<(&str, &[Sexp]), StripsError> {
    let Sexp::List(items) = section else {
        return Err(StripsError("every section must be a list".into()));
    };
    let head = items
        .first()
        .and_then(Sexp::atom)
        .ok_or_else(|| StripsError("section must start with a keyword".into()))?;
    if !head.starts_with(':') {
        return Err(StripsError(format!("{head:?} is not a section keyword")));
    }
    Ok((head, &items[1..]))
}

fn check_action(rest: &[Sexp]) -> Result<(), StripsError> {
    let Some(name) = rest.first().and_then(Sexp::atom).filter(|n| is_name(n)) else {
        return Err(StripsError(":action must be followed by a name".into()));
    };
    let what = format!("action {name}");
    let mut i = 1;
    let mut seen_params = false;
    while i < rest.len() {
        let key = rest[i]
            .atom()
            .ok_or_else(|| StripsError(format!("{what}: expected a keyword")))?;
        let value = rest
            .get(i + 1)
            .ok_or_else(|| StripsError(format!("{what}: {key} has no value")))?;
        match key {
            ":parameters" => {
                let Sexp::List(items) = value else {
                    return Err(StripsError(format!("{what}: :parameters must be a list")));
                };
                check_typed_list(items, true, &what)?;
                seen_params = true;
            }
            ":precondition" | ":effect" => check_formula(value, &what)?,
            other => {
                return Err(StripsError(format!("{what}: unknown action keyword {other:?}")))
            }
        }
        i += 2;
    }
    if !seen_params {
        return Err(StripsError(format!("{what}: missing :parameters")));
    }
    Ok(())
}

fn check_domain_sections(sections: &[Sexp]) -> Result<(), StripsError> {
    for section in sections {
        let (keyword, rest) = section_keyword(section)?;
        match keyword {
            ":requirements" => {
                for item in rest {
                    let atom = item.atom().unwrap_or("");
                    if !atom.starts_with(':') {
                        return Err(StripsError(format!(
                            "requirement {atom:?} must be a keyword"
                        )));
                    }
                }
            }
            ":types" => check_typed_list(rest, false, ":types")?,
            ":constants" => check_typed_list(rest, false, ":constants")?,
            ":predicates" => {
                for item in rest {
                    let Sexp::List(items) = item else {
                        return Err(StripsError(
                            ":predicates entries must be lists".into(),
                        ));
                    };
                    let Some(head) = items.first().and_then(Sexp::atom).filter(|n| is_name(n))
                    else {
                        return Err(StripsError(
                            "predicate declaration must start with a name".into(),
                        ));
                    };
                    for arg in &items[1..] {
                        let atom = arg.atom().unwrap_or("");
                        if !is_var(atom) {
                            return Err(StripsError(format!(
                                "predicate {head}: parameter {atom:?} must be a ?variable"
                            )));
                        }
                    }
                }
            }
            ":action" => check_action(rest)?,
            other => return Err(StripsError(format!("unknown domain section {other:?}"))),
        }
    }
    Ok(())
}

fn check_problem_sections(sections: &[Sexp]) -> Result<(), StripsError> {
    let mut saw_domain = false;
    for section in sections {
        let (keyword, rest) = section_keyword(section)?;
        match keyword {
            ":domain" => {
                if rest.len() != 1 || !rest[0].atom().map(is_name).unwrap_or(false) {
                    return Err(StripsError(":domain takes exactly one name".into()));
                }
                saw_domain = true;
            }
            ":objects" => check_typed_list(rest, false, ":objects")?,
            ":init" => {
                for item in rest {
                    let Sexp::List(items) = item else {
                        return Err(StripsError(":init entries must be literals".into()));
                    };
                    check_application(items, true, ":init")?;
                }
            }
            ":goal" => {
                if rest.len() != 1 {
                    return Err(StripsError(":goal takes exactly one formula".into()));
                }
                check_formula(&rest[0], ":goal")?;
            }
            other => return Err(StripsError(format!("unknown problem section {other:?}"))),
        }
    }
    if !saw_domain {
        return Err(StripsError("problem is missing its (:domain ...) section".into()));
    }
    Ok(())
}

/// Validates a domain or problem document against a STRIPS grammar:
/// balanced s-expressions, a `(define (domain|problem name) ...)` root,
/// known sections, typed lists, and `and`/`not`/application formulas.
/// Purely structural — no schema is consulted.
pub fn strips_check(text: &str) -> Result<(), StripsError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let root = parse_sexp(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(StripsError("trailing tokens after the document".into()));
    }
    let Sexp::List(items) = root else {
        return Err(StripsError("document must be a parenthesized define".into()));
    };
    if items.first().and_then(Sexp::atom) != Some("define") {
        return Err(StripsError("document must start with (define ...)".into()));
    }
    let Some(Sexp::List(header)) = items.get(1) else {
        return Err(StripsError("define must be followed by (domain name) or (problem name)".into()));
    };
    let kind = header.first().and_then(Sexp::atom).unwrap_or("");
    let named = header.len() == 2 && header[1].atom().map(is_name).unwrap_or(false);
    if !named {
        return Err(StripsError(format!("bad define header {header:?}")));
    }
    match kind {
        "domain" => check_domain_sections(&items[2..]),
        "problem" => check_problem_sections(&items[2..]),
        other => Err(StripsError(format!("define kind must be domain or problem, got {other:?}"))),
    }
}
