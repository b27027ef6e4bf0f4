//! Typed action schema: the alphabet of option types, grounded options,
//! and plans, plus schema parsing and plan validation.
//!
//! A schema declares object types, predicates (name + arity), optional
//! schema-level constants, and option types. Every literal inside an
//! option must reference a declared predicate with matching arity, and
//! every literal argument must be a declared parameter or constant.
//! Schemas are immutable after parse and safe to share across parallel
//! episode workers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A possibly negated predicate application, e.g. `¬grasped(bowl)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub negated: bool,
}

impl Literal {
    pub fn pos(predicate: &str, args: &[&str]) -> Self {
        Literal {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
            negated: false,
        }
    }

    pub fn neg(predicate: &str, args: &[&str]) -> Self {
        Literal { negated: true, ..Literal::pos(predicate, args) }
    }
}

/// A typed option parameter, e.g. `bowl: bowl_t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(rename = "type")]
    pub object_type: String,
}

/// A schema-level constant object, available in every scene.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constant {
    pub name: String,
    #[serde(rename = "type")]
    pub object_type: String,
}

/// A declared predicate with fixed arity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    pub arity: usize,
}

/// One option type: a short, typed, verifiable sub-behavior with
/// preconditions, effects, a termination description, and duration
/// bounds in frames.
///
/// The executable policy behind an option is out of scope; an option is
/// represented by its label, interface literals, and bounds only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptionType {
    pub name: String,
    pub params: Vec<Param>,
    pub preconditions: Vec<Literal>,
    pub add_effects: Vec<Literal>,
    pub del_effects: Vec<Literal>,
    pub termination: String,
    /// `(d_min, d_max)` inclusive frame-count bounds; `None` means the
    /// option does not constrain duration by itself (the validator falls
    /// back to its permissive default).
    pub duration_bounds: Option<(u32, u32)>,
}

/// The typed schema: the full alphabet available to planner and segmenter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub object_types: Vec<String>,
    pub predicates: Vec<PredicateDecl>,
    pub constants: Vec<Constant>,
    pub options: Vec<OptionType>,
}

impl ActionSchema {
    pub fn option(&self, name: &str) -> Option<&OptionType> {
        self.options.iter().find(|o| o.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        self.object_types.iter().any(|t| t == name)
    }
}

/// An option instance bound to concrete object names, e.g. `grasp(bowl)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedOption {
    pub option: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl GroundedOption {
    pub fn new(option: &str, args: &[&str]) -> Self {
        GroundedOption {
            option: option.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    /// Canonical label string: `name(arg1,arg2)`, or the bare name for
    /// zero-argument options. Used everywhere labels are compared.
    pub fn label(&self) -> String {
        if self.args.is_empty() {
            self.option.clone()
        } else {
            format!("{}({})", self.option, self.args.join(","))
        }
    }

    /// Inverse of [`GroundedOption::label`]: `None` when the text is
    /// not a canonical label.
    pub fn parse_label(label: &str) -> Option<GroundedOption> {
        let (option, args) = match label.split_once('(') {
            None => (label, Vec::new()),
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')')?;
                let args = if inner.is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(|a| a.trim().to_string()).collect()
                };
                (name, args)
            }
        };
        if option.is_empty() || args.iter().any(String::is_empty) {
            return None;
        }
        Some(GroundedOption { option: option.to_string(), args })
    }
}

impl std::fmt::Display for GroundedOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// An ordered plan of grounded options for one task. `K = steps.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub task_id: String,
    pub steps: Vec<GroundedOption>,
}

impl Plan {
    pub fn k(&self) -> usize {
        self.steps.len()
    }

    /// Canonical label strings in plan order.
    pub fn labels(&self) -> Vec<String> {
        self.steps.iter().map(GroundedOption::label).collect()
    }
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid identifier {name:?} ({context})")]
    InvalidIdentifier { context: String, name: String },
    #[error("duplicate object type {0:?}")]
    DuplicateType(String),
    #[error("duplicate predicate {0:?}")]
    DuplicatePredicate(String),
    #[error("duplicate constant {0:?}")]
    DuplicateConstant(String),
    #[error("duplicate option name {0:?}")]
    DuplicateOption(String),
    #[error("duplicate parameter {param:?} in option {option:?}")]
    DuplicateParam { option: String, param: String },
    #[error("option {option:?}: undeclared type {name:?}")]
    UndeclaredType { option: String, name: String },
    #[error("constant {constant:?}: undeclared type {name:?}")]
    UndeclaredConstantType { constant: String, name: String },
    #[error("option {option:?}: undeclared predicate {predicate:?}")]
    UndeclaredPredicate { option: String, predicate: String },
    #[error("option {option:?}: predicate {predicate:?} expects {expected} args, got {got}")]
    LiteralArityMismatch { option: String, predicate: String, expected: usize, got: usize },
    #[error("option {option:?}: literal argument {arg:?} is neither a parameter nor a constant")]
    UnboundLiteralArg { option: String, arg: String },
    #[error("option {option:?}: d_min {d_min} must satisfy 1 <= d_min <= d_max ({d_max})")]
    BadDurationBounds { option: String, d_min: u32, d_max: u32 },
    #[error("option {option:?}: d_min and d_max must be given together")]
    HalfDurationBounds { option: String },
}

/// One plan defect found by [`validate_plan`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PlanError {
    EmptyPlan,
    UnknownOption { step: usize, option: String },
    ArityMismatch { step: usize, option: String, expected: usize, got: usize },
    UnknownObject { step: usize, object: String },
    ObjectTypeMismatch { step: usize, object: String, expected: String, actual: String },
}

impl std::fmt::Display for PlanError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanError::EmptyPlan => write!(f, "plan has no steps"),
            PlanError::UnknownOption { step, option } => {
                write!(f, "step {step}: unknown option {option:?}")
            }
            PlanError::ArityMismatch { step, option, expected, got } => {
                write!(f, "step {step}: option {option:?} takes {expected} args, got {got}")
            }
            PlanError::UnknownObject { step, object } => {
                write!(f, "step {step}: {object:?} is not a scene object or constant")
            }
            PlanError::ObjectTypeMismatch { step, object, expected, actual } => {
                write!(f, "step {step}: {object:?} has type {actual:?}, expected {expected:?}")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Schema file format (JSON document with `types` / `predicates` / `options`)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SchemaDoc {
    name: String,
    #[serde(default)]
    types: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constants: Vec<Constant>,
    #[serde(default)]
    predicates: Vec<PredicateDecl>,
    #[serde(default)]
    options: Vec<OptionDoc>,
}

#[derive(Serialize, Deserialize)]
struct OptionDoc {
    name: String,
    #[serde(default)]
    params: Vec<Param>,
    #[serde(default)]
    pre: Vec<Literal>,
    #[serde(default)]
    add: Vec<Literal>,
    #[serde(default)]
    del: Vec<Literal>,
    #[serde(default)]
    termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_max: Option<u32>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn check_identifier(context: &str, name: &str) -> Result<(), SchemaError> {
    if is_identifier(name) {
        Ok(())
    } else {
        Err(SchemaError::InvalidIdentifier { context: context.to_string(), name: name.to_string() })
    }
}

/// Parses a schema document and checks every schema invariant.
pub fn parse_schema(text: &str) -> Result<ActionSchema, SchemaError> {
    let doc: SchemaDoc = serde_json::from_str(text).map_err(|e| SchemaError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    check_identifier("schema name", &doc.name)?;
    let mut object_types = Vec::new();
    for t in &doc.types {
        check_identifier("object type", t)?;
        if object_types.contains(t) {
            return Err(SchemaError::DuplicateType(t.clone()));
        }
        object_types.push(t.clone());
    }

    let mut predicates: Vec<PredicateDecl> = Vec::new();
    for p in &doc.predicates {
        check_identifier("predicate", &p.name)?;
        if predicates.iter().any(|q| q.name == p.name) {
            return Err(SchemaError::DuplicatePredicate(p.name.clone()));
        }
        predicates.push(p.clone());
    }

    let mut constants: Vec<Constant> = Vec::new();
    for c in &doc.constants {
        check_identifier("constant", &c.name)?;
        if constants.iter().any(|d| d.name == c.name) {
            return Err(SchemaError::DuplicateConstant(c.name.clone()));
        }
        if !object_types.contains(&c.object_type) {
            return Err(SchemaError::UndeclaredConstantType {
                constant: c.name.clone(),
                name: c.object_type.clone(),
            });
        }
        constants.push(c.clone());
    }

    let mut options: Vec<OptionType> = Vec::new();
    for o in &doc.options {
        check_identifier("option", &o.name)?;
        if options.iter().any(|p| p.name == o.name) {
            return Err(SchemaError::DuplicateOption(o.name.clone()));
        }
        let mut params = Vec::new();
        for p in &o.params {
            check_identifier("parameter", &p.name)?;
            if params.iter().any(|q: &Param| q.name == p.name) {
                return Err(SchemaError::DuplicateParam {
                    option: o.name.clone(),
                    param: p.name.clone(),
                });
            }
            if !object_types.contains(&p.object_type) {
                return Err(SchemaError::UndeclaredType {
                    option: o.name.clone(),
                    name: p.object_type.clone(),
                });
            }
            params.push(p.clone());
        }

        let duration_bounds = match (o.d_min, o.d_max) {
            (Some(lo), Some(hi)) => {
                if lo < 1 || lo > hi {
                    return Err(SchemaError::BadDurationBounds {
                        option: o.name.clone(),
                        d_min: lo,
                        d_max: hi,
                    });
                }
                Some((lo, hi))
            }
            (None, None) => None,
            _ => return Err(SchemaError::HalfDurationBounds { option: o.name.clone() }),
        };

        for lit in o.pre.iter().chain(&o.add).chain(&o.del) {
            let decl = predicates.iter().find(|p| p.name == lit.predicate).ok_or_else(|| {
                SchemaError::UndeclaredPredicate {
                    option: o.name.clone(),
                    predicate: lit.predicate.clone(),
                }
            })?;
            if decl.arity != lit.args.len() {
                return Err(SchemaError::LiteralArityMismatch {
                    option: o.name.clone(),
                    predicate: lit.predicate.clone(),
                    expected: decl.arity,
                    got: lit.args.len(),
                });
            }
            for arg in &lit.args {
                let bound = params.iter().any(|p| p.name == *arg)
                    || constants.iter().any(|c| c.name == *arg);
                if !bound {
                    return Err(SchemaError::UnboundLiteralArg {
                        option: o.name.clone(),
                        arg: arg.clone(),
                    });
                }
            }
        }

        options.push(OptionType {
            name: o.name.clone(),
            params,
            preconditions: o.pre.clone(),
            add_effects: o.add.clone(),
            del_effects: o.del.clone(),
            termination: o.termination.clone(),
            duration_bounds,
        });
    }

    Ok(ActionSchema { name: doc.name, object_types, predicates, constants, options })
}

/// Serializes a schema back to the document format accepted by
/// [`parse_schema`]; `parse_schema(serialize_schema(s)) == s` for every
/// valid schema.
pub fn serialize_schema(schema: &ActionSchema) -> String {
    let doc = SchemaDoc {
        name: schema.name.clone(),
        types: schema.object_types.clone(),
        constants: schema.constants.clone(),
        predicates: schema.predicates.clone(),
        options: schema
            .options
            .iter()
            .map(|o| OptionDoc {
                name: o.name.clone(),
                params: o.params.clone(),
                pre: o.preconditions.clone(),
                add: o.add_effects.clone(),
                del: o.del_effects.clone(),
                termination: o.termination.clone(),
                d_min: o.duration_bounds.map(|b| b.0),
                d_max: o.duration_bounds.map(|b| b.1),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("schema serialization cannot fail")
}

/// Checks a plan against a schema and scene. Returns every defect found;
/// an empty list means the plan is well-formed: each step names a schema
/// option with matching arity, and each argument names a scene object
/// (or schema constant) of the parameter's declared type.
pub fn validate_plan(
    schema: &ActionSchema,
    plan: &Plan,
    scene: &crate::ingest::SceneDescription,
) -> Vec<PlanError> {
    let mut errors = Vec::new();
    if plan.steps.is_empty() {
        errors.push(PlanError::EmptyPlan);
    }
    for (step, g) in plan.steps.iter().enumerate() {
        let opt = match schema.option(&g.option) {
            Some(o) => o,
            None => {
                errors.push(PlanError::UnknownOption { step, option: g.option.clone() });
                continue;
            }
        };
        if opt.params.len() != g.args.len() {
            errors.push(PlanError::ArityMismatch {
                step,
                option: g.option.clone(),
                expected: opt.params.len(),
                got: g.args.len(),
            });
            continue;
        }
        for (param, arg) in opt.params.iter().zip(&g.args) {
            let actual_type = scene
                .object_type(arg)
                .map(str::to_string)
                .or_else(|| schema.constant(arg).map(|c| c.object_type.clone()));
            match actual_type {
                None => errors.push(PlanError::UnknownObject { step, object: arg.clone() }),
                Some(t) if t != param.object_type => {
                    errors.push(PlanError::ObjectTypeMismatch {
                        step,
                        object: arg.clone(),
                        expected: param.object_type.clone(),
                        actual: t,
                    });
                }
                Some(_) => {}
            }
        }
    }
    errors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SceneDescription, SceneObject};

    /// Kitchen-style fixture: one option placing a bowl into a drawer.
    pub(crate) fn kitchen_schema_text() -> &'static str {
        r#"{
            "name": "kitchen",
            "types": ["bowl_t", "drawer_t"],
            "predicates": [
                {"name": "grasped", "arity": 1},
                {"name": "isOpen", "arity": 1},
                {"name": "clear", "arity": 1},
                {"name": "in", "arity": 2}
            ],
            "options": [
                {
                    "name": "place_bowl_in_drawer",
                    "params": [
                        {"name": "bowl", "type": "bowl_t"},
                        {"name": "drawer", "type": "drawer_t"}
                    ],
                    "pre": [
                        {"predicate": "grasped", "args": ["bowl"]},
                        {"predicate": "isOpen", "args": ["drawer"]},
                        {"predicate": "clear", "args": ["drawer"]}
                    ],
                    "add": [{"predicate": "in", "args": ["bowl", "drawer"]}],
                    "del": [{"predicate": "grasped", "args": ["bowl"]}],
                    "termination": "bowl released in drawer; end-effector exits",
                    "d_min": 30,
                    "d_max": 120
                }
            ]
        }"#
    }

    fn kitchen_scene() -> SceneDescription {
        SceneDescription {
            objects: vec![
                SceneObject { name: "bowl".into(), object_type: "bowl_t".into() },
                SceneObject { name: "drawer".into(), object_type: "drawer_t".into() },
            ],
            init: vec![Literal::pos("isOpen", &["drawer"])],
            goal: vec![Literal::pos("in", &["bowl", "drawer"])],
        }
    }

    #[test]
    fn parses_single_option_schema_with_bounds() {
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        assert_eq!(schema.options.len(), 1);
        let opt = schema.option("place_bowl_in_drawer").unwrap();
        assert_eq!(opt.duration_bounds, Some((30, 120)));
        assert_eq!(opt.preconditions.len(), 3);
        assert_eq!(opt.add_effects, vec![Literal::pos("in", &["bowl", "drawer"])]);
        assert_eq!(opt.del_effects, vec![Literal::pos("grasped", &["bowl"])]);
    }

    #[test]
    fn empty_option_list_is_valid() {
        let schema = parse_schema(
            r#"{"name": "min", "types": [], "predicates": [{"name": "p", "arity": 0}], "options": []}"#,
        )
        .unwrap();
        assert!(schema.options.is_empty());
        assert_eq!(schema.predicates.len(), 1);
    }

    #[test]
    fn undeclared_predicate_is_rejected() {
        let text = r#"{
            "name": "bad",
            "types": ["b"],
            "predicates": [],
            "options": [{
                "name": "stack",
                "params": [{"name": "x", "type": "b"}, {"name": "y", "type": "b"}],
                "pre": [{"predicate": "stacked", "args": ["x", "y"]}]
            }]
        }"#;
        let err = parse_schema(text).unwrap_err();
        assert!(matches!(err, SchemaError::UndeclaredPredicate { ref predicate, .. } if predicate == "stacked"));
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let text = r#"{
            "name": "bad",
            "types": ["b"],
            "predicates": [{"name": "on", "arity": 2}],
            "options": [{
                "name": "o",
                "params": [{"name": "x", "type": "b"}],
                "pre": [{"predicate": "on", "args": ["x"]}]
            }]
        }"#;
        let err = parse_schema(text).unwrap_err();
        assert!(matches!(err, SchemaError::LiteralArityMismatch { expected: 2, got: 1, .. }));
    }

    #[test]
    fn inverted_duration_bounds_are_rejected() {
        let text = r#"{
            "name": "bad",
            "types": [],
            "predicates": [],
            "options": [{"name": "o", "d_min": 10, "d_max": 5}]
        }"#;
        let err = parse_schema(text).unwrap_err();
        assert!(matches!(err, SchemaError::BadDurationBounds { d_min: 10, d_max: 5, .. }));
    }

    #[test]
    fn duplicate_option_name_is_rejected() {
        let text = r#"{
            "name": "bad",
            "types": [],
            "predicates": [],
            "options": [{"name": "o"}, {"name": "o"}]
        }"#;
        assert!(matches!(parse_schema(text).unwrap_err(), SchemaError::DuplicateOption(_)));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_schema("{\n  \"name\": \"x\",\n  !!\n}").unwrap_err();
        match err {
            SchemaError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn literal_args_must_be_params_or_constants() {
        let text = r#"{
            "name": "bad",
            "types": ["b"],
            "predicates": [{"name": "p", "arity": 1}],
            "options": [{"name": "o", "pre": [{"predicate": "p", "args": ["ghost"]}]}]
        }"#;
        let err = parse_schema(text).unwrap_err();
        assert!(matches!(err, SchemaError::UnboundLiteralArg { ref arg, .. } if arg == "ghost"));
    }

    #[test]
    fn constants_can_appear_in_literals() {
        let text = r#"{
            "name": "c",
            "types": ["surface_t"],
            "constants": [{"name": "table", "type": "surface_t"}],
            "predicates": [{"name": "onTable", "arity": 1}],
            "options": [{"name": "o", "add": [{"predicate": "onTable", "args": ["table"]}]}]
        }"#;
        let schema = parse_schema(text).unwrap();
        assert_eq!(schema.constants.len(), 1);
    }

    #[test]
    fn schema_round_trips_through_serialization() {
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        let round = parse_schema(&serialize_schema(&schema)).unwrap();
        assert_eq!(schema, round);
    }

    #[test]
    fn valid_plan_produces_no_errors() {
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        let plan = Plan {
            task_id: "t".into(),
            steps: vec![GroundedOption::new("place_bowl_in_drawer", &["bowl", "drawer"])],
        };
        assert!(validate_plan(&schema, &plan, &kitchen_scene()).is_empty());
    }

    #[test]
    fn unknown_option_is_reported() {
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        let plan = Plan { task_id: "t".into(), steps: vec![GroundedOption::new("fly", &["bowl"])] };
        let errors = validate_plan(&schema, &plan, &kitchen_scene());
        assert_eq!(errors.len(), 1);
        assert!(matches!(errors[0], PlanError::UnknownOption { step: 0, .. }));
    }

    #[test]
    fn grounded_arity_mismatch_is_reported() {
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        let plan = Plan {
            task_id: "t".into(),
            steps: vec![GroundedOption::new("place_bowl_in_drawer", &["bowl"])],
        };
        let errors = validate_plan(&schema, &plan, &kitchen_scene());
        assert!(matches!(errors[0], PlanError::ArityMismatch { expected: 2, got: 1, .. }));
    }

    #[test]
    fn type_mismatch_and_unknown_object_are_reported() {
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        let plan = Plan {
            task_id: "t".into(),
            steps: vec![
                GroundedOption::new("place_bowl_in_drawer", &["drawer", "drawer"]),
                GroundedOption::new("place_bowl_in_drawer", &["bowl", "ghost"]),
            ],
        };
        let errors = validate_plan(&schema, &plan, &kitchen_scene());
        assert!(errors
            .iter()
            .any(|e| matches!(e, PlanError::ObjectTypeMismatch { step: 0, .. })));
        assert!(errors.iter().any(
            |e| matches!(e, PlanError::UnknownObject { step: 1, object } if object == "ghost")
        ));
    }

    #[test]
    fn empty_plan_is_reported() {
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        let plan = Plan { task_id: "t".into(), steps: vec![] };
        assert_eq!(validate_plan(&schema, &plan, &kitchen_scene()), vec![PlanError::EmptyPlan]);
    }

    #[test]
    fn label_rendering() {
        assert_eq!(GroundedOption::new("grasp", &["bowl"]).label(), "grasp(bowl)");
        assert_eq!(GroundedOption::new("retreat", &[]).label(), "retreat");
        assert_eq!(
            GroundedOption::new("place_in", &["bowl", "drawer"]).label(),
            "place_in(bowl,drawer)"
        );
    }

    #[test]
    fn label_round_trips_through_parse() {
        for step in [
            GroundedOption::new("retreat", &[]),
            GroundedOption::new("grasp", &["bowl"]),
            GroundedOption::new("place_in", &["bowl", "drawer"]),
        ] {
            assert_eq!(GroundedOption::parse_label(&step.label()), Some(step));
        }
        assert_eq!(GroundedOption::parse_label("open()"), Some(GroundedOption::new("open", &[])));
        assert_eq!(GroundedOption::parse_label("broken(bowl"), None);
        assert_eq!(GroundedOption::parse_label("(bowl)"), None);
        assert_eq!(GroundedOption::parse_label("grasp(,)"), None);
    }

    #[test]
    fn validate_plan_empty_means_membership_in_schema() {
        // Zero errors implies every label is a schema member.
        let schema = parse_schema(kitchen_schema_text()).unwrap();
        let plan = Plan {
            task_id: "t".into(),
            steps: vec![GroundedOption::new("place_bowl_in_drawer", &["bowl", "drawer"])],
        };
        if validate_plan(&schema, &plan, &kitchen_scene()).is_empty() {
            for step in &plan.steps {
                assert!(schema.option(&step.option).is_some());
            }
        }
    }
}
