//! Planner-aligned atomic action slicing.
//!
//! This crate turns long-horizon robot demonstration episodes into short,
//! typed, validated atomic action segments that line up with a symbolic
//! task plan. The pipeline has three stages: plan discovery ([`planner`]),
//! schema-constrained boundary proposal ([`segmenter`]), and validation
//! with confidence calibration ([`validator`]). Around the stages sit
//! episode ingestion ([`ingest`]), the action schema ([`schema`]), the
//! evaluation metric suite ([`metrics`]), downstream exports — segment
//! manifests and STRIPS operator domains ([`exporter`]) — and a synthetic
//! data generator for desk-scale end-to-end verification ([`synth`]).
//!
//! All stages are deterministic given their seeds, and everything shared
//! across episode workers (schema, registry, bounds, configuration) is
//! immutable after load.

pub mod exporter;
pub mod ingest;
pub mod metrics;
pub mod planner;
pub mod remote;
pub mod schema;
pub mod segmenter;
pub mod span;
pub mod synth;
pub mod util;
pub mod validator;

pub use ingest::{Episode, KeyframeSet, SceneDescription, SceneObject, StateSummary};
pub use schema::{ActionSchema, GroundedOption, Literal, OptionType, Plan};
pub use segmenter::{Boundaries, RawProposal, RawStep, SegmentationRequest};
pub use span::Span;
pub use validator::{EpisodeResult, EpisodeStatus, RejectReason, ValidatedSegment};
