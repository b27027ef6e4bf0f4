//! One module per subcommand; each exposes its clap args struct and a
//! `run` entry point.

pub mod export;
pub mod metrics;
pub mod plan;
pub mod run;
pub mod segment;
pub mod stability;
pub mod synth;
pub mod validate;
