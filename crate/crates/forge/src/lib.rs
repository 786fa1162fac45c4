//! Generator and evaluation harness for paired standard/inverse game-state
//! benchmarks over four abstract strategy games, plus the synthetic
//! leg-counting glyph dataset and its counterfactual transforms.

pub mod cli;
pub mod client;
pub mod error;
pub mod game;
pub mod manifest;
pub mod prompt;
pub mod render;
pub mod sampler;
pub mod score;
pub mod stats;
pub mod synth;

/// Version of the on-disk pool/manifest/record schemas.
pub const SCHEMA_VERSION: u32 = 1;

/// Tool version stamped into run outputs.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
