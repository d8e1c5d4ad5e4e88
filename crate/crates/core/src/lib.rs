//! Placement-bias analysis for wireless ad hoc network topology generators.
//!
//! The crate covers the whole workflow: seeded node-placement generators,
//! per-topology spatial feature extraction, a Hedges' g based bias index for
//! generator subsets, and Naive Bayes distinguishability analysis with
//! forward sequential feature selection.

pub mod bias;
pub mod classify;
pub mod error;
pub mod features;
pub mod generators;
pub mod io;
pub mod pipeline;
pub mod topology;

pub use error::{Error, Result};
pub use topology::{ExperimentConfig, Point, RadiiConfig, Topology};

/// Version tag written into every report and feature file.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
