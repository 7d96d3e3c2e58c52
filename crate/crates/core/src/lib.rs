//! Teacher behaviour analytics for classroom recordings.
//!
//! The crate turns per-session inputs (person detections, classroom audio,
//! annotation files) into a teacher position track, an action timeline,
//! windowed vocal features with multi-criteria scores, and the summary
//! document consumed by the review dashboard.

pub mod actions;
pub mod analytics;
pub mod config;
pub mod error;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod scoring;
pub mod speech;
pub mod synth;
pub mod tracking;

pub use error::{Error, Result};
