//! Video-based surgical skill scoring through the clearness of the operating
//! field (COF).
//!
//! The crate covers the whole pipeline: per-frame color features, a two-branch
//! frame scorer with attention pooling trained on a joint L1 + hinge rank
//! objective, rater-consistency statistics over Likert annotations, a
//! repeated k-fold evaluation harness, a synthetic oracle corpus and
//! frame-level feedback export.

pub mod annotations;
pub mod corr;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod feedback;
pub mod model;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};

/// Metric id of Overall Technical Skill.
pub const METRIC_OTS: u32 = 6;
/// Metric id of Overall Procedural Skill.
pub const METRIC_OPS: u32 = 13;
/// Metric id of Clearness of Operating Field.
pub const METRIC_COF: u32 = 14;
