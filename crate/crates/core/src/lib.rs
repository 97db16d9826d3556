//! Core model for roundabout crash diagrams.
//!
//! Everything here is pure and allocation-only: structured crash records,
//! the parameterized two-lane roundabout, trajectory and impact solving,
//! the diagram scene graph with its deterministic SVG form, the fixed
//! three-part prompt, the ten-metric rubric and benchmark aggregation.
//! File formats, networking and the CLI live in the `crashviz` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod benchmark;
pub mod evaluator;
pub mod geometry;
mod math;
pub mod perturb;
pub mod prompt;
pub mod record;
pub mod scene;

pub use benchmark::{aggregate, render_report, BenchmarkReport, ReportFormat};
pub use evaluator::{
    evaluate_auto, merge_ratings, ConsensusSheet, MetricId, Rater, ScoreSheet, Tolerances,
};
pub use geometry::{
    classify_movement, compute_impact, compute_trajectory, quadrant_of, standard_template,
    zone_centroid, GeometryTemplate, Lane, Point, Pose, Trajectory, TurnMovement,
};
pub use prompt::{build_prompt, prompt_fingerprint, PromptBundle};
pub use record::{
    validate_record, CollisionType, Compass, CrashRecord, DamageCode, VehicleLabel, VehicleRecord,
};
pub use scene::{build_scene, parse_scene, render_svg, RenderOptions, SceneGraph};
