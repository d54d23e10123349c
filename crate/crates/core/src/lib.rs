//! Optimal merging index for a single autonomous vehicle (AV) joining a
//! platoon of human-driven vehicles (HDVs).
//!
//! The AV may cross the merge point as the `k`-th vehicle for any
//! `k = 1..=N+1`. For each index the merging time and speed are optimized
//! against a weighted sum of travel time and energy over all vehicles; the
//! cheapest index whose trajectory respects the actuator limits wins.
//!
//! Module map:
//! - [`types`]: scenario, limits, validation.
//! - [`disruption`]: HDV travel times and the cost of yielding.
//! - [`safe_sets`]: admissible merging windows.
//! - [`trajectory`]: closed-form minimum-energy trajectories.
//! - [`policy`]: per-index optimization, index selection, closed-form shortcuts.
//! - [`harness`]: brute-force oracle, scenario generator, replay audit.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disruption;
pub mod error;
pub mod harness;
pub mod policy;
pub mod safe_sets;
pub mod trajectory;
pub mod types;

pub use error::{Error, Result};
pub use policy::{
    optimal_index, optimal_index_with, optimize_index, CostBreakdown, MergePlan, SolverOptions,
};

pub use types::{BehaviorModel, ConstraintLimits, Hdv, Scenario, SequenceIndex, VehicleState};
