#![no_std]
// Negated comparisons are deliberate: NaN must fail every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Nested sampling with MCMC step sampling and the relative jump distance
//! (RJD) diagnostic.
//!
//! Every engine iteration records how far the random walk moved (the jump
//! distance, a Mahalanobis distance in whitened coordinates) next to the
//! bootstrapped MLFriends reference radius of the live points. Their ratio
//! summarises whether walks travel beyond the typical live-point spacing.
//!
//! The crate only needs `alloc`; IO, file formats and the command line live
//! in the companion `rjd` crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod engine;
mod error;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod sampler;
pub mod scaling;

pub use diagnostics::{
    decision_rule, insertion_order_ks, rjd_histogram, summarize, DiagnosticSummary,
    InsertionOrderTest, Recommendation, RjdHistogram, Verdict,
};
pub use engine::{
    insertion_rank, logz_uncertainty, run, run_with_sampler, IterationRecord, RunConfig, RunResult,
};
pub use error::{Error, Result};
pub use geometry::{
    bootstrap_radius, build_whitened_space, compute_reference_radius, mahalanobis_distance,
    single_linkage_clusters, ClusterAssignment, MLFriendsRadius, ReferenceGeometry, WhitenedSpace,
};
pub use problem::{evaluate, ProblemDefinition, UnitPoint};
pub use rng::{sample_unit_cube, stream_rng, Stream};
pub use sampler::{random_walk, slice_step, ConstrainedSampler, SliceWalker, WalkResult};
