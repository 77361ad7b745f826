//! Deterministic discrete-event simulation of fault tolerance strategies for
//! multi-agent compute jobs.
//!
//! The crate models a job decomposed into dependent sub-jobs placed on a
//! cluster of compute cores, injects node failures on configurable schedules,
//! and plays out one of seven recovery strategies:
//!
//! * three proactive strategies that act on failure *predictions* — per
//!   sub-job agent migration, virtual-core migration, and a hybrid that
//!   negotiates between the two per prediction;
//! * three reactive checkpointing baselines (central single-node,
//!   central multi-node, decentralised) that roll back to the last snapshot;
//! * cold restart, which loses all progress on every failure.
//!
//! Runs are driven by [`engine::run_scenario`] from a declarative
//! [`engine::Scenario`]; every run is a pure function of the scenario and its
//! seed, so traces replay bit-identically. Two execution modes share the same
//! event loop: `timing` charges strategy costs from a calibrated
//! [`strategy::CostModel`], while `emulation` additionally executes real
//! sub-job computation (parallel integer reduction, genome pattern search)
//! in chunks whose partial state migrates live between cores.

pub mod engine;
pub mod failure;
pub mod model;
pub mod presets;
pub mod report;
pub mod strategy;
pub mod workloads;

/// Simulation timestamps and durations, in integer milliseconds.
pub type Millis = u64;

/// Milliseconds per second, for the second-granularity config surface.
pub const MS_PER_SEC: u64 = 1_000;

/// Convert whole seconds to [`Millis`].
pub const fn sec(s: u64) -> Millis {
    s * MS_PER_SEC
}
