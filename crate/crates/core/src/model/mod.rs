//! Static structure of a compute job and the cluster it runs on.
//!
//! A [`JobSpec`] describes *what* to compute (workload kind, data volume,
//! fan-out shape); [`decompose_job`](graph::decompose_job) expands it into a
//! [`DependencyGraph`](graph::DependencyGraph) of [`SubJob`]s. The cluster
//! side is a [`Cluster`](topology::Cluster) of [`ComputeCore`](topology::ComputeCore)s
//! with ring / grid / complete adjacency. Placement maps sub-jobs onto either
//! mobile [`Agent`](placement::Agent)s or core-bound
//! [`VirtualCore`](placement::VirtualCore)s — the two hosting models the
//! proactive strategies migrate.
//!
//! Everything here is pure data: nothing mutates outside a single simulation
//! run, and all collections iterate in deterministic (ID) order.

mod graph;
mod placement;
mod topology;

pub use graph::{decompose_job, dependency_count, scenario_dependency_count, DependencyGraph};
pub use placement::{place_on_agents, place_on_vcores, validate_hosting, Agent, VirtualCore};
pub use topology::{adjacent_alive, Cluster, ComputeCore, CoreStatus, TopologySpec};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::workloads::{PatternSource, SequenceSource};

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(
            Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Identifies one sub-job within a decomposed job.
    SubJobId,
    "s"
);
id_type!(
    /// Identifies one physical compute core in the cluster.
    CoreId,
    "c"
);
id_type!(
    /// Identifies a mobile agent hosting exactly one sub-job.
    AgentId,
    "a"
);
id_type!(
    /// Identifies a virtual core bound 1:1 to a physical core.
    VcoreId,
    "v"
);

/// The two emulated computations a job can run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadKind {
    /// Parallel integer summation: leaves fold local slices, interiors and
    /// the root combine partial sums.
    ReductionSum,
    /// Exact multi-pattern search over genome sequences: searcher leaves scan
    /// chromosome shards, one combining node merges hit lists.
    GenomeSearch,
}

/// Role of a sub-job inside its dependency graph.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    /// Reduction leaf: folds its local data slice into one partial sum.
    LeafReduce,
    /// Reduction interior: sums the partial results of one leaf group.
    InteriorReduce,
    /// Reduction root: sums the interior results into the final value.
    RootReduce,
    /// Genome searcher: scans its chromosome shard for pattern hits.
    Search,
    /// Genome combiner: merges searcher hit lists into the global result.
    Combine,
}

/// One unit of placeable work inside a decomposed job.
///
/// Sub-jobs are static descriptions; live partial results in emulation mode
/// are tracked by the engine, keyed by [`SubJobId`], and move together with
/// the sub-job when it migrates.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SubJob {
    pub id: SubJobId,
    pub op: OpKind,
    /// Data volume held by this sub-job (the `S_d` transferred on migration).
    pub data_size_kb: u64,
    /// Process image size (the `S_p` consulted during hybrid negotiation).
    pub process_size_kb: u64,
    /// Sub-jobs whose results this one consumes (`d_i` suppliers).
    pub inputs: Vec<SubJobId>,
    /// Sub-jobs that consume this one's result (`d_o` consumers).
    pub outputs: Vec<SubJobId>,
}

/// Declarative description of a job before decomposition.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub kind: WorkloadKind,
    /// Total data volume of the job in KB, split across leaves.
    pub total_data_kb: u64,
    /// Fan-out widths: one entry per leaf group. Reduction builds one
    /// interior node per group plus a root; genome search allows exactly one
    /// group (searchers feeding the combiner).
    pub fan_widths: Vec<u32>,
    /// Total process image size in KB; defaults to `total_data_kb`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_size_kb: Option<u64>,
    /// Pattern dictionary for genome search jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patterns: Option<PatternSource>,
    /// Sequence data for genome search jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequences: Option<SequenceSource>,
}

/// Errors raised while building model structures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid job spec: {0}")]
    InvalidJobSpec(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("dependency graph is inconsistent: {0}")]
    InconsistentGraph(String),
    #[error("not enough alive cores: need {needed}, have {available}")]
    InsufficientCores { needed: usize, available: usize },
}
