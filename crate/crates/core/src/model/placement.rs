//! Placing sub-jobs onto the cluster, in the two hosting models the
//! proactive strategies work with.
//!
//! *Agents* wrap one sub-job each and can walk to any core, carrying a cache
//! of where their dependency peers live. *Virtual cores* are bound 1:1 to
//! physical cores; migrating one re-binds all of its dependencies in a single
//! step. Both placements start identically: sub-job `k` goes to the `k`-th
//! alive core in ID order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    AgentId, Cluster, CoreId, CoreStatus, DependencyGraph, ModelError, SubJobId, VcoreId,
};

/// A mobile process hosting exactly one sub-job.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    /// The sub-job this agent executes. A sub-job is hosted by at most one
    /// agent at a time.
    pub payload: SubJobId,
    pub location: CoreId,
    /// Last known location of every dependency peer (suppliers and
    /// consumers). Updated by migration notifications.
    pub known_dependencies: BTreeMap<SubJobId, CoreId>,
}

/// A virtual core bound to one physical core, hosting at most one sub-job.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct VirtualCore {
    pub id: VcoreId,
    pub mapped_core: CoreId,
    pub hosted: Option<SubJobId>,
}

/// Wraps every sub-job in an agent and spreads the agents over alive cores in
/// ID order. Fails if fewer alive cores than sub-jobs exist.
pub fn place_on_agents(g: &DependencyGraph, cluster: &Cluster) -> Result<Vec<Agent>, ModelError> {
    let slots = alive_slots(cluster, g.len())?;
    let locations: BTreeMap<SubJobId, CoreId> = g
        .nodes()
        .zip(slots.iter().copied())
        .map(|(sj, core)| (sj.id, core))
        .collect();
    Ok(g.nodes()
        .enumerate()
        .map(|(i, sj)| Agent {
            id: AgentId(i as u32),
            payload: sj.id,
            location: locations[&sj.id],
            known_dependencies: sj
                .inputs
                .iter()
                .chain(&sj.outputs)
                .map(|peer| (*peer, locations[peer]))
                .collect(),
        })
        .collect())
}

/// Builds one virtual core per physical core and hosts sub-job `k` on the
/// virtual core of the `k`-th alive core. Returns the virtual cores plus the
/// sub-job placement map.
pub fn place_on_vcores(
    g: &DependencyGraph,
    cluster: &Cluster,
) -> Result<(Vec<VirtualCore>, BTreeMap<SubJobId, VcoreId>), ModelError> {
    let slots = alive_slots(cluster, g.len())?;
    let mut vcores: Vec<VirtualCore> = cluster
        .cores()
        .iter()
        .map(|c| VirtualCore {
            id: VcoreId(c.id.0),
            mapped_core: c.id,
            hosted: None,
        })
        .collect();
    let mut placement = BTreeMap::new();
    for (sj, core) in g.nodes().zip(slots) {
        vcores[core.0 as usize].hosted = Some(sj.id);
        placement.insert(sj.id, VcoreId(core.0));
    }
    Ok((vcores, placement))
}

fn alive_slots(cluster: &Cluster, needed: usize) -> Result<Vec<CoreId>, ModelError> {
    let alive = cluster.alive();
    if alive.len() < needed {
        return Err(ModelError::InsufficientCores {
            needed,
            available: alive.len(),
        });
    }
    Ok(alive[..needed].to_vec())
}

/// Checks the hosting invariants shared by both placements: no sub-job hosted
/// twice, and nothing hosted on a non-alive core.
pub fn validate_hosting(
    cluster: &Cluster,
    hosted: impl Iterator<Item = (SubJobId, CoreId)>,
) -> Result<(), ModelError> {
    let mut seen = BTreeMap::new();
    for (sj, core) in hosted {
        if let Some(prev) = seen.insert(sj, core) {
            return Err(ModelError::InconsistentGraph(format!(
                "{sj} hosted on both {prev} and {core}"
            )));
        }
        if cluster.status(core) == CoreStatus::Failed {
            return Err(ModelError::InconsistentGraph(format!(
                "{sj} hosted on failed core {core}"
            )));
        }
    }
    Ok(())
}
