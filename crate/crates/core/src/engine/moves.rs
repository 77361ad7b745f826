//! Hosting bookkeeping and the strategy-dispatch for migrations, shared by
//! the timing and emulation loops.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

use crate::failure::Prediction;
use crate::model::{
    Agent, Cluster, CoreId, CoreStatus, DependencyGraph, SubJobId, VcoreId, VirtualCore,
};
use crate::strategy::{
    agent_migrate, core_migrate, negotiate, MigrationOutcome, MigrationPlan, Mover,
    NegotiationCtx, Pacing, StrategyError, StrategyKind,
};
use crate::Millis;

/// Draws the core a fault (or false alarm) strikes: uniform over the alive
/// cores currently hosting sub-jobs. Idle-core failures never perturb the
/// tracked job, so they stay outside the accounting.
pub(crate) fn resolve_target(
    hosting: &BTreeMap<SubJobId, CoreId>,
    cluster: &Cluster,
    rng: &mut ChaCha8Rng,
) -> Option<CoreId> {
    let candidates: Vec<CoreId> = hosting
        .values()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|c| cluster.status(*c) == CoreStatus::Alive)
        .collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.gen_range(0..candidates.len())])
    }
}

/// Sub-jobs hosted on `core`, ascending by id.
pub(crate) fn hosted_on(hosting: &BTreeMap<SubJobId, CoreId>, core: CoreId) -> Vec<SubJobId> {
    hosting
        .iter()
        .filter(|(_, c)| **c == core)
        .map(|(s, _)| *s)
        .collect()
}

/// Everything a migration dispatch needs to see, borrowed from the run loop.
pub(crate) struct MigrationCall<'a> {
    pub strategy: StrategyKind,
    pub tie_break: Mover,
    pub scenario_z: u32,
    pub graph: &'a DependencyGraph,
    pub agents: &'a [Agent],
    pub hosting: &'a BTreeMap<SubJobId, CoreId>,
    pub cluster: &'a Cluster,
    pub agent_pacing: Pacing,
    pub core_pacing: Pacing,
}

/// Runs the configured proactive strategy's migration for one sub-job on the
/// predicted core: the agent moves, the virtual core moves, or the two
/// negotiate.
pub(crate) fn migrate_subjob(
    call: &MigrationCall<'_>,
    subjob: SubJobId,
    prediction: &Prediction,
    now_ms: Millis,
) -> Result<MigrationOutcome, StrategyError> {
    let sj = call.graph.get(subjob).expect("sub-job from this graph");
    let agent = &call.agents[subjob.0 as usize];
    debug_assert_eq!(agent.payload, subjob, "agents indexed by sub-job id");
    let vcore = VirtualCore {
        id: VcoreId(call.hosting[&subjob].0),
        mapped_core: call.hosting[&subjob],
        hosted: Some(subjob),
    };
    match call.strategy {
        StrategyKind::Agent => {
            agent_migrate(agent, sj, prediction, call.cluster, now_ms, call.agent_pacing)
        }
        StrategyKind::Core => {
            core_migrate(&vcore, sj, prediction, call.cluster, now_ms, call.core_pacing)
        }
        StrategyKind::Hybrid => {
            let ctx = NegotiationCtx {
                agent,
                vcore: &vcore,
                subjob: sj,
                scenario_z: call.scenario_z,
                cluster: call.cluster,
                tie_break: call.tie_break,
                agent_pacing: call.agent_pacing,
                core_pacing: call.core_pacing,
            };
            negotiate(&ctx, prediction, now_ms).map(|(outcome, _rule)| outcome)
        }
        other => unreachable!("{other:?} never migrates"),
    }
}

/// Commits a migration: the hosting map, the moved agent's location, and the
/// notified peers' location caches.
pub(crate) fn apply_move(
    agents: &mut [Agent],
    hosting: &mut BTreeMap<SubJobId, CoreId>,
    plan: &MigrationPlan,
) {
    hosting.insert(plan.subjob, plan.to);
    agents[plan.subjob.0 as usize].location = plan.to;
    for peer in &plan.notified {
        agents[peer.0 as usize]
            .known_dependencies
            .insert(plan.subjob, plan.to);
    }
}
