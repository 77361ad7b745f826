//! Proactive migration: the agent route, the core route, and the hybrid
//! negotiation that picks between them.

use serde::{Deserialize, Serialize};

use crate::engine::EventKind;
use crate::failure::Prediction;
use crate::model::{
    adjacent_alive, Agent, Cluster, CoreId, CoreStatus, SubJob, SubJobId, VirtualCore,
};
use crate::strategy::{
    hybrid_decide_explained, MicroCosts, Mover, RuleApplied, StrategyError,
};
use crate::Millis;

/// The resolved decision of one migration.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct MigrationPlan {
    pub mover: Mover,
    pub from: CoreId,
    pub to: CoreId,
    pub subjob: SubJobId,
    /// Dependency peers notified of the move (agent route; the core route
    /// re-binds everything in one step and notifies nobody individually).
    pub notified: Vec<SubJobId>,
}

/// How migration events are spaced in time.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Pacing {
    /// Timing mode: events sit on the nominal timeline at the decision
    /// instant; the whole move is charged as this calibrated reinstate cost.
    Charged { reinstate_ms: Millis },
    /// Emulation mode: each step takes its micro-cost duration.
    Emulated(MicroCosts),
}

/// A planned migration, its trace events, and its timing.
#[derive(Clone, PartialEq, Debug)]
pub struct MigrationOutcome {
    pub plan: MigrationPlan,
    /// Events in causal order, timestamped per the pacing.
    pub events: Vec<(Millis, EventKind)>,
    pub reinstate_ms: Millis,
    /// When the moved sub-job is ready to resume on the target core.
    pub completed_at_ms: Millis,
}

/// Probes every topological neighbour's predictor and reports whether that
/// neighbour is an acceptable target (reachable and not predicted to fail).
/// The probes come first in the trace: the decision they feed follows them.
fn probe_neighbours(cluster: &Cluster, from: CoreId, at_ms: Millis) -> Vec<(Millis, EventKind)> {
    cluster
        .get(from)
        .map(|c| {
            c.neighbors
                .iter()
                .map(|n| {
                    (
                        at_ms,
                        EventKind::Probe {
                            prober: from,
                            probed: *n,
                            alive: cluster.status(*n) == CoreStatus::Alive,
                        },
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

/// The lowest-id adjacent core that is alive and not predicted to fail.
fn select_target(cluster: &Cluster, from: CoreId) -> Result<CoreId, StrategyError> {
    adjacent_alive(cluster, from)
        .first()
        .copied()
        .ok_or(StrategyError::NoViableTarget { core: from })
}

/// Moves a sub-job off its predicted-to-fail core the agent way: the agent
/// probes its neighbourhood, creates a replacement process on the chosen
/// core, carries the data over, notifies every dependency peer, terminates
/// the old process, and then re-establishes each of its `Z = d_i + d_o`
/// links one by one.
pub fn agent_migrate(
    agent: &Agent,
    subjob: &SubJob,
    prediction: &Prediction,
    cluster: &Cluster,
    now_ms: Millis,
    pacing: Pacing,
) -> Result<MigrationOutcome, StrategyError> {
    assert_eq!(
        prediction.core, agent.location,
        "prediction must target the agent's core"
    );
    assert_eq!(agent.payload, subjob.id, "agent carries this sub-job");
    let from = agent.location;
    let to = select_target(cluster, from)?;
    let peers: Vec<SubJobId> = agent.known_dependencies.keys().copied().collect();
    let z = peers.len() as u32;

    let (t_created, t_transferred, t_terminated, per_link, reinstate_ms) = match pacing {
        Pacing::Charged { reinstate_ms } => (now_ms, now_ms, now_ms, 0, reinstate_ms),
        Pacing::Emulated(m) => {
            let t_created = now_ms + m.agent_create_ms;
            let t_transferred = t_created + m.agent_transfer_ms;
            let t_terminated = t_transferred + m.agent_terminate_ms;
            (t_created, t_transferred, t_terminated, m.agent_per_link_ms, m.agent_total_ms(z))
        }
    };
    let completed_at_ms = match pacing {
        Pacing::Charged { .. } => now_ms,
        Pacing::Emulated(_) => t_terminated + per_link * z as u64,
    };

    let mut events = probe_neighbours(cluster, from, now_ms);
    events.push((
        now_ms,
        EventKind::MigrationStarted {
            mover: Mover::Agent,
            subjob: subjob.id,
            from,
            to,
        },
    ));
    events.push((t_created, EventKind::ProcessCreated { subjob: subjob.id, core: to }));
    events.push((
        t_transferred,
        EventKind::DataTransferred {
            subjob: subjob.id,
            from,
            to,
            kb: subjob.data_size_kb,
        },
    ));
    for peer in &peers {
        events.push((
            t_transferred,
            EventKind::DependentNotified {
                dependent: *peer,
                subjob: subjob.id,
                new_location: to,
            },
        ));
    }
    events.push((t_terminated, EventKind::ProcessTerminated { subjob: subjob.id, core: from }));
    for (k, peer) in peers.iter().enumerate() {
        events.push((
            t_terminated + per_link * (k as u64 + 1),
            EventKind::DependencyReestablished {
                subjob: subjob.id,
                peer: *peer,
            },
        ));
    }
    events.push((
        completed_at_ms,
        EventKind::MigrationCompleted {
            mover: Mover::Agent,
            subjob: subjob.id,
            core: to,
            reinstate_ms,
        },
    ));

    Ok(MigrationOutcome {
        plan: MigrationPlan {
            mover: Mover::Agent,
            from,
            to,
            subjob: subjob.id,
            notified: peers,
        },
        events,
        reinstate_ms,
        completed_at_ms,
    })
}

/// Moves a sub-job off its predicted-to-fail core the virtual-core way:
/// after gathering the neighbours' predictor verdicts, a single migrate step
/// carries the sub-job across and all dependencies re-bind automatically.
pub fn core_migrate(
    vcore: &VirtualCore,
    subjob: &SubJob,
    prediction: &Prediction,
    cluster: &Cluster,
    now_ms: Millis,
    pacing: Pacing,
) -> Result<MigrationOutcome, StrategyError> {
    assert_eq!(
        prediction.core, vcore.mapped_core,
        "prediction must target the virtual core's physical core"
    );
    assert_eq!(vcore.hosted, Some(subjob.id), "virtual core hosts this sub-job");
    let from = vcore.mapped_core;
    let to = select_target(cluster, from)?;
    let z = (subjob.inputs.len() + subjob.outputs.len()) as u32;

    let (t_done, reinstate_ms) = match pacing {
        Pacing::Charged { reinstate_ms } => (now_ms, reinstate_ms),
        Pacing::Emulated(m) => (now_ms + m.core_rebind_ms, m.core_rebind_ms),
    };

    let mut events = probe_neighbours(cluster, from, now_ms);
    events.push((
        now_ms,
        EventKind::MigrationStarted {
            mover: Mover::Core,
            subjob: subjob.id,
            from,
            to,
        },
    ));
    events.push((t_done, EventKind::DependencyRebound { subjob: subjob.id, links: z }));
    events.push((
        t_done,
        EventKind::MigrationCompleted {
            mover: Mover::Core,
            subjob: subjob.id,
            core: to,
            reinstate_ms,
        },
    ));

    Ok(MigrationOutcome {
        plan: MigrationPlan {
            mover: Mover::Core,
            from,
            to,
            subjob: subjob.id,
            notified: Vec::new(),
        },
        events,
        reinstate_ms,
        completed_at_ms: t_done,
    })
}

/// Everything a hybrid negotiation needs to pick and execute one mover.
pub struct NegotiationCtx<'a> {
    pub agent: &'a Agent,
    pub vcore: &'a VirtualCore,
    pub subjob: &'a SubJob,
    /// The job-level dependency count (the worst-case links a move must
    /// re-establish), as configured for the scenario.
    pub scenario_z: u32,
    pub cluster: &'a Cluster,
    pub tie_break: Mover,
    pub agent_pacing: Pacing,
    pub core_pacing: Pacing,
}

/// Agent and virtual core negotiate who moves the sub-job: the decision
/// rules pick exactly one mover, the other stands down, and the trace shows
/// one negotiation event before any movement.
///
/// The decision consumes the job-level `Z` and the sub-job's own data and
/// process sizes.
pub fn negotiate(
    ctx: &NegotiationCtx<'_>,
    prediction: &Prediction,
    now_ms: Millis,
) -> Result<(MigrationOutcome, RuleApplied), StrategyError> {
    assert_eq!(
        ctx.agent.location, ctx.vcore.mapped_core,
        "agent must be hosted on the negotiating virtual core"
    );
    let (mover, rule) = hybrid_decide_explained(
        ctx.scenario_z,
        ctx.subjob.data_size_kb,
        ctx.subjob.process_size_kb,
        ctx.tie_break,
    );
    let decided = (
        now_ms,
        EventKind::NegotiationDecided {
            subjob: ctx.subjob.id,
            z: ctx.scenario_z,
            s_d_kb: ctx.subjob.data_size_kb,
            s_p_kb: ctx.subjob.process_size_kb,
            decision: mover,
            rule,
        },
    );
    let mut outcome = match mover {
        Mover::Agent => agent_migrate(
            ctx.agent,
            ctx.subjob,
            prediction,
            ctx.cluster,
            now_ms,
            ctx.agent_pacing,
        )?,
        Mover::Core => core_migrate(
            ctx.vcore,
            ctx.subjob,
            prediction,
            ctx.cluster,
            now_ms,
            ctx.core_pacing,
        )?,
    };
    outcome.events.insert(0, decided);
    Ok((outcome, rule))
}
