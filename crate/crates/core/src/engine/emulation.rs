//! The emulation-mode event loop.
//!
//! Sub-jobs really compute here: reduction leaves fold slices of synthetic
//! integers, genome searchers scan chromosome shards, and interior nodes
//! combine the partial results their inputs deliver. Work is paced onto the
//! simulated clock so a fault-free run's root completes exactly at the base
//! duration, with slack between the leaf and combine tiers absorbing small
//! migration stalls.
//!
//! Unlike timing mode, recovery is causal rather than arithmetic: a rollback
//! restores a deep copy of the sub-job states captured at checkpoint time
//! and the discarded work is actually re-executed, so a run's total is
//! whatever instant the root really fires at. Checkpoints snapshot live
//! state on the wall-clock grid — a run already delayed by recovery
//! checkpoints whatever progress it truly has, which can make later faults
//! more expensive than the calibrated tables assume. Regardless of how many
//! faults disturb the run, a completed root must equal the fault-free
//! result; that equality is the mode's core invariant.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::moves::{apply_move, hosted_on, migrate_subjob, resolve_target, MigrationCall};
use super::{
    EngineError, EventKind, FaultBreakdown, RootResult, RunStatus, Setup, Trace, TraceBuilder,
};
use crate::failure::{Prediction, PredictionOutcome};
use crate::model::{validate_hosting, CoreStatus, OpKind, SubJobId, WorkloadKind};
use crate::strategy::{
    checkpoint_create, checkpoint_rollback, cold_restart_recover, ChargeKind, CheckpointRecord,
    FaultCharge, Pacing, SnapshotRef, StrategyError, StrategyKind,
};
use crate::workloads::{
    combine_hits, derive_leaf_slices, fold_slice, materialize_patterns, materialize_sequences,
    search_shard, shard_chromosomes, ChromosomeName, HitRecord, PatternDictionary, SequenceStore,
};
use crate::{sec, Millis};

// Pop order at equal instants: scheduler-side disturbances before emitted
// migration events, placement revival, then work. Work chunks run before
// combine fires so a tier boundary shared with a chunk instant sees the
// chunk's delivery.
const PRIO_CHECKPOINT: u8 = 0;
const PRIO_PREDICTION: u8 = 1;
const PRIO_ALARM: u8 = 2;
const PRIO_FAULT: u8 = 3;
const PRIO_EMIT: u8 = 4;
const PRIO_REVIVE: u8 = 5;
const PRIO_CHUNK: u8 = 6;
const PRIO_FIRE: u8 = 7;

/// Fraction of the base duration by which every leaf finishes its chunks.
const LEAF_TIER_NUM: Millis = 17;
const LEAF_TIER_DEN: Millis = 20;
/// Fraction of the base duration at which interior nodes nominally fire.
const INTERIOR_TIER_NUM: Millis = 37;
const INTERIOR_TIER_DEN: Millis = 40;

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct QKey {
    at_ms: Millis,
    prio: u8,
    seq: u64,
}

struct QItem {
    key: QKey,
    task: Task,
}

impl PartialEq for QItem {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for QItem {}
impl PartialOrd for QItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

enum Task {
    Checkpoint,
    Prediction(usize),
    FalseAlarm,
    Fault(usize),
    /// A migration event scheduled at its paced instant.
    Emit(EventKind),
    /// Returns a falsely-accused core to service once its evacuation ends.
    Revive(crate::model::CoreId),
    /// Runs the sub-job's next work chunk (valid while `gen` is current).
    Chunk { subjob: SubJobId, gen: u64 },
    /// Combines a gathered node's inputs (valid while `gen` is current).
    Fire { subjob: SubJobId, gen: u64 },
}

/// One sub-job's running state. Checkpoints deep-copy the whole map.
#[derive(Clone)]
struct NodeRun {
    state: NodeState,
    done: bool,
    /// Wall instant of the last committed progress; the next chunk's redo
    /// pacing starts here.
    anchor_ms: Millis,
}

#[derive(Clone)]
enum NodeState {
    /// A leaf working through its chunks.
    Leaf { next: usize, acc: Partial },
    /// An interior/root node gathering the partials its inputs deliver.
    Gather { got: BTreeMap<SubJobId, Partial> },
}

#[derive(Clone)]
enum Partial {
    Sum(i64),
    Hits(Vec<HitRecord>),
}

impl Partial {
    fn items(&self) -> u64 {
        match self {
            Partial::Sum(_) => 1,
            Partial::Hits(h) => h.len() as u64,
        }
    }
}

/// The immutable work inputs, derived once from the scenario seed and kept
/// outside the snapshots.
enum WorkInputs {
    Reduction {
        slices: BTreeMap<SubJobId, Vec<i64>>,
    },
    Genome {
        store: SequenceStore,
        dict: PatternDictionary,
        shards: BTreeMap<SubJobId, Vec<ChromosomeName>>,
    },
}

/// A leaf's nominal chunk-completion instants (ascending, non-empty).
struct LeafPlan {
    instants: Vec<Millis>,
}

impl LeafPlan {
    fn gap(&self, idx: usize) -> Millis {
        self.instants[idx] - if idx == 0 { 0 } else { self.instants[idx - 1] }
    }

    /// When chunk `idx` completes if work resumed at `anchor_ms`: never
    /// before its nominal instant, and a full redo after any delay.
    fn chunk_done_at(&self, idx: usize, anchor_ms: Millis) -> Millis {
        self.instants[idx].max(anchor_ms + self.gap(idx))
    }
}

pub(crate) fn run(setup: Setup) -> Result<Trace, EngineError> {
    let Setup {
        scenario,
        cost,
        graph,
        mut cluster,
        mut agents,
        mut hosting,
        scenario_z,

        checkpoints_ms,
        ckpt_kind,
        servers,
        mut schedule,
        predicted,
        false_alarms_ms,
        mut targets_rng,
    } = setup;

    let base_ms = sec(scenario.base_duration_s);
    let strategy = scenario.strategy;
    let p = scenario.periodicity_s;
    let lead_ms = scenario.predictor.lead_ms();
    let leaf_tier_ms = base_ms * LEAF_TIER_NUM / LEAF_TIER_DEN;
    let interior_tier_ms = base_ms * INTERIOR_TIER_NUM / INTERIOR_TIER_DEN;

    // Materialize the work inputs and each leaf's chunk plan.
    let work = match job_kind(&scenario) {
        WorkloadKind::ReductionSum => WorkInputs::Reduction {
            slices: derive_leaf_slices(&graph, scenario.seed),
        },
        WorkloadKind::GenomeSearch => {
            let patterns = scenario.job.patterns.as_ref().ok_or_else(|| {
                EngineError::InvalidScenario("genome emulation needs a pattern source".into())
            })?;
            let sequences = scenario.job.sequences.as_ref().ok_or_else(|| {
                EngineError::InvalidScenario("genome emulation needs a sequence source".into())
            })?;
            let store = materialize_sequences(sequences, scenario.seed)?;
            let dict = materialize_patterns(patterns, scenario.seed)?;
            let leaves = graph.leaves();
            let shards = shard_chromosomes(&store, leaves.len());
            WorkInputs::Genome {
                store,
                dict,
                shards: leaves.into_iter().zip(shards).collect(),
            }
        }
    };
    let leaf_plans: BTreeMap<SubJobId, LeafPlan> = graph
        .leaves()
        .into_iter()
        .map(|sj| {
            let chunks = match &work {
                WorkInputs::Reduction { slices } => slices[&sj].len().clamp(1, 4),
                WorkInputs::Genome { shards, .. } => shards[&sj].len().max(1),
            } as Millis;
            let instants = (1..=chunks).map(|k| leaf_tier_ms * k / chunks).collect();
            (sj, LeafPlan { instants })
        })
        .collect();
    let fire_instant = |op: OpKind| -> Millis {
        match op {
            OpKind::InteriorReduce => interior_tier_ms,
            _ => base_ms,
        }
    };

    let mut states = initial_states(&graph);
    // Bumped to invalidate queued work whenever a sub-job's timeline changes
    // (migration, rollback, restart). Lives outside the snapshots.
    let mut gens: BTreeMap<SubJobId, u64> = graph.nodes().map(|sj| (sj.id, 0)).collect();
    let mut snapshots: Vec<BTreeMap<SubJobId, NodeRun>> = Vec::new();
    let mut records: Vec<CheckpointRecord> = Vec::new();

    let mut queue: BinaryHeap<Reverse<QItem>> = BinaryHeap::new();
    let mut qseq: u64 = 0;
    let mut push = |queue: &mut BinaryHeap<Reverse<QItem>>, at: Millis, prio: u8, task: Task| {
        queue.push(Reverse(QItem {
            key: QKey {
                at_ms: at,
                prio,
                seq: qseq,
            },
            task,
        }));
        qseq += 1;
    };

    for c in &checkpoints_ms {
        push(&mut queue, *c, PRIO_CHECKPOINT, Task::Checkpoint);
    }
    for (i, f) in schedule.instants.iter().enumerate() {
        if predicted[i] {
            push(&mut queue, f.at_ms - lead_ms, PRIO_PREDICTION, Task::Prediction(i));
        }
        push(&mut queue, f.at_ms, PRIO_FAULT, Task::Fault(i));
    }
    for t in false_alarms_ms.iter() {
        push(&mut queue, *t, PRIO_ALARM, Task::FalseAlarm);
    }
    for (&sj, plan) in &leaf_plans {
        push(
            &mut queue,
            plan.chunk_done_at(0, 0),
            PRIO_CHUNK,
            Task::Chunk { subjob: sj, gen: 0 },
        );
    }

    let mut trace = TraceBuilder::default();
    let mut breakdowns: Vec<FaultBreakdown> = Vec::new();
    let mut fallthrough = vec![false; schedule.len()];
    let mut doomed = vec![false; schedule.len()];
    let mut ready_at_ms: Millis = 0;
    let mut outcome: Option<(RunStatus, Millis, Option<RootResult>)> = None;

    while let Some(Reverse(item)) = queue.pop() {
        let now = item.key.at_ms;
        match item.task {
            Task::Emit(kind) => {
                trace.push(now, kind);
                continue;
            }
            Task::Revive(core) => {
                if cluster.status(core) == CoreStatus::PredictedFail {
                    cluster.set_status(core, CoreStatus::Alive);
                }
                continue;
            }
            Task::Checkpoint => {
                let kind = ckpt_kind.expect("checkpoints planned imply a checkpointing layer");
                let root = graph.root().expect("decomposed graphs have a single root");
                let out = checkpoint_create(
                    kind,
                    &servers,
                    &cluster,
                    hosting[&root],
                    now,
                    SnapshotRef(snapshots.len() as u32),
                    &cost,
                    p,
                )?;
                trace.push(now, out.event);
                records.push(out.record);
                snapshots.push(states.clone());
            }
            Task::Prediction(i) => {
                let fault_at = schedule.instants[i].at_ms;
                let core = {
                    let slot = &mut schedule.instants[i].core;
                    if slot.is_none() {
                        *slot = resolve_target(&hosting, &cluster, &mut targets_rng);
                    }
                    match *slot {
                        Some(c) => c,
                        None => continue,
                    }
                };
                trace.push(
                    now,
                    EventKind::PredictionIssued {
                        core,
                        fault_at_ms: Some(fault_at),
                        outcome: PredictionOutcome::TruePositive,
                    },
                );
                cluster.set_status(core, CoreStatus::PredictedFail);
                let prediction = Prediction {
                    core,
                    issued_at_ms: now,
                    fault_at_ms: Some(fault_at),
                    outcome: PredictionOutcome::TruePositive,
                };
                match evacuate(
                    &mut queue,
                    &mut push,
                    &mut agents,
                    &mut hosting,
                    &cluster,
                    &graph,
                    &mut states,
                    &mut gens,
                    &leaf_plans,
                    &fire_instant,
                    &scenario,
                    scenario_z,
                    &cost,
                    &prediction,
                    now,
                ) {
                    Ok(Some(window_ms)) => {
                        breakdowns.push(FaultBreakdown {
                            core,
                            predicted: true,
                            charge: FaultCharge {
                                at_ms: now,
                                kind: ChargeKind::Migration,
                                lost_ms: 0,
                                predict_ms: 0,
                                reinstate_ms: window_ms,
                                overhead_ms: 0,
                            },
                        });
                    }
                    Ok(None) => {}
                    Err(StrategyError::NoViableTarget { .. }) => {
                        if scenario.backstop.is_some() {
                            fallthrough[i] = true;
                        } else {
                            doomed[i] = true;
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Task::FalseAlarm => {
                let core = match resolve_target(&hosting, &cluster, &mut targets_rng) {
                    Some(c) => c,
                    None => continue,
                };
                trace.push(
                    now,
                    EventKind::PredictionIssued {
                        core,
                        fault_at_ms: None,
                        outcome: PredictionOutcome::FalseAlarm,
                    },
                );
                cluster.set_status(core, CoreStatus::PredictedFail);
                let prediction = Prediction {
                    core,
                    issued_at_ms: now,
                    fault_at_ms: None,
                    outcome: PredictionOutcome::FalseAlarm,
                };
                match evacuate(
                    &mut queue,
                    &mut push,
                    &mut agents,
                    &mut hosting,
                    &cluster,
                    &graph,
                    &mut states,
                    &mut gens,
                    &leaf_plans,
                    &fire_instant,
                    &scenario,
                    scenario_z,
                    &cost,
                    &prediction,
                    now,
                ) {
                    Ok(Some(window_ms)) => {
                        breakdowns.push(FaultBreakdown {
                            core,
                            predicted: false,
                            charge: FaultCharge {
                                at_ms: now,
                                kind: ChargeKind::FalseAlarm,
                                lost_ms: 0,
                                predict_ms: 0,
                                reinstate_ms: window_ms,
                                overhead_ms: 0,
                            },
                        });
                        push(&mut queue, now + window_ms, PRIO_REVIVE, Task::Revive(core));
                    }
                    Ok(None) => {
                        cluster.set_status(core, CoreStatus::Alive);
                    }
                    Err(StrategyError::NoViableTarget { .. }) => {
                        cluster.set_status(core, CoreStatus::Alive);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Task::Fault(i) => {
                let core = {
                    let slot = &mut schedule.instants[i].core;
                    if slot.is_none() {
                        *slot = resolve_target(&hosting, &cluster, &mut targets_rng);
                    }
                    match *slot {
                        Some(c) => c,
                        None => continue,
                    }
                };
                trace.push(now, EventKind::FaultInjected { core });
                cluster.set_status(core, CoreStatus::Failed);

                if predicted[i] && !fallthrough[i] && !doomed[i] {
                    debug_assert!(
                        hosted_on(&hosting, core).is_empty(),
                        "sub-jobs must have left a predicted core before impact"
                    );
                } else if doomed[i]
                    || (strategy.is_proactive() && !predicted[i] && scenario.backstop.is_none())
                {
                    let reason = if doomed[i] {
                        "prediction found no viable migration target"
                    } else {
                        "unpredicted fault with no checkpointing backstop"
                    };
                    trace.push(now, EventKind::JobFailed { reason: reason.into() });
                    breakdowns.push(FaultBreakdown {
                        core,
                        predicted: predicted[i],
                        charge: FaultCharge {
                            at_ms: now,
                            kind: ChargeKind::Fatal,
                            lost_ms: 0,
                            predict_ms: 0,
                            reinstate_ms: 0,
                            overhead_ms: 0,
                        },
                    });
                    outcome = Some((RunStatus::Failed, now, None));
                } else if strategy == StrategyKind::ColdRestart {
                    let out = cold_restart_recover(ready_at_ms, now, &cost);
                    for kind in out.events {
                        trace.push(now, kind);
                    }
                    ready_at_ms = out.next_ready_at_ms;
                    states = initial_states(&graph);
                    resume_all(
                        &mut queue,
                        &mut push,
                        &graph,
                        &mut states,
                        &mut gens,
                        &leaf_plans,
                        &fire_instant,
                        ready_at_ms,
                    );
                    breakdowns.push(FaultBreakdown {
                        core,
                        predicted: false,
                        charge: FaultCharge {
                            at_ms: now,
                            kind: ChargeKind::Restart,
                            lost_ms: out.lost_ms,
                            predict_ms: 0,
                            reinstate_ms: out.reinstate_ms,
                            overhead_ms: 0,
                        },
                    });
                    cluster.set_status(core, CoreStatus::Alive);
                } else {
                    let kind = if strategy.is_checkpointing() {
                        strategy
                    } else {
                        scenario.backstop.expect("proactive fault routed to backstop")
                    };
                    let out = checkpoint_rollback(kind, &records, now, &cost, p)?;
                    for k in out.events {
                        trace.push(now, k);
                    }
                    states = match out.snapshot {
                        Some(s) => snapshots[s.0 as usize].clone(),
                        None => initial_states(&graph),
                    };
                    resume_all(
                        &mut queue,
                        &mut push,
                        &graph,
                        &mut states,
                        &mut gens,
                        &leaf_plans,
                        &fire_instant,
                        now + out.reinstate_ms,
                    );
                    breakdowns.push(FaultBreakdown {
                        core,
                        predicted: predicted[i],
                        charge: FaultCharge {
                            at_ms: now,
                            kind: if strategy.is_checkpointing() {
                                ChargeKind::Rollback
                            } else {
                                ChargeKind::BackstopRollback
                            },
                            lost_ms: out.lost_ms,
                            predict_ms: 0,
                            reinstate_ms: out.reinstate_ms,
                            overhead_ms: 0,
                        },
                    });
                    cluster.set_status(core, CoreStatus::Alive);
                }
            }
            Task::Chunk { subjob, gen } => {
                if gens[&subjob] != gen || states[&subjob].done {
                    continue;
                }
                let core = hosting[&subjob];
                debug_assert_ne!(
                    cluster.status(core),
                    CoreStatus::Failed,
                    "work must never run on a failed core"
                );
                let plan = &leaf_plans[&subjob];
                let total = plan.instants.len();
                let run = states.get_mut(&subjob).expect("leaf state exists");
                let NodeState::Leaf { next, acc } = &mut run.state else {
                    unreachable!("chunk tasks only target leaves");
                };
                let idx = *next;
                match &work {
                    WorkInputs::Reduction { slices } => {
                        let slice = &slices[&subjob];
                        let start = idx * slice.len() / total;
                        let end = (idx + 1) * slice.len() / total;
                        let Partial::Sum(s) = acc else {
                            unreachable!("reduction leaves accumulate sums");
                        };
                        *s += fold_slice(&slice[start..end]);
                    }
                    WorkInputs::Genome { store, dict, shards } => {
                        let Partial::Hits(h) = acc else {
                            unreachable!("searchers accumulate hits");
                        };
                        if let Some(name) = shards[&subjob].get(idx) {
                            h.extend(search_shard(store, std::slice::from_ref(name), dict));
                        }
                    }
                }
                *next += 1;
                run.anchor_ms = now;
                trace.push(
                    now,
                    EventKind::ChunkExecuted {
                        subjob,
                        core,
                        chunk: (idx + 1) as u32,
                        of: total as u32,
                    },
                );
                if *next == total {
                    run.done = true;
                    trace.push(now, EventKind::SubJobCompleted { subjob, core });
                    let partial = match &run.state {
                        NodeState::Leaf { acc, .. } => acc.clone(),
                        NodeState::Gather { .. } => unreachable!(),
                    };
                    deliver(
                        &mut queue,
                        &mut push,
                        &mut trace,
                        &graph,
                        &mut states,
                        &gens,
                        &fire_instant,
                        subjob,
                        partial,
                        now,
                    );
                } else {
                    push(
                        &mut queue,
                        plan.chunk_done_at(idx + 1, now),
                        PRIO_CHUNK,
                        Task::Chunk { subjob, gen },
                    );
                }
            }
            Task::Fire { subjob, gen } => {
                if gens[&subjob] != gen || states[&subjob].done {
                    continue;
                }
                let core = hosting[&subjob];
                debug_assert_ne!(
                    cluster.status(core),
                    CoreStatus::Failed,
                    "work must never run on a failed core"
                );
                let sj = graph.get(subjob).expect("fired sub-job exists");
                let combined = {
                    let NodeState::Gather { got } = &states[&subjob].state else {
                        unreachable!("fire tasks only target gathering nodes");
                    };
                    debug_assert_eq!(got.len(), sj.inputs.len(), "fire needs all inputs");
                    match got.values().next() {
                        Some(Partial::Sum(_)) => Partial::Sum(
                            sj.inputs
                                .iter()
                                .map(|i| match &got[i] {
                                    Partial::Sum(s) => *s,
                                    Partial::Hits(_) => unreachable!("mixed partials"),
                                })
                                .sum(),
                        ),
                        Some(Partial::Hits(_)) => Partial::Hits(combine_hits(
                            sj.inputs
                                .iter()
                                .map(|i| match &got[i] {
                                    Partial::Hits(h) => h.clone(),
                                    Partial::Sum(_) => unreachable!("mixed partials"),
                                })
                                .collect(),
                        )),
                        None => unreachable!("gathering nodes have inputs"),
                    }
                };
                let run = states.get_mut(&subjob).expect("fired state exists");
                run.done = true;
                run.anchor_ms = now;
                trace.push(now, EventKind::SubJobCompleted { subjob, core });
                if sj.outputs.is_empty() {
                    trace.push(now, EventKind::JobCompleted);
                    let result = match combined {
                        Partial::Sum(sum) => RootResult::ReductionSum { sum },
                        Partial::Hits(hits) => RootResult::GenomeSearch { hits },
                    };
                    outcome = Some((RunStatus::Completed, now, Some(result)));
                } else {
                    deliver(
                        &mut queue,
                        &mut push,
                        &mut trace,
                        &graph,
                        &mut states,
                        &gens,
                        &fire_instant,
                        subjob,
                        combined,
                        now,
                    );
                }
            }
        }
        if outcome.is_some() {
            break;
        }
        validate_hosting(&cluster, hosting.iter().map(|(s, c)| (*s, *c)))?;
    }

    let (status, total_ms, root_result) = outcome.ok_or_else(|| {
        EngineError::Invariant("emulation drained its queue without finishing the job".into())
    })?;
    Ok(Trace {
        events: trace.finish(),
        status,
        total_ms,
        breakdowns,
        root_result,
    })
}

fn job_kind(scenario: &super::Scenario) -> WorkloadKind {
    scenario.job.kind
}

/// Fresh start-of-run states: leaves at chunk zero, gathering nodes empty.
fn initial_states(graph: &crate::model::DependencyGraph) -> BTreeMap<SubJobId, NodeRun> {
    graph
        .nodes()
        .map(|sj| {
            let state = if sj.inputs.is_empty() {
                NodeState::Leaf {
                    next: 0,
                    acc: match sj.op {
                        OpKind::Search => Partial::Hits(Vec::new()),
                        _ => Partial::Sum(0),
                    },
                }
            } else {
                NodeState::Gather { got: BTreeMap::new() }
            };
            (
                sj.id,
                NodeRun {
                    state,
                    done: false,
                    anchor_ms: 0,
                },
            )
        })
        .collect()
}

/// Hands a completed sub-job's partial to its consumer and fires the
/// consumer once its gather is complete.
#[allow(clippy::too_many_arguments)]
fn deliver(
    queue: &mut BinaryHeap<Reverse<QItem>>,
    push: &mut impl FnMut(&mut BinaryHeap<Reverse<QItem>>, Millis, u8, Task),
    trace: &mut TraceBuilder,
    graph: &crate::model::DependencyGraph,
    states: &mut BTreeMap<SubJobId, NodeRun>,
    gens: &BTreeMap<SubJobId, u64>,
    fire_instant: &impl Fn(OpKind) -> Millis,
    from: SubJobId,
    partial: Partial,
    now: Millis,
) {
    let sj = graph.get(from).expect("delivering sub-job exists");
    for &to in &sj.outputs {
        trace.push(
            now,
            EventKind::PartialResultSent {
                from,
                to,
                items: partial.items(),
            },
        );
        let consumer = states.get_mut(&to).expect("consumer state exists");
        let NodeState::Gather { got } = &mut consumer.state else {
            unreachable!("partials flow to gathering nodes");
        };
        got.insert(from, partial.clone());
        if got.len() == graph.get(to).expect("consumer exists").inputs.len() {
            let at = fire_instant(graph.get(to).unwrap().op).max(now);
            push(queue, at, PRIO_FIRE, Task::Fire { subjob: to, gen: gens[&to] });
        }
    }
}

/// Re-queues every unfinished sub-job after a rollback or restart: work
/// resumes no earlier than `resume_ms`, and each leaf redoes its next chunk
/// in full.
#[allow(clippy::too_many_arguments)]
fn resume_all(
    queue: &mut BinaryHeap<Reverse<QItem>>,
    push: &mut impl FnMut(&mut BinaryHeap<Reverse<QItem>>, Millis, u8, Task),
    graph: &crate::model::DependencyGraph,
    states: &mut BTreeMap<SubJobId, NodeRun>,
    gens: &mut BTreeMap<SubJobId, u64>,
    leaf_plans: &BTreeMap<SubJobId, LeafPlan>,
    fire_instant: &impl Fn(OpKind) -> Millis,
    resume_ms: Millis,
) {
    for sj in graph.nodes() {
        let gen = {
            let g = gens.get_mut(&sj.id).expect("every sub-job has a gen");
            *g += 1;
            *g
        };
        let run = states.get_mut(&sj.id).expect("every sub-job has state");
        run.anchor_ms = resume_ms;
        if run.done {
            continue;
        }
        match &run.state {
            NodeState::Leaf { next, .. } => {
                let plan = &leaf_plans[&sj.id];
                push(
                    queue,
                    plan.chunk_done_at(*next, resume_ms),
                    PRIO_CHUNK,
                    Task::Chunk { subjob: sj.id, gen },
                );
            }
            NodeState::Gather { got } => {
                if got.len() == sj.inputs.len() {
                    push(
                        queue,
                        fire_instant(sj.op).max(resume_ms),
                        PRIO_FIRE,
                        Task::Fire { subjob: sj.id, gen },
                    );
                }
            }
        }
    }
}

/// Migrates every sub-job off the flagged core with emulated pacing: the
/// step events land on the queue at their paced instants, placement commits
/// immediately, and each moved sub-job resumes work once its own migration
/// window closes. Returns the widest window, or `None` when the core hosted
/// nothing.
#[allow(clippy::too_many_arguments)]
fn evacuate(
    queue: &mut BinaryHeap<Reverse<QItem>>,
    push: &mut impl FnMut(&mut BinaryHeap<Reverse<QItem>>, Millis, u8, Task),
    agents: &mut [crate::model::Agent],
    hosting: &mut BTreeMap<SubJobId, crate::model::CoreId>,
    cluster: &crate::model::Cluster,
    graph: &crate::model::DependencyGraph,
    states: &mut BTreeMap<SubJobId, NodeRun>,
    gens: &mut BTreeMap<SubJobId, u64>,
    leaf_plans: &BTreeMap<SubJobId, LeafPlan>,
    fire_instant: &impl Fn(OpKind) -> Millis,
    scenario: &super::Scenario,
    scenario_z: u32,
    cost: &crate::strategy::CostModel,
    prediction: &Prediction,
    now: Millis,
) -> Result<Option<Millis>, StrategyError> {
    let mut widest: Option<Millis> = None;
    for subjob in hosted_on(hosting, prediction.core) {
        let outcome = {
            let call = MigrationCall {
                strategy: scenario.strategy,
                tie_break: scenario.hybrid_tie_break,
                scenario_z,
                graph,
                agents: &*agents,
                hosting: &*hosting,
                cluster,
                agent_pacing: Pacing::Emulated(cost.micro),
                core_pacing: Pacing::Emulated(cost.micro),
            };
            migrate_subjob(&call, subjob, prediction, now)?
        };
        for (at, kind) in outcome.events {
            push(queue, at, PRIO_EMIT, Task::Emit(kind));
        }
        let window = outcome.completed_at_ms - now;
        widest = Some(widest.map_or(window, |w: Millis| w.max(window)));
        apply_move(agents, hosting, &outcome.plan);

        // Freeze the mover's queued work and resume it when the move lands.
        // The live state carries mid-chunk progress with it, so the move
        // costs exactly its window: the next chunk completes at its planned
        // instant plus the stall, with nothing redone.
        let gen = {
            let g = gens.get_mut(&subjob).expect("mover has a gen");
            *g += 1;
            *g
        };
        let run = states.get_mut(&subjob).expect("mover has state");
        if run.done {
            continue;
        }
        match &run.state {
            NodeState::Leaf { next, .. } => {
                let plan = &leaf_plans[&subjob];
                push(
                    queue,
                    plan.chunk_done_at(*next, run.anchor_ms) + window,
                    PRIO_CHUNK,
                    Task::Chunk { subjob, gen },
                );
            }
            NodeState::Gather { got } => {
                let sj = graph.get(subjob).expect("mover exists");
                if got.len() == sj.inputs.len() {
                    push(
                        queue,
                        fire_instant(sj.op).max(outcome.completed_at_ms),
                        PRIO_FIRE,
                        Task::Fire { subjob, gen },
                    );
                }
            }
        }
    }
    Ok(widest)
}

#[cfg(test)]
mod tests {
    use super::super::{run_scenario, Mode, Scenario};
    use super::*;
    use crate::failure::{FaultMode, FaultSpec, FaultTarget, PredictorParams};
    use crate::model::{decompose_job, JobSpec, TopologySpec};
    use crate::workloads::{genome_search, PatternSource, SequenceSource};

    fn reduction_scenario(strategy: StrategyKind) -> Scenario {
        Scenario {
            strategy,
            backstop: None,
            mode: Mode::Emulation,
            seed: 11,
            base_duration_s: 3_600,
            periodicity_s: 3_600,
            topology: TopologySpec::Ring { cores: 24 },
            job: JobSpec {
                kind: WorkloadKind::ReductionSum,
                total_data_kb: 512,
                fan_widths: vec![4, 4],
                process_size_kb: None,
                patterns: None,
                sequences: None,
            },
            faults: FaultSpec::none(),
            predictor: PredictorParams::exact(),
            checkpoint_servers: Default::default(),
            hybrid_tie_break: crate::strategy::Mover::Core,
            trials: 1,
            cost_overrides: None,
        }
    }

    fn periodic_faults(offset_s: u64) -> FaultSpec {
        FaultSpec {
            mode: FaultMode::Periodic,
            offset_s: Some(offset_s),
            failures_per_interval: 1,
            target: FaultTarget::UniformRandomCore,
            truncated_interval_faults: true,
        }
    }

    /// The reduction oracle: fold every derived leaf slice sequentially.
    fn expected_sum(s: &Scenario) -> i64 {
        let graph = decompose_job(&s.job).unwrap();
        derive_leaf_slices(&graph, s.seed)
            .values()
            .map(|slice| fold_slice(slice))
            .sum()
    }

    #[test]
    fn fault_free_reduction_completes_at_base_with_oracle_sum() {
        let s = reduction_scenario(StrategyKind::Agent);
        let trace = run_scenario(&s).unwrap();
        assert!(trace.completed());
        assert_eq!(trace.total_ms, 3_600_000);
        assert_eq!(
            trace.root_result,
            Some(RootResult::ReductionSum { sum: expected_sum(&s) })
        );
        // Every sub-job completed exactly once.
        let completions = trace
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::SubJobCompleted { .. }))
            .count();
        assert_eq!(completions, 11);
    }

    #[test]
    fn fault_free_genome_run_matches_whole_store_search() {
        let mut s = reduction_scenario(StrategyKind::Agent);
        s.job = JobSpec {
            kind: WorkloadKind::GenomeSearch,
            total_data_kb: 64,
            fan_widths: vec![3],
            process_size_kb: None,
            patterns: Some(PatternSource::Synthetic {
                count: 10,
                min_len: 5,
                max_len: 8,
            }),
            sequences: Some(SequenceSource::Synthetic {
                unique_kb: 64,
                chromosomes: 7,
                replication: 1,
            }),
        };
        let trace = run_scenario(&s).unwrap();
        assert!(trace.completed());
        assert_eq!(trace.total_ms, 3_600_000);

        let store =
            materialize_sequences(s.job.sequences.as_ref().unwrap(), s.seed).unwrap();
        let dict = materialize_patterns(s.job.patterns.as_ref().unwrap(), s.seed).unwrap();
        assert_eq!(
            trace.root_result,
            Some(RootResult::GenomeSearch {
                hits: genome_search(&store, &dict)
            })
        );
    }

    #[test]
    fn predicted_faults_leave_the_result_intact() {
        // Two predicted faults (900 s and 4500 s); migrations stall the
        // movers briefly but the inter-tier slack absorbs the delay, so the
        // root still fires at base and the sum is untouched.
        let mut s = reduction_scenario(StrategyKind::Agent);
        s.base_duration_s = 7_200;
        s.faults = periodic_faults(900);
        let trace = run_scenario(&s).unwrap();
        assert!(trace.completed());
        assert_eq!(trace.total_ms, 7_200_000);
        assert_eq!(
            trace.root_result,
            Some(RootResult::ReductionSum { sum: expected_sum(&s) })
        );
        assert_eq!(trace.breakdowns.len(), 2);
        assert!(trace
            .breakdowns
            .iter()
            .all(|b| b.charge.kind == ChargeKind::Migration));
    }

    #[test]
    fn rollback_really_reruns_the_lost_work() {
        // One fault at 900 s with no snapshot yet: everything restarts at
        // 900 + 848 = 1748 s, and the leaves' full redo pushes the root to
        // 1748 + 3060 = 4808 s.
        let mut s = reduction_scenario(StrategyKind::CkptCentralSingle);
        s.predictor = PredictorParams::default();
        s.periodicity_s = 3_600;
        s.faults = periodic_faults(900);
        let trace = run_scenario(&s).unwrap();
        assert!(trace.completed());
        assert_eq!(trace.total_ms, 4_808_000);
        assert_eq!(
            trace.root_result,
            Some(RootResult::ReductionSum { sum: expected_sum(&s) })
        );
        assert_eq!(trace.breakdowns.len(), 1);
        assert_eq!(trace.breakdowns[0].charge.lost_ms, 900_000);
    }

    #[test]
    fn emulation_replays_identically() {
        let mut s = reduction_scenario(StrategyKind::Hybrid);
        s.base_duration_s = 7_200;
        s.predictor = PredictorParams::default();
        s.faults = FaultSpec {
            mode: FaultMode::Random,
            offset_s: None,
            failures_per_interval: 1,
            target: FaultTarget::UniformRandomCore,
            truncated_interval_faults: true,
        };
        s.backstop = Some(StrategyKind::CkptDecentral);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a, b);
    }
}
