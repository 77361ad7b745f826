//! The timing-mode event loop.
//!
//! Nothing computes here: sub-jobs are placeholders, and every disturbance
//! charges its calibrated cost. The loop walks the planned instants in
//! order — checkpoints, predictions, false alarms, fault impacts — mutates
//! the cluster and hosting state exactly as the configured strategy
//! prescribes, and accumulates one [`FaultCharge`] per absorbed disturbance.
//! The run's total is `base + Σ charges`, the same arithmetic as the
//! closed-form composition, so the two routes can be checked against each
//! other.

use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::moves::{apply_move, hosted_on, migrate_subjob, resolve_target, MigrationCall};
use super::{
    EngineError, EventKind, FaultBreakdown, RunStatus, Setup, Trace, TraceBuilder,
};
use crate::failure::{Prediction, PredictionOutcome};
use crate::model::{
    validate_hosting, Agent, Cluster, CoreId, CoreStatus, DependencyGraph, SubJobId,
};
use crate::strategy::{
    checkpoint_create, checkpoint_rollback, cold_restart_recover, ChargeKind, CheckpointRecord,
    FaultCharge, Mover, Pacing, SnapshotRef, StrategyError, StrategyKind,
};
use crate::{sec, Millis};

/// One planned instant. Ordering at equal times: checkpoints commit before
/// anything else (a fault landing exactly on a boundary finds the fresh
/// record), predictions and alarms fire before impacts.
enum Step {
    Checkpoint,
    Prediction(usize),
    FalseAlarm,
    Fault(usize),
}

const PRIO_CHECKPOINT: u8 = 0;
const PRIO_PREDICTION: u8 = 1;
const PRIO_FAULT: u8 = 2;

/// Resolves (once) which core a fault strikes; later steps for the same
/// fault reuse the stored answer.
fn ensure_target(
    slot: &mut Option<CoreId>,
    hosting: &BTreeMap<SubJobId, CoreId>,
    cluster: &Cluster,
    rng: &mut ChaCha8Rng,
) -> Option<CoreId> {
    if slot.is_none() {
        *slot = resolve_target(hosting, cluster, rng);
    }
    *slot
}

/// Migrates every sub-job hosted on the predicted core and commits the
/// moves. Returns the mover that handled the first sub-job (the one the
/// fault's single charge is rated by), or `None` when the core hosted
/// nothing.
#[allow(clippy::too_many_arguments)]
fn migrate_hosted(
    trace: &mut TraceBuilder,
    agents: &mut [Agent],
    hosting: &mut BTreeMap<SubJobId, CoreId>,
    cluster: &Cluster,
    graph: &DependencyGraph,
    strategy: StrategyKind,
    tie_break: Mover,
    scenario_z: u32,
    agent_pacing: Pacing,
    core_pacing: Pacing,
    prediction: &Prediction,
    at: Millis,
) -> Result<Option<Mover>, StrategyError> {
    let mut first: Option<Mover> = None;
    for subjob in hosted_on(hosting, prediction.core) {
        let outcome = {
            let call = MigrationCall {
                strategy,
                tie_break,
                scenario_z,
                graph,
                agents: &*agents,
                hosting: &*hosting,
                cluster,
                agent_pacing,
                core_pacing,
            };
            migrate_subjob(&call, subjob, prediction, at)?
        };
        trace.extend(outcome.events);
        first.get_or_insert(outcome.plan.mover);
        apply_move(agents, hosting, &outcome.plan);
    }
    Ok(first)
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
    let root = graph.root().expect("decomposed graphs have a single root");

    // Calibrated per-move rates, fetched once up front so a missing cost
    // entry fails the run before simulated time starts. Hybrid needs both.
    let agent_rates = match strategy {
        StrategyKind::Agent | StrategyKind::Hybrid => Some((
            cost.reinstate_ms(StrategyKind::Agent, p)?,
            cost.overhead_ms(StrategyKind::Agent, p)?,
        )),
        _ => None,
    };
    let core_rates = match strategy {
        StrategyKind::Core | StrategyKind::Hybrid => Some((
            cost.reinstate_ms(StrategyKind::Core, p)?,
            cost.overhead_ms(StrategyKind::Core, p)?,
        )),
        _ => None,
    };
    let rate_for = |mover: Mover| -> (Millis, Millis) {
        match mover {
            Mover::Agent => agent_rates.expect("agent rates fetched for this strategy"),
            Mover::Core => core_rates.expect("core rates fetched for this strategy"),
        }
    };
    // Both pacings are built eagerly per call; a mover this strategy can
    // never pick carries a placeholder rate that no route reads.
    let pacing_for = |rates: Option<(Millis, Millis)>| Pacing::Charged {
        reinstate_ms: rates.map_or(0, |r| r.0),
    };

    // Plan every instant up front; a stable sort keeps insertion order for
    // equal (time, priority) pairs.
    let mut plan: Vec<(Millis, u8, Step)> = Vec::new();
    for c in &checkpoints_ms {
        plan.push((*c, PRIO_CHECKPOINT, Step::Checkpoint));
    }
    for (i, f) in schedule.instants.iter().enumerate() {
        if predicted[i] {
            plan.push((f.at_ms - lead_ms, PRIO_PREDICTION, Step::Prediction(i)));
        }
        plan.push((f.at_ms, PRIO_FAULT, Step::Fault(i)));
    }
    for t in false_alarms_ms.iter() {
        plan.push((*t, PRIO_PREDICTION, Step::FalseAlarm));
    }
    plan.sort_by_key(|(at, prio, _)| (*at, *prio));

    let mut trace = TraceBuilder::default();
    let mut breakdowns: Vec<FaultBreakdown> = Vec::new();
    let mut records: Vec<CheckpointRecord> = Vec::new();
    // Predicted faults that found no migration target fall through to the
    // backstop at impact (or kill the run when there is none).
    let mut fallthrough = vec![false; schedule.len()];
    let mut doomed = vec![false; schedule.len()];
    let mut ready_at_ms: Millis = 0;
    let mut died_at: Option<Millis> = None;

    'steps: for (at, _prio, step) in plan {
        match step {
            Step::Checkpoint => {
                let kind = ckpt_kind.expect("checkpoints planned imply a checkpointing layer");
                let out = checkpoint_create(
                    kind,
                    &servers,
                    &cluster,
                    hosting[&root],
                    at,
                    SnapshotRef(records.len() as u32),
                    &cost,
                    p,
                )?;
                trace.push(at, out.event);
                records.push(out.record);
            }
            Step::Prediction(i) => {
                let fault_at = schedule.instants[i].at_ms;
                let core = match ensure_target(
                    &mut schedule.instants[i].core,
                    &hosting,
                    &cluster,
                    &mut targets_rng,
                ) {
                    Some(c) => c,
                    // Nothing the job runs on is still alive to flag.
                    None => continue,
                };
                trace.push(
                    at,
                    EventKind::PredictionIssued {
                        core,
                        fault_at_ms: Some(fault_at),
                        outcome: PredictionOutcome::TruePositive,
                    },
                );
                cluster.set_status(core, CoreStatus::PredictedFail);
                let prediction = Prediction {
                    core,
                    issued_at_ms: at,
                    fault_at_ms: Some(fault_at),
                    outcome: PredictionOutcome::TruePositive,
                };
                match migrate_hosted(
                    &mut trace,
                    &mut agents,
                    &mut hosting,
                    &cluster,
                    &graph,
                    strategy,
                    scenario.hybrid_tie_break,
                    scenario_z,
                    pacing_for(agent_rates),
                    pacing_for(core_rates),
                    &prediction,
                    at,
                ) {
                    Ok(Some(mover)) => {
                        let (reinstate_ms, overhead_ms) = rate_for(mover);
                        breakdowns.push(FaultBreakdown {
                            core,
                            predicted: true,
                            charge: FaultCharge {
                                at_ms: at,
                                kind: ChargeKind::Migration,
                                lost_ms: 0,
                                predict_ms: cost.predict_ms(),
                                reinstate_ms,
                                overhead_ms,
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
            Step::FalseAlarm => {
                let core = match resolve_target(&hosting, &cluster, &mut targets_rng) {
                    Some(c) => c,
                    None => continue,
                };
                trace.push(
                    at,
                    EventKind::PredictionIssued {
                        core,
                        fault_at_ms: None,
                        outcome: PredictionOutcome::FalseAlarm,
                    },
                );
                cluster.set_status(core, CoreStatus::PredictedFail);
                let prediction = Prediction {
                    core,
                    issued_at_ms: at,
                    fault_at_ms: None,
                    outcome: PredictionOutcome::FalseAlarm,
                };
                match migrate_hosted(
                    &mut trace,
                    &mut agents,
                    &mut hosting,
                    &cluster,
                    &graph,
                    strategy,
                    scenario.hybrid_tie_break,
                    scenario_z,
                    pacing_for(agent_rates),
                    pacing_for(core_rates),
                    &prediction,
                    at,
                ) {
                    Ok(Some(mover)) => {
                        let (reinstate_ms, overhead_ms) = rate_for(mover);
                        breakdowns.push(FaultBreakdown {
                            core,
                            predicted: false,
                            charge: FaultCharge {
                                at_ms: at,
                                kind: ChargeKind::FalseAlarm,
                                lost_ms: 0,
                                predict_ms: 0,
                                reinstate_ms,
                                overhead_ms,
                            },
                        });
                    }
                    Ok(None) => {}
                    // Nowhere to move: the wasted migration never starts.
                    Err(StrategyError::NoViableTarget { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
                // The scare passes; the core never actually fails.
                cluster.set_status(core, CoreStatus::Alive);
            }
            Step::Fault(i) => {
                let core = match ensure_target(
                    &mut schedule.instants[i].core,
                    &hosting,
                    &cluster,
                    &mut targets_rng,
                ) {
                    Some(c) => c,
                    None => continue,
                };
                trace.push(at, EventKind::FaultInjected { core });
                cluster.set_status(core, CoreStatus::Failed);

                if predicted[i] && !fallthrough[i] && !doomed[i] {
                    // Migrated away in time: the core dies empty and stays
                    // dead; the charge was taken at prediction time.
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
                    trace.push(at, EventKind::JobFailed { reason: reason.into() });
                    breakdowns.push(FaultBreakdown {
                        core,
                        predicted: predicted[i],
                        charge: FaultCharge {
                            at_ms: at,
                            kind: ChargeKind::Fatal,
                            lost_ms: 0,
                            predict_ms: 0,
                            reinstate_ms: 0,
                            overhead_ms: 0,
                        },
                    });
                    died_at = Some(at);
                    break 'steps;
                } else if strategy == StrategyKind::ColdRestart {
                    let out = cold_restart_recover(ready_at_ms, at, &cost);
                    for kind in out.events {
                        trace.push(at, kind);
                    }
                    ready_at_ms = out.next_ready_at_ms;
                    breakdowns.push(FaultBreakdown {
                        core,
                        predicted: false,
                        charge: FaultCharge {
                            at_ms: at,
                            kind: ChargeKind::Restart,
                            lost_ms: out.lost_ms,
                            predict_ms: 0,
                            reinstate_ms: out.reinstate_ms,
                            overhead_ms: 0,
                        },
                    });
                    // The restarted job reoccupies a repaired core.
                    cluster.set_status(core, CoreStatus::Alive);
                } else {
                    // Reactive rollback, or the backstop absorbing what the
                    // predictor missed.
                    let kind = if strategy.is_checkpointing() {
                        strategy
                    } else {
                        scenario.backstop.expect("proactive fault routed to backstop")
                    };
                    let out = checkpoint_rollback(kind, &records, at, &cost, p)?;
                    for k in out.events {
                        trace.push(at, k);
                    }
                    breakdowns.push(FaultBreakdown {
                        core,
                        predicted: predicted[i],
                        charge: FaultCharge {
                            at_ms: at,
                            kind: if strategy.is_checkpointing() {
                                ChargeKind::Rollback
                            } else {
                                ChargeKind::BackstopRollback
                            },
                            lost_ms: out.lost_ms,
                            predict_ms: 0,
                            reinstate_ms: out.reinstate_ms,
                            overhead_ms: cost.overhead_ms(kind, p)?,
                        },
                    });
                    // The rolled-back job resumes in place on repaired (or
                    // replacement) hardware.
                    cluster.set_status(core, CoreStatus::Alive);
                }
            }
        }
        validate_hosting(&cluster, hosting.iter().map(|(s, c)| (*s, *c)))?;
    }

    let charged: Millis = breakdowns.iter().map(|b| b.charge.total_ms()).sum();
    let (status, total_ms) = match died_at {
        Some(at) => (RunStatus::Failed, at),
        None => {
            let total = base_ms + charged;
            trace.push(total, EventKind::JobCompleted);
            (RunStatus::Completed, total)
        }
    };
    Ok(Trace {
        events: trace.finish(),
        status,
        total_ms,
        breakdowns,
        root_result: None,
    })
}
