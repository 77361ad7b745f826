//! Reactive recovery: checkpoint creation and rollback, cold restart, and
//! the closed-form composition of a run's execution time from calibrated
//! per-fault costs.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

use crate::engine::EventKind;
use crate::model::{Cluster, CoreId};
use crate::strategy::{CostModel, Mover, ServerId, StrategyError, StrategyKind};
use crate::Millis;

/// Opaque handle to a stored snapshot payload.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnapshotRef(pub u32);

/// A checkpoint server. Central servers stand apart from the compute
/// cluster; decentralised servers each attach to one compute core.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CheckpointServer {
    pub id: ServerId,
    pub attached_core: Option<CoreId>,
}

/// One stored checkpoint.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub at_ms: Millis,
    pub server: ServerId,
    pub strategy: StrategyKind,
    pub snapshot: SnapshotRef,
}

/// A created checkpoint, its trace event, and the calibrated overhead this
/// strategy charges whenever the record is used to recover a fault.
#[derive(Clone, PartialEq, Debug)]
pub struct CheckpointOutcome {
    pub record: CheckpointRecord,
    pub event: EventKind,
    pub overhead_ms: Millis,
}

/// The server reachable from `reference` in the fewest topology hops, ties
/// broken by lowest server id. Servers whose attached core is missing or
/// unreachable rank behind every reachable one.
pub fn nearest_server<'a>(
    servers: &'a [CheckpointServer],
    cluster: &Cluster,
    reference: CoreId,
) -> Option<&'a CheckpointServer> {
    // Breadth-first hop counts from the reference core.
    let mut hops: BTreeMap<CoreId, u32> = BTreeMap::new();
    let mut queue = VecDeque::new();
    hops.insert(reference, 0);
    queue.push_back(reference);
    while let Some(c) = queue.pop_front() {
        let d = hops[&c];
        if let Some(core) = cluster.get(c) {
            for n in &core.neighbors {
                hops.entry(*n).or_insert_with(|| {
                    queue.push_back(*n);
                    d + 1
                });
            }
        }
    }
    servers.iter().min_by_key(|s| {
        let hop = s
            .attached_core
            .and_then(|c| hops.get(&c).copied())
            .unwrap_or(u32::MAX);
        (hop, s.id)
    })
}

/// Stores a snapshot of the job according to the checkpointing strategy:
/// the single central server, the central server plus replicas on every
/// other server, or the decentralised server nearest to `reference`.
///
/// The returned `overhead_ms` is the calibrated checkpoint-creation and
/// transfer cost for this strategy and periodicity; the composition charges
/// it once per fault the record set recovers.
pub fn checkpoint_create(
    strategy: StrategyKind,
    servers: &[CheckpointServer],
    cluster: &Cluster,
    reference: CoreId,
    now_ms: Millis,
    snapshot: SnapshotRef,
    cost: &CostModel,
    periodicity_s: u64,
) -> Result<CheckpointOutcome, StrategyError> {
    debug_assert!(strategy.is_checkpointing(), "checkpoint_create wants a checkpointing strategy");
    if servers.is_empty() {
        return Err(StrategyError::NoServers { strategy });
    }
    let (server, replicas) = match strategy {
        StrategyKind::CkptCentralMulti => (
            servers[0].id,
            servers[1..].iter().map(|s| s.id).collect::<Vec<_>>(),
        ),
        StrategyKind::CkptDecentral => (
            nearest_server(servers, cluster, reference)
                .expect("non-empty server list")
                .id,
            Vec::new(),
        ),
        _ => (servers[0].id, Vec::new()),
    };
    let overhead_ms = cost.overhead_ms(strategy, periodicity_s)?;
    Ok(CheckpointOutcome {
        record: CheckpointRecord {
            at_ms: now_ms,
            server,
            strategy,
            snapshot,
        },
        event: EventKind::CheckpointCreated {
            strategy,
            server,
            replicas,
        },
        overhead_ms,
    })
}

/// A rollback to the latest usable snapshot.
#[derive(Clone, PartialEq, Debug)]
pub struct RollbackOutcome {
    /// Nominal instant the job resumes from.
    pub to_ms: Millis,
    /// Work discarded: fault instant minus snapshot instant.
    pub lost_ms: Millis,
    pub reinstate_ms: Millis,
    /// The snapshot restored, absent when the job rewinds to its start.
    pub snapshot: Option<SnapshotRef>,
    pub events: Vec<EventKind>,
}

/// Rewinds a faulted job to the latest checkpoint at or before the fault
/// (or to the start when none exists) and charges the strategy's calibrated
/// reinstate time.
pub fn checkpoint_rollback(
    strategy: StrategyKind,
    records: &[CheckpointRecord],
    fault_at_ms: Millis,
    cost: &CostModel,
    periodicity_s: u64,
) -> Result<RollbackOutcome, StrategyError> {
    let latest = records
        .iter()
        .filter(|r| r.at_ms <= fault_at_ms)
        .max_by_key(|r| r.at_ms);
    let to_ms = latest.map(|r| r.at_ms).unwrap_or(0);
    let lost_ms = fault_at_ms - to_ms;
    let reinstate_ms = cost.reinstate_ms(strategy, periodicity_s)?;
    Ok(RollbackOutcome {
        to_ms,
        lost_ms,
        reinstate_ms,
        snapshot: latest.map(|r| r.snapshot),
        events: vec![
            EventKind::RollbackPerformed { to_ms, lost_ms },
            EventKind::ReinstateCompleted {
                strategy,
                duration_ms: reinstate_ms,
            },
        ],
    })
}

/// A restart of the whole job from scratch.
#[derive(Clone, PartialEq, Debug)]
pub struct ColdRestartOutcome {
    /// Work discarded: everything since the last point execution was ready.
    pub lost_ms: Millis,
    pub reinstate_ms: Millis,
    /// Nominal instant execution is ready to run again.
    pub next_ready_at_ms: Millis,
    pub events: Vec<EventKind>,
}

/// Discards all progress since `ready_at_ms` (the job start, or the end of
/// a previous restart's reinstate window) and restarts. A fault landing
/// inside a still-running reinstate window loses nothing new but pushes the
/// ready point out again.
pub fn cold_restart_recover(
    ready_at_ms: Millis,
    fault_at_ms: Millis,
    cost: &CostModel,
) -> ColdRestartOutcome {
    let lost_ms = fault_at_ms.saturating_sub(ready_at_ms);
    let reinstate_ms = cost.cold_restart_reinstate_ms();
    ColdRestartOutcome {
        lost_ms,
        reinstate_ms,
        next_ready_at_ms: fault_at_ms.max(ready_at_ms) + reinstate_ms,
        events: vec![
            EventKind::ColdRestarted { lost_ms },
            EventKind::ReinstateCompleted {
                strategy: StrategyKind::ColdRestart,
                duration_ms: reinstate_ms,
            },
        ],
    }
}

/// How one fault (or false alarm) was absorbed.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChargeKind {
    /// Predicted in time and migrated away before impact.
    Migration,
    /// Rolled back to a checkpoint after impact.
    Rollback,
    /// Whole-job restart after impact.
    Restart,
    /// Unpredicted under a proactive strategy; the layered checkpointing
    /// backstop caught it.
    BackstopRollback,
    /// A prediction that never materialized; the wasted migration still
    /// costs reinstate and overhead.
    FalseAlarm,
    /// Unpredicted with no backstop: the job is lost.
    Fatal,
}

/// The cost breakdown of one absorbed fault or false alarm.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FaultCharge {
    pub at_ms: Millis,
    pub kind: ChargeKind,
    pub lost_ms: Millis,
    pub predict_ms: Millis,
    pub reinstate_ms: Millis,
    pub overhead_ms: Millis,
}

impl FaultCharge {
    pub fn total_ms(&self) -> Millis {
        self.lost_ms + self.predict_ms + self.reinstate_ms + self.overhead_ms
    }
}

/// Everything the closed-form composition needs.
#[derive(Clone, Copy)]
pub struct ComposeInputs<'a> {
    /// Fault-free execution time.
    pub base_ms: Millis,
    pub periodicity_s: u64,
    pub strategy: StrategyKind,
    /// Fault instants on the nominal timeline, ascending.
    pub faults_ms: &'a [Millis],
    /// Per-fault prediction verdicts, same length as `faults_ms`. Only the
    /// proactive strategies read them.
    pub predicted: &'a [bool],
    /// Instants of predictions that never materialized, ascending.
    pub false_alarms_ms: &'a [Millis],
    /// Checkpoint instants on the nominal timeline, used by the reactive
    /// strategies and by the backstop.
    pub checkpoints_ms: &'a [Millis],
    /// Checkpointing strategy layered under a proactive one to absorb
    /// unpredicted faults; `None` makes such a fault fatal.
    pub backstop: Option<StrategyKind>,
    /// The mover hybrid negotiation picks; decides which calibrated costs a
    /// hybrid run is charged.
    pub hybrid_mover: Mover,
    pub cost: &'a CostModel,
}

/// A composed run: its total execution time and how each disturbance was
/// charged.
#[derive(Clone, PartialEq, Debug)]
pub struct ComposedTotal {
    pub total_ms: Millis,
    /// False when an unpredicted fault found no backstop.
    pub completed: bool,
    pub charges: Vec<FaultCharge>,
}

/// Composes a run's total execution time from its base duration and
/// calibrated per-fault costs.
///
/// Reactive strategies charge `lost + reinstate + overhead` per fault.
/// Proactive strategies charge `predict + reinstate + overhead` per
/// predicted fault, route unpredicted faults to the backstop (or fail), and
/// charge `reinstate + overhead` per false alarm. Faults stay anchored to
/// the nominal schedule: recovery time does not spawn extra fault
/// opportunities, matching how the calibrated totals are tabulated.
pub fn compose_execution_time(inputs: &ComposeInputs<'_>) -> Result<ComposedTotal, StrategyError> {
    let ComposeInputs {
        base_ms,
        periodicity_s,
        strategy,
        faults_ms,
        predicted,
        false_alarms_ms,
        checkpoints_ms,
        backstop,
        hybrid_mover,
        cost,
    } = *inputs;
    debug_assert!(faults_ms.windows(2).all(|w| w[0] <= w[1]), "faults must ascend");
    debug_assert!(
        !strategy.is_proactive() || predicted.len() == faults_ms.len(),
        "one prediction verdict per fault"
    );

    // Which calibrated row a proactive migration draws from.
    let mover_kind = match strategy {
        StrategyKind::Hybrid => hybrid_mover.cost_kind(),
        s => s,
    };

    let lost_to_checkpoint = |fault_ms: Millis| {
        let to = checkpoints_ms
            .iter()
            .copied()
            .filter(|c| *c <= fault_ms)
            .max()
            .unwrap_or(0);
        fault_ms - to
    };

    // One chronological pass over faults and false alarms, so a fatal fault
    // cuts off everything after it.
    enum Item {
        Fault { at_ms: Millis, predicted: bool },
        FalseAlarm { at_ms: Millis },
    }
    let mut items: Vec<Item> = faults_ms
        .iter()
        .enumerate()
        .map(|(i, t)| Item::Fault {
            at_ms: *t,
            predicted: strategy.is_proactive() && predicted[i],
        })
        .chain(false_alarms_ms.iter().map(|t| Item::FalseAlarm { at_ms: *t }))
        .collect();
    items.sort_by_key(|i| match i {
        Item::Fault { at_ms, .. } | Item::FalseAlarm { at_ms } => *at_ms,
    });

    let mut charges = Vec::new();
    let mut completed = true;
    let mut ready_at_ms = 0; // cold-restart ready point
    for item in items {
        let charge = match item {
            Item::FalseAlarm { at_ms } => {
                if !strategy.is_proactive() {
                    continue; // nobody asked the predictor
                }
                FaultCharge {
                    at_ms,
                    kind: ChargeKind::FalseAlarm,
                    lost_ms: 0,
                    predict_ms: 0,
                    reinstate_ms: cost.reinstate_ms(mover_kind, periodicity_s)?,
                    overhead_ms: cost.overhead_ms(mover_kind, periodicity_s)?,
                }
            }
            Item::Fault { at_ms, predicted } => match strategy {
                s if s.is_checkpointing() => FaultCharge {
                    at_ms,
                    kind: ChargeKind::Rollback,
                    lost_ms: lost_to_checkpoint(at_ms),
                    predict_ms: 0,
                    reinstate_ms: cost.reinstate_ms(s, periodicity_s)?,
                    overhead_ms: cost.overhead_ms(s, periodicity_s)?,
                },
                StrategyKind::ColdRestart => {
                    let out = cold_restart_recover(ready_at_ms, at_ms, cost);
                    ready_at_ms = out.next_ready_at_ms;
                    FaultCharge {
                        at_ms,
                        kind: ChargeKind::Restart,
                        lost_ms: out.lost_ms,
                        predict_ms: 0,
                        reinstate_ms: out.reinstate_ms,
                        overhead_ms: 0,
                    }
                }
                _ if predicted => FaultCharge {
                    at_ms,
                    kind: ChargeKind::Migration,
                    lost_ms: 0,
                    predict_ms: cost.predict_ms(),
                    reinstate_ms: cost.reinstate_ms(mover_kind, periodicity_s)?,
                    overhead_ms: cost.overhead_ms(mover_kind, periodicity_s)?,
                },
                _ => match backstop {
                    Some(b) => FaultCharge {
                        at_ms,
                        kind: ChargeKind::BackstopRollback,
                        lost_ms: lost_to_checkpoint(at_ms),
                        predict_ms: 0,
                        reinstate_ms: cost.reinstate_ms(b, periodicity_s)?,
                        overhead_ms: cost.overhead_ms(b, periodicity_s)?,
                    },
                    None => {
                        charges.push(FaultCharge {
                            at_ms,
                            kind: ChargeKind::Fatal,
                            lost_ms: 0,
                            predict_ms: 0,
                            reinstate_ms: 0,
                            overhead_ms: 0,
                        });
                        completed = false;
                        break;
                    }
                },
            },
        };
        charges.push(charge);
    }

    let total_ms = base_ms + charges.iter().map(FaultCharge::total_ms).sum::<Millis>();
    Ok(ComposedTotal {
        total_ms,
        completed,
        charges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TopologySpec;
    use crate::sec;

    fn servers(n: u32, attach: impl Fn(u32) -> Option<u32>) -> Vec<CheckpointServer> {
        (0..n)
            .map(|i| CheckpointServer {
                id: ServerId(i),
                attached_core: attach(i).map(CoreId),
            })
            .collect()
    }

    fn central_cluster() -> Cluster {
        Cluster::build(&TopologySpec::Complete { cores: 4 }).unwrap()
    }

    #[test]
    fn creation_targets_match_each_strategy() {
        let cm = CostModel::default();
        let cluster = central_cluster();
        let central = servers(3, |_| None);

        let single = checkpoint_create(
            StrategyKind::CkptCentralSingle,
            &central[..1],
            &cluster,
            CoreId(0),
            0,
            SnapshotRef(0),
            &cm,
            3600,
        )
        .unwrap();
        assert_eq!(single.record.server, ServerId(0));
        assert_eq!(single.overhead_ms, 485_000);
        assert!(matches!(
            single.event,
            EventKind::CheckpointCreated { ref replicas, .. } if replicas.is_empty()
        ));

        let multi = checkpoint_create(
            StrategyKind::CkptCentralMulti,
            &central,
            &cluster,
            CoreId(0),
            0,
            SnapshotRef(0),
            &cm,
            3600,
        )
        .unwrap();
        assert_eq!(multi.overhead_ms, 554_000);
        assert!(matches!(
            multi.event,
            EventKind::CheckpointCreated { ref replicas, .. }
                if *replicas == vec![ServerId(1), ServerId(2)]
        ));

        let err = checkpoint_create(
            StrategyKind::CkptDecentral,
            &[],
            &cluster,
            CoreId(0),
            0,
            SnapshotRef(0),
            &cm,
            3600,
        )
        .unwrap_err();
        assert_eq!(err, StrategyError::NoServers { strategy: StrategyKind::CkptDecentral });
    }

    #[test]
    fn decentralised_server_choice_is_fewest_hops_then_lowest_id() {
        // Ring of 8: hops from c1 are c0/c2 -> 1, c7/c3 -> 2, c5 -> 4.
        let cluster = Cluster::build(&TopologySpec::Ring { cores: 8 }).unwrap();
        let srv = servers(3, |i| Some([5, 3, 7][i as usize]));
        let near = nearest_server(&srv, &cluster, CoreId(1)).unwrap();
        assert_eq!(near.id, ServerId(1)); // c3, two hops

        // Tie between c3 (srv1) and c7 (srv2), both two hops from c1:
        // lowest server id wins.
        let tied = servers(2, |i| Some([7, 3][i as usize]));
        let near = nearest_server(&tied, &cluster, CoreId(1)).unwrap();
        assert_eq!(near.id, ServerId(0));

        let out = checkpoint_create(
            StrategyKind::CkptDecentral,
            &srv,
            &cluster,
            CoreId(1),
            sec(3600),
            SnapshotRef(1),
            &CostModel::default(),
            3600,
        )
        .unwrap();
        assert_eq!(out.record.server, ServerId(1));
        assert_eq!(out.overhead_ms, 404_000);
    }

    #[test]
    fn rollback_rewinds_to_latest_snapshot_at_or_before_the_fault() {
        let cm = CostModel::default();
        let records: Vec<CheckpointRecord> = [0, 3_600, 7_200]
            .iter()
            .enumerate()
            .map(|(i, s)| CheckpointRecord {
                at_ms: sec(*s),
                server: ServerId(0),
                strategy: StrategyKind::CkptCentralSingle,
                snapshot: SnapshotRef(i as u32),
            })
            .collect();

        // Fault fifteen minutes into the first interval.
        let out = checkpoint_rollback(
            StrategyKind::CkptCentralSingle,
            &records,
            sec(900),
            &cm,
            3600,
        )
        .unwrap();
        assert_eq!(out.to_ms, 0);
        assert_eq!(out.lost_ms, sec(900));
        assert_eq!(out.reinstate_ms, 848_000);
        assert_eq!(out.snapshot, Some(SnapshotRef(0)));
        assert_eq!(out.events.len(), 2);

        // Fault exactly on a checkpoint instant loses nothing.
        let out =
            checkpoint_rollback(StrategyKind::CkptCentralSingle, &records, sec(7_200), &cm, 3600)
                .unwrap();
        assert_eq!(out.lost_ms, 0);
        assert_eq!(out.snapshot, Some(SnapshotRef(2)));

        // No usable snapshot: rewind to the start.
        let out =
            checkpoint_rollback(StrategyKind::CkptDecentral, &records[2..], sec(900), &cm, 3600)
                .unwrap();
        assert_eq!(out.to_ms, 0);
        assert_eq!(out.lost_ms, sec(900));
        assert_eq!(out.snapshot, None);
        assert_eq!(out.reinstate_ms, 927_000);
    }

    #[test]
    fn cold_restart_chains_ready_points() {
        let cm = CostModel::default();
        let first = cold_restart_recover(0, sec(840), &cm);
        assert_eq!(first.lost_ms, sec(840));
        assert_eq!(first.reinstate_ms, sec(600));
        assert_eq!(first.next_ready_at_ms, sec(1_440));

        let second = cold_restart_recover(first.next_ready_at_ms, sec(4_440), &cm);
        assert_eq!(second.lost_ms, sec(3_000));

        // A fault during the reinstate window loses nothing new.
        let stalled = cold_restart_recover(sec(1_440), sec(1_000), &cm);
        assert_eq!(stalled.lost_ms, 0);
        assert_eq!(stalled.next_ready_at_ms, sec(2_040));
    }

    fn compose(
        strategy: StrategyKind,
        base_s: u64,
        periodicity_s: u64,
        faults_s: &[u64],
        checkpoints_s: &[u64],
    ) -> ComposedTotal {
        let cm = CostModel::default();
        let faults_ms: Vec<Millis> = faults_s.iter().map(|s| sec(*s)).collect();
        let checkpoints_ms: Vec<Millis> = checkpoints_s.iter().map(|s| sec(*s)).collect();
        let predicted = vec![true; faults_ms.len()];
        compose_execution_time(&ComposeInputs {
            base_ms: sec(base_s),
            periodicity_s,
            strategy,
            faults_ms: &faults_ms,
            predicted: &predicted,
            false_alarms_ms: &[],
            checkpoints_ms: &checkpoints_ms,
            backstop: None,
            hybrid_mover: Mover::Core,
            cost: &cm,
        })
        .unwrap()
    }

    #[test]
    fn reactive_composition_matches_reference_totals() {
        // One hour of work, one fault fifteen minutes in:
        // 3600 + 900 + 848 + 485 = 5833 s.
        let one = compose(StrategyKind::CkptCentralSingle, 3_600, 3600, &[900], &[0]);
        assert_eq!(one.total_ms, 5_833_000);
        assert!(one.completed);
        assert_eq!(one.charges.len(), 1);
        assert_eq!(one.charges[0].kind, ChargeKind::Rollback);

        // Five coincident faults, each losing the same 1874 s:
        // 3600 + 5 x (1874 + 848 + 485) = 19635 s.
        let five = compose(
            StrategyKind::CkptCentralSingle,
            3_600,
            3600,
            &[1_874; 5],
            &[0],
        );
        assert_eq!(five.total_ms, 19_635_000);
        assert!(five.charges.iter().all(|c| c.lost_ms == sec(1_874)));

        // Five-hour job, five faults per hourly interval at the same mean
        // offset, decentralised: 18000 + 25 x (1874 + 927 + 404) = 98125 s.
        let faults: Vec<u64> = (0..5)
            .flat_map(|h| std::iter::repeat(h * 3_600 + 1_874).take(5))
            .collect();
        let grid: Vec<u64> = (0..5).map(|h| h * 3_600).collect();
        let many = compose(StrategyKind::CkptDecentral, 18_000, 3600, &faults, &grid);
        assert_eq!(many.total_ms, 98_125_000);
        assert_eq!(many.charges.len(), 25);

        // Five-hour job, one fault per hour at 840 s past the boundary:
        // 18000 + 5 x (840 + 848 + 485) = 28865 s.
        let faults: Vec<u64> = (0..5).map(|h| h * 3_600 + 840).collect();
        let hourly = compose(StrategyKind::CkptCentralSingle, 18_000, 3600, &faults, &grid);
        assert_eq!(hourly.total_ms, 28_865_000);
    }

    #[test]
    fn cold_restart_composition_replays_from_ready_points() {
        let faults: Vec<u64> = (0..5).map(|h| h * 3_600 + 840).collect();
        let out = compose(StrategyKind::ColdRestart, 18_000, 3600, &faults, &[]);
        // Lost: 840 + 4 x 3000; reinstate: 5 x 600.
        assert_eq!(out.total_ms, 33_840_000);
        assert!(out.completed);

        let quiet = compose(StrategyKind::ColdRestart, 18_000, 3600, &[], &[]);
        assert_eq!(quiet.total_ms, 18_000_000);
    }

    #[test]
    fn proactive_composition_charges_lead_time_and_migration() {
        // 3600 + 38 + 0.47 + 314 = 3952.47 s.
        let agent = compose(StrategyKind::Agent, 3_600, 3600, &[900], &[]);
        assert_eq!(agent.total_ms, 3_952_470);
        assert_eq!(agent.charges[0].kind, ChargeKind::Migration);
        assert_eq!(agent.charges[0].predict_ms, 38_000);

        // 3600 + 38 + 0.38 + 267 = 3905.38 s.
        let core = compose(StrategyKind::Core, 3_600, 3600, &[900], &[]);
        assert_eq!(core.total_ms, 3_905_380);

        // Hybrid charged at the picked mover's rates.
        let hybrid = compose(StrategyKind::Hybrid, 3_600, 3600, &[900], &[]);
        assert_eq!(hybrid.total_ms, core.total_ms);
    }

    #[test]
    fn false_alarms_cost_a_wasted_migration_without_lead_time() {
        let cm = CostModel::default();
        let out = compose_execution_time(&ComposeInputs {
            base_ms: sec(3_600),
            periodicity_s: 3600,
            strategy: StrategyKind::Agent,
            faults_ms: &[],
            predicted: &[],
            false_alarms_ms: &[sec(1_200)],
            checkpoints_ms: &[],
            backstop: None,
            hybrid_mover: Mover::Core,
            cost: &cm,
        })
        .unwrap();
        assert_eq!(out.total_ms, sec(3_600) + 470 + 314_000);
        assert_eq!(out.charges[0].kind, ChargeKind::FalseAlarm);
        assert_eq!(out.charges[0].predict_ms, 0);

        // Reactive strategies never consult the predictor, so a false alarm
        // costs them nothing.
        let quiet = compose_execution_time(&ComposeInputs {
            base_ms: sec(3_600),
            periodicity_s: 3600,
            strategy: StrategyKind::CkptCentralSingle,
            faults_ms: &[],
            predicted: &[],
            false_alarms_ms: &[sec(1_200)],
            checkpoints_ms: &[0],
            backstop: None,
            hybrid_mover: Mover::Core,
            cost: &cm,
        })
        .unwrap();
        assert_eq!(quiet.total_ms, sec(3_600));
    }

    #[test]
    fn unpredicted_faults_need_the_backstop_or_kill_the_run() {
        let cm = CostModel::default();
        let base = ComposeInputs {
            base_ms: sec(3_600),
            periodicity_s: 3600,
            strategy: StrategyKind::Agent,
            faults_ms: &[sec(900), sec(1_800)],
            predicted: &[false, true],
            false_alarms_ms: &[],
            checkpoints_ms: &[0],
            backstop: None,
            hybrid_mover: Mover::Core,
            cost: &cm,
        };

        let dead = compose_execution_time(&base).unwrap();
        assert!(!dead.completed);
        assert_eq!(dead.charges.len(), 1);
        assert_eq!(dead.charges[0].kind, ChargeKind::Fatal);

        let saved = compose_execution_time(&ComposeInputs {
            backstop: Some(StrategyKind::CkptCentralSingle),
            ..base
        })
        .unwrap();
        assert!(saved.completed);
        assert_eq!(saved.charges[0].kind, ChargeKind::BackstopRollback);
        assert_eq!(saved.charges[0].lost_ms, sec(900));
        assert_eq!(saved.charges[1].kind, ChargeKind::Migration);
        assert_eq!(
            saved.total_ms,
            sec(3_600) + (sec(900) + 848_000 + 485_000) + (38_000 + 470 + 314_000)
        );
    }
}
