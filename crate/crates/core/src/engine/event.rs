//! The event vocabulary shared by the engine and the strategies.
//!
//! Every observable action in a run becomes one [`Event`]. Events are
//! totally ordered by `(at_ms, seq)` where `seq` is the insertion order, so
//! coincident events replay in exactly the order they were produced and a
//! trace serializes byte-identically across repeated runs.

use serde::{Deserialize, Serialize};

use crate::failure::PredictionOutcome;
use crate::model::{CoreId, SubJobId};
use crate::strategy::{Mover, RuleApplied, ServerId, StrategyKind};
use crate::Millis;

/// One timestamped trace entry.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Event {
    pub at_ms: Millis,
    /// Insertion order; the tie-breaker for coincident timestamps.
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Everything that can happen in a run.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    /// A snapshot of job state was recorded by a checkpointing strategy (or
    /// the checkpointing backstop of a proactive one).
    CheckpointCreated {
        strategy: StrategyKind,
        server: ServerId,
        /// Additional servers the record was replicated to.
        replicas: Vec<ServerId>,
    },
    /// A core stopped; anything it hosted is gone.
    FaultInjected { core: CoreId },
    /// The predictor flagged a core. True positives carry the paired fault
    /// instant; false alarms carry none.
    PredictionIssued {
        core: CoreId,
        fault_at_ms: Option<Millis>,
        outcome: PredictionOutcome,
    },
    /// A liveness probe and its answer.
    Probe {
        prober: CoreId,
        probed: CoreId,
        alive: bool,
    },
    /// Hybrid negotiation picked the mover for one prediction.
    NegotiationDecided {
        subjob: SubJobId,
        z: u32,
        s_d_kb: u64,
        s_p_kb: u64,
        decision: Mover,
        rule: RuleApplied,
    },
    MigrationStarted {
        mover: Mover,
        subjob: SubJobId,
        from: CoreId,
        to: CoreId,
    },
    /// Agent route: the replacement process exists on the target core.
    ProcessCreated { subjob: SubJobId, core: CoreId },
    /// Agent route: the sub-job's data has been copied to the target.
    DataTransferred {
        subjob: SubJobId,
        from: CoreId,
        to: CoreId,
        kb: u64,
    },
    /// Agent route: one dependency peer was told the new location.
    DependentNotified {
        dependent: SubJobId,
        subjob: SubJobId,
        new_location: CoreId,
    },
    /// Agent route: the old process on the vacated core is gone.
    ProcessTerminated { subjob: SubJobId, core: CoreId },
    /// Agent route: the moved agent re-established one dependency link.
    DependencyReestablished { subjob: SubJobId, peer: SubJobId },
    /// Core route: all links re-bound in a single step.
    DependencyRebound { subjob: SubJobId, links: u32 },
    MigrationCompleted {
        mover: Mover,
        subjob: SubJobId,
        core: CoreId,
        reinstate_ms: Millis,
    },
    /// A reactive strategy rewound the job to its latest snapshot (or the
    /// start) after a fault.
    RollbackPerformed { to_ms: Millis, lost_ms: Millis },
    /// Recovery finished and execution is back to normal.
    ReinstateCompleted {
        strategy: StrategyKind,
        duration_ms: Millis,
    },
    /// Cold restart: all progress discarded, execution restarts from zero.
    ColdRestarted { lost_ms: Millis },
    /// Emulation: one work chunk of a sub-job ran to completion.
    ChunkExecuted {
        subjob: SubJobId,
        core: CoreId,
        chunk: u32,
        of: u32,
    },
    /// Emulation: a completed sub-job sent its partial result downstream.
    PartialResultSent {
        from: SubJobId,
        to: SubJobId,
        items: u64,
    },
    SubJobCompleted { subjob: SubJobId, core: CoreId },
    JobCompleted,
    JobFailed { reason: String },
}

impl Event {
    /// Serializes the trace as JSON lines, one event per line.
    pub fn to_json_lines(events: &[Event]) -> String {
        let mut out = String::new();
        for e in events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_serialize_with_flattened_kind_tags() {
        let e = Event {
            at_ms: 840_000,
            seq: 3,
            kind: EventKind::FaultInjected { core: CoreId(2) },
        };
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(
            json,
            r#"{"at_ms":840000,"seq":3,"kind":"fault-injected","core":2}"#
        );
        let back: Event = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn json_lines_has_one_event_per_line() {
        let events = vec![
            Event {
                at_ms: 0,
                seq: 0,
                kind: EventKind::JobCompleted,
            },
            Event {
                at_ms: 1,
                seq: 1,
                kind: EventKind::JobFailed {
                    reason: "no viable migration target".into(),
                },
            },
        ];
        let lines = Event::to_json_lines(&events);
        assert_eq!(lines.lines().count(), 2);
    }
}
