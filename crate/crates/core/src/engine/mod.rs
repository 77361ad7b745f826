//! The deterministic simulation engine.
//!
//! A [`Scenario`] fully describes one experiment: the job, the cluster, the
//! fault plan, the predictor, and the fault-tolerance strategy. Running it
//! produces a [`Trace`] — an ordered event log plus per-fault cost
//! breakdowns — in one of two modes:
//!
//! * **timing**: events carry calibrated costs and the total execution time
//!   is composed arithmetically, reproducing the reference measurement
//!   tables;
//! * **emulation**: sub-jobs actually compute (integer reduction or genome
//!   pattern search) in simulated time, and live partial state migrates
//!   between cores when failures are predicted.
//!
//! Determinism contract: one run is single-threaded, events are ordered by
//! `(at_ms, insertion seq)`, and all randomness flows from the scenario seed
//! through fixed, documented generator streams. Identical `(scenario, seed)`
//! yield byte-identical traces.

mod emulation;
mod event;
mod moves;
mod timing;

pub use event::{Event, EventKind};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::failure::{
    build_fault_schedule, classify_fault, emit_false_predictions, FailureError, FaultSchedule,
    FaultSpec, PredictorParams,
};
use crate::model::{
    decompose_job, place_on_agents, scenario_dependency_count, Agent, Cluster, CoreId,
    DependencyGraph, JobSpec, ModelError, SubJobId, TopologySpec,
};
use crate::strategy::{
    CheckpointServer, CostModel, CostModelPatch, FaultCharge, Mover, ServerId, StrategyError,
    StrategyKind,
};
use crate::workloads::{HitRecord, WorkloadError};
use crate::{sec, Millis};

// Sub-generator streams drawn from the scenario seed. Streams 3–5 belong to
// the workloads (sequence, pattern and leaf-value synthesis); the engine owns
// the rest so no consumer ever reads another's randomness.
const RNG_STREAM_FAULTS: u64 = 0;
const RNG_STREAM_PREDICTOR: u64 = 1;
const RNG_STREAM_FALSE_ALARMS: u64 = 2;
const RNG_STREAM_TARGETS: u64 = 6;

/// What a run actually does with the sub-jobs.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Costs are charged from the calibrated model; nothing computes.
    #[default]
    Timing,
    /// Sub-jobs execute their workload in simulated time and produce the
    /// root result.
    Emulation,
}

/// How checkpoint servers are provisioned.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckpointServersSpec {
    /// Standalone central servers. The first is the primary; the multi-server
    /// strategy replicates each record to all the others.
    pub central: u32,
    /// Decentralised layout: one server attached to every `decentral_stride`-th
    /// core (0 disables).
    pub decentral_stride: u32,
}

impl Default for CheckpointServersSpec {
    fn default() -> Self {
        Self {
            central: 3,
            decentral_stride: 2,
        }
    }
}

impl CheckpointServersSpec {
    /// Materializes the server list for one checkpointing strategy.
    pub fn build(&self, strategy: StrategyKind, cluster: &Cluster) -> Vec<CheckpointServer> {
        match strategy {
            StrategyKind::CkptDecentral => {
                if self.decentral_stride == 0 {
                    return Vec::new();
                }
                cluster
                    .cores()
                    .iter()
                    .step_by(self.decentral_stride as usize)
                    .enumerate()
                    .map(|(i, c)| CheckpointServer {
                        id: ServerId(i as u32),
                        attached_core: Some(c.id),
                    })
                    .collect()
            }
            _ => (0..self.central)
                .map(|i| CheckpointServer {
                    id: ServerId(i),
                    attached_core: None,
                })
                .collect(),
        }
    }
}

fn default_tie_break() -> Mover {
    Mover::Core
}

fn default_trials() -> u32 {
    1
}

/// One complete experiment description. Serializable as the scenario file
/// the CLI consumes; unknown keys are rejected.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub strategy: StrategyKind,
    /// Checkpointing strategy layered under a proactive one: unpredicted
    /// faults roll back instead of killing the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backstop: Option<StrategyKind>,
    #[serde(default)]
    pub mode: Mode,
    pub seed: u64,
    /// Fault-free execution time of the job, in seconds.
    pub base_duration_s: u64,
    /// Checkpoint (and fault-interval) periodicity, in seconds.
    pub periodicity_s: u64,
    pub topology: TopologySpec,
    pub job: JobSpec,
    pub faults: FaultSpec,
    #[serde(default)]
    pub predictor: PredictorParams,
    #[serde(default)]
    pub checkpoint_servers: CheckpointServersSpec,
    /// Mover chosen when every hybrid decision rule passes.
    #[serde(default = "default_tie_break")]
    pub hybrid_tie_break: Mover,
    /// Default trial count when the caller does not override it.
    #[serde(default = "default_trials")]
    pub trials: u32,
    /// Entry-wise overrides merged over the built-in cost model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_overrides: Option<CostModelPatch>,
}

impl Scenario {
    /// The canonical JSON form (field order fixed by declaration), used for
    /// digests that pin presets against silent drift.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenarios serialize")
    }
}

/// Did the run finish its job?
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Per-fault (or per-false-alarm) accounting attached to a trace.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct FaultBreakdown {
    /// The struck (or falsely accused) core.
    pub core: CoreId,
    pub predicted: bool,
    #[serde(flatten)]
    pub charge: FaultCharge,
}

/// The root sub-job's output in emulation mode.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "workload", rename_all = "kebab-case")]
pub enum RootResult {
    ReductionSum { sum: i64 },
    GenomeSearch { hits: Vec<HitRecord> },
}

/// Everything one run produced.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<Event>,
    pub status: RunStatus,
    /// Total execution time: base plus all charges in timing mode, the root
    /// completion instant in emulation mode. A failed run reports the
    /// instant it died.
    pub total_ms: Millis,
    pub breakdowns: Vec<FaultBreakdown>,
    /// Present when an emulation-mode run completed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_result: Option<RootResult>,
}

impl Trace {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Sum of reinstate charges across all breakdowns.
    pub fn reinstate_ms(&self) -> Millis {
        self.breakdowns.iter().map(|b| b.charge.reinstate_ms).sum()
    }

    /// Sum of overhead charges across all breakdowns.
    pub fn overhead_ms(&self) -> Millis {
        self.breakdowns.iter().map(|b| b.charge.overhead_ms).sum()
    }

    /// Sum of lost work across all breakdowns.
    pub fn lost_ms(&self) -> Millis {
        self.breakdowns.iter().map(|b| b.charge.lost_ms).sum()
    }

    pub fn to_json_lines(&self) -> String {
        Event::to_json_lines(&self.events)
    }
}

/// Errors surfaced before or during a run.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Failure(#[from] FailureError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invariant violated mid-run: {0}")]
    Invariant(String),
}

/// A scenario validated and expanded into everything the event loops need.
/// Construction performs all configuration checks, so errors surface before
/// simulated time starts.
pub(crate) struct Setup {
    pub scenario: Scenario,
    pub cost: CostModel,
    pub graph: DependencyGraph,
    pub cluster: Cluster,
    pub agents: Vec<Agent>,
    pub hosting: BTreeMap<SubJobId, CoreId>,
    pub scenario_z: u32,
    /// Checkpoint instants (empty when no checkpointing layer is active).
    pub checkpoints_ms: Vec<Millis>,
    /// The strategy whose servers hold checkpoints: the run's own for the
    /// reactive ones, the backstop for proactive runs, else `None`.
    pub ckpt_kind: Option<StrategyKind>,
    pub servers: Vec<CheckpointServer>,
    pub schedule: FaultSchedule,
    /// Per-fault predictor verdicts (all false for reactive strategies).
    pub predicted: Vec<bool>,
    pub false_alarms_ms: Vec<Millis>,
    /// Target-resolution generator, drawn in event order.
    pub targets_rng: ChaCha8Rng,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Setup {
    pub fn prepare(scenario: &Scenario) -> Result<Self, EngineError> {
        if scenario.base_duration_s == 0 {
            return Err(EngineError::InvalidScenario(
                "base_duration_s must be positive".into(),
            ));
        }
        if scenario.periodicity_s == 0 {
            return Err(EngineError::InvalidScenario(
                "periodicity_s must be positive".into(),
            ));
        }
        scenario.predictor.validate()?;
        match scenario.backstop {
            Some(_) if !scenario.strategy.is_proactive() => {
                return Err(EngineError::InvalidScenario(format!(
                    "backstop is a layer under proactive strategies; {} recovers by itself",
                    scenario.strategy.label()
                )));
            }
            Some(b) if !b.is_checkpointing() => {
                return Err(EngineError::InvalidScenario(format!(
                    "backstop must be a checkpointing strategy, not {}",
                    b.label()
                )));
            }
            _ => {}
        }

        let mut cost = CostModel::default();
        if let Some(patch) = &scenario.cost_overrides {
            cost.apply_patch(patch);
        }
        cost.validate().map_err(EngineError::Strategy)?;

        let graph = decompose_job(&scenario.job)?;
        let cluster = Cluster::build(&scenario.topology)?;
        let agents = place_on_agents(&graph, &cluster)?;
        let hosting: BTreeMap<SubJobId, CoreId> =
            agents.iter().map(|a| (a.payload, a.location)).collect();
        if let crate::failure::FaultTarget::FixedCore { core } = scenario.faults.target {
            if cluster.get(core).is_none() {
                return Err(EngineError::InvalidScenario(format!(
                    "fault target {core} is outside the {}-core cluster",
                    cluster.cores().len()
                )));
            }
        }

        let boundaries_s: Vec<u64> = (1..)
            .map(|k| k * scenario.periodicity_s)
            .take_while(|b| *b < scenario.base_duration_s)
            .collect();
        let ckpt_kind = if scenario.strategy.is_checkpointing() {
            Some(scenario.strategy)
        } else {
            scenario.backstop
        };
        let checkpoints_ms: Vec<Millis> = if ckpt_kind.is_some() {
            boundaries_s.iter().map(|s| sec(*s)).collect()
        } else {
            Vec::new()
        };
        let servers = match ckpt_kind {
            Some(kind) => {
                let servers = scenario.checkpoint_servers.build(kind, &cluster);
                if servers.is_empty() {
                    return Err(EngineError::Strategy(StrategyError::NoServers {
                        strategy: kind,
                    }));
                }
                servers
            }
            None => Vec::new(),
        };

        let mut faults_rng = stream_rng(scenario.seed, RNG_STREAM_FAULTS);
        let schedule = build_fault_schedule(
            &scenario.faults,
            &boundaries_s,
            scenario.base_duration_s,
            &mut faults_rng,
        )?;

        // The predictor only runs when a proactive strategy subscribes to it;
        // reactive runs draw nothing, keeping their traces seed-stable across
        // predictor settings.
        let mut predictor_rng = stream_rng(scenario.seed, RNG_STREAM_PREDICTOR);
        let predicted: Vec<bool> = if scenario.strategy.is_proactive() {
            schedule
                .instants
                .iter()
                .map(|f| classify_fault(f.at_ms, &scenario.predictor, &mut predictor_rng))
                .collect()
        } else {
            vec![false; schedule.len()]
        };
        // False alarms balance the *materialized* predictions: precision is
        // the fraction of all predictions that come true, so the Poisson rate
        // keys off the realized true-prediction count, not the fault count.
        let true_predictions = predicted.iter().filter(|p| **p).count();
        let false_alarms_ms = if scenario.strategy.is_proactive() && true_predictions > 0 {
            let hours = scenario.base_duration_s as f64 / 3_600.0;
            let true_rate = true_predictions as f64 / hours;
            emit_false_predictions(
                &scenario.predictor,
                true_rate,
                sec(scenario.base_duration_s),
                &mut stream_rng(scenario.seed, RNG_STREAM_FALSE_ALARMS),
            )
        } else {
            Vec::new()
        };

        Ok(Self {
            scenario: scenario.clone(),
            cost,
            scenario_z: scenario_dependency_count(&graph),
            graph,
            cluster,
            agents,
            hosting,
            checkpoints_ms,
            ckpt_kind,
            servers,
            schedule,
            predicted,
            false_alarms_ms,
            targets_rng: stream_rng(scenario.seed, RNG_STREAM_TARGETS),
        })
    }
}

/// Collects events, assigning the insertion sequence that breaks timestamp
/// ties deterministically.
#[derive(Default)]
pub(crate) struct TraceBuilder {
    events: Vec<Event>,
    seq: u64,
}

impl TraceBuilder {
    pub fn push(&mut self, at_ms: Millis, kind: EventKind) {
        debug_assert!(
            self.events.last().map_or(true, |e| e.at_ms <= at_ms),
            "event time went backwards: {} after {}",
            at_ms,
            self.events.last().unwrap().at_ms
        );
        self.events.push(Event {
            at_ms,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    pub fn extend(&mut self, batch: impl IntoIterator<Item = (Millis, EventKind)>) {
        for (at_ms, kind) in batch {
            self.push(at_ms, kind);
        }
    }

    pub fn finish(self) -> Vec<Event> {
        self.events
    }
}

/// Runs one scenario to completion (or failure) and returns its trace.
pub fn run_scenario(scenario: &Scenario) -> Result<Trace, EngineError> {
    let setup = Setup::prepare(scenario)?;
    match scenario.mode {
        Mode::Timing => timing::run(setup),
        Mode::Emulation => emulation::run(setup),
    }
}

/// Mean/min/max of one per-trace quantity, in milliseconds.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Stats {
    pub mean_ms: f64,
    pub min_ms: Millis,
    pub max_ms: Millis,
}

impl Stats {
    fn over(values: impl Iterator<Item = Millis>) -> Self {
        let (mut n, mut sum) = (0u64, 0u128);
        let (mut min, mut max) = (Millis::MAX, 0);
        for v in values {
            n += 1;
            sum += v as u128;
            min = min.min(v);
            max = max.max(v);
        }
        if n == 0 {
            return Self {
                mean_ms: 0.0,
                min_ms: 0,
                max_ms: 0,
            };
        }
        Self {
            mean_ms: sum as f64 / n as f64,
            min_ms: min,
            max_ms: max,
        }
    }
}

/// Aggregate over a batch of trials.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct TrialAggregate {
    pub trials: u32,
    pub completed: u32,
    pub total: Stats,
    pub reinstate: Stats,
    pub overhead: Stats,
}

/// A batch of trials plus its aggregate, in trial order.
#[derive(Clone, PartialEq, Debug)]
pub struct TrialsReport {
    pub traces: Vec<Trace>,
    pub aggregate: TrialAggregate,
}

/// Runs `trials` independent repetitions of the scenario; trial `i` uses
/// seed `seed + i`. Up to `jobs` trials run in parallel — results are
/// collected by trial index, so the report does not depend on scheduling.
pub fn run_trials(scenario: &Scenario, trials: u32, jobs: usize) -> Result<TrialsReport, EngineError> {
    if trials == 0 {
        return Err(EngineError::InvalidScenario("trials must be >= 1".into()));
    }
    let seeds: Vec<u64> = (0..trials as u64)
        .map(|i| scenario.seed.wrapping_add(i))
        .collect();
    let run_one = |seed: u64| {
        let trial = Scenario {
            seed,
            ..scenario.clone()
        };
        run_scenario(&trial)
    };

    let results: Vec<Result<Trace, EngineError>> = if jobs <= 1 || trials == 1 {
        seeds.iter().map(|s| run_one(*s)).collect()
    } else {
        let slots: std::sync::Mutex<Vec<Option<Result<Trace, EngineError>>>> =
            std::sync::Mutex::new((0..trials as usize).map(|_| None).collect());
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(trials as usize) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= seeds.len() {
                        return;
                    }
                    let out = run_one(seeds[i]);
                    slots.lock().expect("no poisoned trials")[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .expect("no poisoned trials")
            .into_iter()
            .map(|s| s.expect("every trial ran"))
            .collect()
    };

    let mut traces = Vec::with_capacity(results.len());
    for r in results {
        traces.push(r?);
    }
    let aggregate = TrialAggregate {
        trials,
        completed: traces.iter().filter(|t| t.completed()).count() as u32,
        total: Stats::over(traces.iter().map(|t| t.total_ms)),
        reinstate: Stats::over(traces.iter().map(Trace::reinstate_ms)),
        overhead: Stats::over(traces.iter().map(Trace::overhead_ms)),
    };
    Ok(TrialsReport { traces, aggregate })
}
