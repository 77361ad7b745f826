//! Fault injection and failure prediction.
//!
//! Faults are generated per *interval*: the run horizon is partitioned at
//! the strategy's periodicity boundaries (which coincide with checkpoint
//! instants for checkpointing strategies), and each interval receives
//! `failures_per_interval` faults at a mode-dependent offset. The predictor
//! turns a configurable fraction of faults into advance predictions and, at
//! imperfect precision, also raises false alarms as a Poisson process.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cluster, CoreId, CoreStatus};
use crate::{sec, Millis, MS_PER_SEC};

/// How fault instants are placed within each interval.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultMode {
    /// Every interval faults at the same fixed offset.
    Periodic,
    /// Each interval faults at an offset sampled uniformly over its length.
    Random,
    /// Like `random`, but the offset is pinned to the configured mean value,
    /// so repeated trials reproduce exactly.
    RandomFixedMean,
}

/// Which core a fault strikes.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FaultTarget {
    /// Resolved when the fault (or its prediction) takes effect: uniform
    /// over the cores currently hosting live sub-jobs. Failures of idle
    /// cores never perturb the tracked job, so they are outside the
    /// accounting.
    UniformRandomCore,
    /// Always strikes the given core.
    FixedCore { core: CoreId },
}

/// Declarative fault injection plan.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub mode: FaultMode,
    /// Offset into each interval, in seconds. Required for `periodic` and
    /// `random-fixed-mean`; must be absent for `random`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_s: Option<u64>,
    /// Coincident faults injected per interval (default 1, 0 disables).
    #[serde(default = "default_failures_per_interval")]
    pub failures_per_interval: u32,
    #[serde(default = "default_target")]
    pub target: FaultTarget,
    /// Whether a final interval shorter than the nominal one still receives
    /// faults (when the offset fits). Default true; switching it off models
    /// schedules that skip the truncated tail interval.
    #[serde(default = "default_truncated_interval_faults")]
    pub truncated_interval_faults: bool,
}

fn default_failures_per_interval() -> u32 {
    1
}

fn default_target() -> FaultTarget {
    FaultTarget::UniformRandomCore
}

fn default_truncated_interval_faults() -> bool {
    true
}

impl FaultSpec {
    /// A spec injecting nothing, for fault-free baselines.
    pub fn none() -> Self {
        Self {
            mode: FaultMode::Periodic,
            offset_s: Some(0),
            failures_per_interval: 0,
            target: FaultTarget::UniformRandomCore,
            truncated_interval_faults: true,
        }
    }
}

/// One scheduled fault. `core` is `None` until the target resolves at
/// impact (uniform-random targets), or fixed up front.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FaultInstant {
    pub at_ms: Millis,
    pub core: Option<CoreId>,
}

/// The materialized fault plan for one run, sorted by time (stable for
/// coincident faults).
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct FaultSchedule {
    pub instants: Vec<FaultInstant>,
}

impl FaultSchedule {
    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    /// One JSON object per fault, `{"time_s":…,"core":…}`, for audit.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for f in &self.instants {
            let line = serde_json::json!({
                "time_s": f.at_ms as f64 / MS_PER_SEC as f64,
                "core": f.core.map(|c| c.0),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Errors in fault or predictor configuration.
#[derive(Debug, Error, PartialEq)]
pub enum FailureError {
    #[error("fault mode {0:?} requires offset_s")]
    MissingOffset(FaultMode),
    #[error("fault mode random samples its offsets; offset_s must be absent")]
    UnexpectedOffset,
    #[error("invalid predictor parameters: {0}")]
    BadPredictor(String),
}

/// Uniform offset in `[0, interval_len_ms)`.
pub fn sample_random_offset(rng: &mut ChaCha8Rng, interval_len_ms: Millis) -> Millis {
    if interval_len_ms == 0 {
        return 0;
    }
    rng.gen_range(0..interval_len_ms)
}

/// Expands a fault spec over the horizon.
///
/// `boundaries_s` (ascending, strictly inside the horizon) partition
/// `[0, horizon)` into intervals; each interval receives the spec's faults
/// at its mode's offset when the offset fits inside the interval. With
/// `truncated_interval_faults` off, intervals shorter than the first
/// (nominal) interval are skipped entirely.
pub fn build_fault_schedule(
    spec: &FaultSpec,
    boundaries_s: &[u64],
    horizon_s: u64,
    rng: &mut ChaCha8Rng,
) -> Result<FaultSchedule, FailureError> {
    match spec.mode {
        FaultMode::Periodic | FaultMode::RandomFixedMean if spec.offset_s.is_none() => {
            return Err(FailureError::MissingOffset(spec.mode));
        }
        FaultMode::Random if spec.offset_s.is_some() => {
            return Err(FailureError::UnexpectedOffset);
        }
        _ => {}
    }

    let mut starts: Vec<Millis> = Vec::with_capacity(boundaries_s.len() + 1);
    starts.push(0);
    starts.extend(
        boundaries_s
            .iter()
            .copied()
            .filter(|b| *b > 0 && *b < horizon_s)
            .map(sec),
    );
    let horizon_ms = sec(horizon_s);
    let mut instants = Vec::new();
    let nominal_len = starts.get(1).copied().unwrap_or(horizon_ms);
    for (i, start) in starts.iter().copied().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(horizon_ms);
        let len = end - start;
        if len == 0 {
            continue;
        }
        if !spec.truncated_interval_faults && len < nominal_len {
            continue;
        }
        for _ in 0..spec.failures_per_interval {
            let offset = match spec.mode {
                FaultMode::Periodic | FaultMode::RandomFixedMean => {
                    sec(spec.offset_s.expect("checked above"))
                }
                FaultMode::Random => sample_random_offset(rng, len),
            };
            if offset < len {
                instants.push(FaultInstant {
                    at_ms: start + offset,
                    core: match spec.target {
                        FaultTarget::FixedCore { core } => Some(core),
                        FaultTarget::UniformRandomCore => None,
                    },
                });
            }
        }
    }
    instants.sort_by_key(|f| f.at_ms);
    Ok(FaultSchedule { instants })
}

/// Failure predictor quality knobs.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorParams {
    /// Fraction of real faults predicted in advance.
    pub coverage: f64,
    /// Fraction of predictions that are true; the rest are false alarms.
    pub precision: f64,
    /// How far ahead of the fault a prediction is issued, in seconds.
    pub lead_time_s: u64,
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            coverage: 0.29,
            precision: 0.64,
            lead_time_s: 38,
        }
    }
}

impl PredictorParams {
    /// A predictor that sees every fault coming and never cries wolf, for
    /// exactly reproducible scenarios.
    pub fn exact() -> Self {
        Self {
            coverage: 1.0,
            precision: 1.0,
            ..Self::default()
        }
    }

    pub fn lead_ms(&self) -> Millis {
        sec(self.lead_time_s)
    }

    pub fn validate(&self) -> Result<(), FailureError> {
        if !(0.0..=1.0).contains(&self.coverage) || !self.coverage.is_finite() {
            return Err(FailureError::BadPredictor(format!(
                "coverage {} outside [0, 1]",
                self.coverage
            )));
        }
        if !(self.precision > 0.0 && self.precision <= 1.0) {
            return Err(FailureError::BadPredictor(format!(
                "precision {} outside (0, 1]",
                self.precision
            )));
        }
        Ok(())
    }
}

/// Why a prediction was raised.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionOutcome {
    /// Pairs with a real fault at `issued_at_ms + lead`.
    TruePositive,
    /// No fault follows; the recovery work it triggers is wasted.
    FalseAlarm,
}

/// One predictor verdict about a core.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Prediction {
    pub core: CoreId,
    pub issued_at_ms: Millis,
    /// The paired fault instant for true positives.
    pub fault_at_ms: Option<Millis>,
    pub outcome: PredictionOutcome,
}

/// Decides whether a fault at `fault_at_ms` is seen in advance. Draws one
/// Bernoulli(coverage) sample; faults earlier than the lead time cannot be
/// predicted (there is no one to warn yet) and consume no randomness.
pub fn classify_fault(
    fault_at_ms: Millis,
    params: &PredictorParams,
    rng: &mut ChaCha8Rng,
) -> bool {
    if fault_at_ms < params.lead_ms() {
        return false;
    }
    rng.gen_bool(params.coverage)
}

/// False alarms arrive as a Poisson process whose rate keeps the configured
/// precision given the rate of predictions that materialize:
/// `rate_false = rate_true * (1-p) / p`, so that true predictions make up a
/// `p` fraction of all predictions issued.
pub fn false_alarm_rate_per_hour(true_rate_per_hour: f64, precision: f64) -> f64 {
    true_rate_per_hour * (1.0 - precision) / precision
}

/// Samples the false-alarm instants over `[0, horizon_ms)`.
pub fn emit_false_predictions(
    params: &PredictorParams,
    true_rate_per_hour: f64,
    horizon_ms: Millis,
    rng: &mut ChaCha8Rng,
) -> Vec<Millis> {
    let rate = false_alarm_rate_per_hour(true_rate_per_hour, params.precision);
    if rate <= 0.0 || horizon_ms == 0 {
        return Vec::new();
    }
    let hour_ms = 3_600_000.0;
    let mut out = Vec::new();
    let mut t = 0.0f64;
    loop {
        // Exponential inter-arrival via inverse transform; 1-U avoids ln(0).
        let u: f64 = rng.gen();
        t += -((1.0 - u).ln()) / rate * hour_ms;
        if t >= horizon_ms as f64 {
            return out;
        }
        out.push(t as Millis);
    }
}

/// A liveness probe: failed cores stop answering, predicted-fail cores still
/// answer until the fault lands.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub prober: CoreId,
    pub probed: CoreId,
    pub at_ms: Millis,
    pub alive: bool,
}

pub fn probe(cluster: &Cluster, prober: CoreId, probed: CoreId, at_ms: Millis) -> ProbeReport {
    ProbeReport {
        prober,
        probed,
        at_ms,
        alive: cluster.status(probed) != CoreStatus::Failed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    fn periodic(offset_s: u64) -> FaultSpec {
        FaultSpec {
            mode: FaultMode::Periodic,
            offset_s: Some(offset_s),
            failures_per_interval: 1,
            target: FaultTarget::UniformRandomCore,
            truncated_interval_faults: true,
        }
    }

    fn times_s(sched: &FaultSchedule) -> Vec<u64> {
        sched.instants.iter().map(|f| f.at_ms / MS_PER_SEC).collect()
    }

    #[test]
    fn periodic_fault_in_every_hourly_interval() {
        // Five-hour horizon, hourly boundaries, fault 14 minutes in.
        let sched =
            build_fault_schedule(&periodic(840), &[3600, 7200, 10800, 14400], 18_000, &mut rng())
                .unwrap();
        assert_eq!(times_s(&sched), vec![840, 4440, 8040, 11640, 15240]);
    }

    #[test]
    fn fixed_mean_single_interval() {
        let spec = FaultSpec {
            mode: FaultMode::RandomFixedMean,
            offset_s: Some(1874),
            ..periodic(0)
        };
        let sched = build_fault_schedule(&spec, &[], 3600, &mut rng()).unwrap();
        assert_eq!(times_s(&sched), vec![1874]);
    }

    #[test]
    fn truncated_tail_interval_flag() {
        // Four-hour periodicity over five hours: the tail interval is only
        // one hour long. By default the 56-minute offset still fits; with the
        // flag off the truncated interval is skipped.
        let with = build_fault_schedule(&periodic(3360), &[14_400], 18_000, &mut rng()).unwrap();
        assert_eq!(times_s(&with), vec![3360, 17_760]);

        let spec = FaultSpec {
            truncated_interval_faults: false,
            ..periodic(3360)
        };
        let without = build_fault_schedule(&spec, &[14_400], 18_000, &mut rng()).unwrap();
        assert_eq!(times_s(&without), vec![3360]);
    }

    #[test]
    fn offset_that_misses_a_short_interval_is_dropped() {
        // 63-minute offset never fits an hourly interval.
        let sched = build_fault_schedule(&periodic(3802), &[3600], 7200, &mut rng()).unwrap();
        assert!(sched.is_empty());
    }

    #[test]
    fn five_coincident_faults_per_interval() {
        let spec = FaultSpec {
            failures_per_interval: 5,
            ..periodic(900)
        };
        let sched = build_fault_schedule(&spec, &[], 3600, &mut rng()).unwrap();
        assert_eq!(times_s(&sched), vec![900; 5]);
    }

    #[test]
    fn zero_failures_yields_empty_schedule() {
        let sched = build_fault_schedule(&FaultSpec::none(), &[600], 1200, &mut rng()).unwrap();
        assert!(sched.is_empty());
    }

    #[test]
    fn random_mode_validates_offset_and_stays_inside_intervals() {
        let spec = FaultSpec {
            mode: FaultMode::Random,
            offset_s: None,
            ..periodic(0)
        };
        let sched = build_fault_schedule(&spec, &[60], 120, &mut rng()).unwrap();
        assert_eq!(sched.len(), 2);
        assert!(sched.instants[0].at_ms < 60_000);
        assert!((60_000..120_000).contains(&sched.instants[1].at_ms));

        let bad = FaultSpec {
            mode: FaultMode::Random,
            offset_s: Some(5),
            ..periodic(0)
        };
        assert_eq!(
            build_fault_schedule(&bad, &[], 120, &mut rng()).unwrap_err(),
            FailureError::UnexpectedOffset
        );
        let missing = FaultSpec {
            offset_s: None,
            ..periodic(0)
        };
        assert_eq!(
            build_fault_schedule(&missing, &[], 120, &mut rng()).unwrap_err(),
            FailureError::MissingOffset(FaultMode::Periodic)
        );
    }

    #[test]
    fn random_offsets_are_uniform_over_the_interval() {
        let mut r = rng();
        let n = 5_000u64;
        let len = sec(3600);
        let sum: u64 = (0..n).map(|_| sample_random_offset(&mut r, len)).sum();
        let mean_s = sum as f64 / n as f64 / MS_PER_SEC as f64;
        // Uniform mean is 1800 s; 5000 samples put 3 sigma near 44 s.
        assert!((mean_s - 1800.0).abs() < 60.0, "mean {mean_s}");
    }

    #[test]
    fn coverage_fraction_matches_monte_carlo() {
        let params = PredictorParams::default();
        let mut r = rng();
        let n = 10_000;
        let predicted = (0..n)
            .filter(|_| classify_fault(sec(100), &params, &mut r))
            .count();
        let frac = predicted as f64 / n as f64;
        assert!((frac - 0.29).abs() < 0.02, "predicted fraction {frac}");
    }

    #[test]
    fn faults_inside_the_lead_window_are_never_predicted() {
        let params = PredictorParams {
            coverage: 1.0,
            ..PredictorParams::default()
        };
        let mut r = rng();
        assert!(!classify_fault(sec(37), &params, &mut r));
        assert!(classify_fault(sec(38), &params, &mut r));
    }

    #[test]
    fn false_alarm_rate_balances_precision() {
        let rate = false_alarm_rate_per_hour(1.0, 0.64);
        assert!((rate - 0.5625).abs() < 1e-12, "{rate}");
        assert_eq!(false_alarm_rate_per_hour(1.0, 1.0), 0.0);
    }

    #[test]
    fn false_alarms_arrive_at_the_poisson_rate() {
        let params = PredictorParams::default();
        let hours = 10_000u64;
        let alarms =
            emit_false_predictions(&params, 1.0, sec(hours * 3600), &mut rng());
        let rate = alarms.len() as f64 / hours as f64;
        assert!((rate - 0.5625).abs() < 0.05, "rate {rate}");
        assert!(alarms.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn perfect_precision_never_raises_false_alarms() {
        let alarms = emit_false_predictions(
            &PredictorParams::exact(),
            1.0,
            sec(1_000_000),
            &mut rng(),
        );
        assert!(alarms.is_empty());
    }

    #[test]
    fn probes_report_liveness() {
        use crate::model::{Cluster, TopologySpec};
        let mut cluster = Cluster::build(&TopologySpec::Complete { cores: 3 }).unwrap();
        cluster.set_status(CoreId(2), CoreStatus::PredictedFail);
        assert!(probe(&cluster, CoreId(0), CoreId(2), 5).alive);
        cluster.set_status(CoreId(2), CoreStatus::Failed);
        let report = probe(&cluster, CoreId(0), CoreId(2), 6);
        assert!(!report.alive);
        assert_eq!((report.prober, report.probed, report.at_ms), (CoreId(0), CoreId(2), 6));
    }
}
