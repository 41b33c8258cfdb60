//! Simulation against analysis, receiver by receiver.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::{self, AnalysisError, AnalyticReport};
use crate::simulator::{self, extract_hybrid_inputs, mean_and_stderr, HybridInputs, RunReport, ScenarioConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Analyze,
    Compare,
}

impl Mode {
    fn simulates(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Compare)
    }

    fn analyzes(self) -> bool {
        matches!(self, Mode::Analyze | Mode::Compare)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simulate" => Ok(Mode::Simulate),
            "analyze" => Ok(Mode::Analyze),
            "compare" => Ok(Mode::Compare),
            other => Err(format!("unknown mode `{other}` (expected simulate, analyze or compare)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Analyze => "analyze",
            Mode::Compare => "compare",
        })
    }
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("simulation of scenario {scenario} failed: {source}")]
    Simulation {
        scenario: String,
        #[source]
        source: SimError,
    },
    #[error("analysis of scenario {scenario} failed: {source}")]
    Analysis {
        scenario: String,
        #[source]
        source: AnalysisError,
    },
    #[error("at least one seed is required")]
    NoSeeds,
}

/// Receiver group label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    High,
    Low,
    /// Capacity equal to the arrival rate, placed in the low group.
    Boundary,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::High => "H",
            Group::Low => "L",
            Group::Boundary => "L_boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverRow {
    pub receiver: usize,
    pub capacity: f64,
    pub group: Group,
    pub strongest_low: bool,
    pub empirical_rate: Option<f64>,
    pub rate_stderr: Option<f64>,
    pub analytic_rate: Option<f64>,
    pub rate_abs_error: Option<f64>,
    pub rate_rel_error: Option<f64>,
    pub empirical_mean_delay: Option<f64>,
    pub delay_stderr: Option<f64>,
    pub analytic_mean_delay: Option<f64>,
    pub delay_abs_error: Option<f64>,
    pub delay_rel_error: Option<f64>,
    pub leader_fraction: Option<f64>,
    pub success_prob: Option<f64>,
}

/// Acceptance tolerances; see [`CompareReport::violations`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Absolute error allowed for receivers expected to track the arrival
    /// rate, or their capacity when every receiver is below it.
    pub rate_abs: f64,
    pub strongest_low_rel: f64,
    pub other_low_rel: f64,
    /// Relative mean-delay error for the two strongest receivers.
    pub mean_delay_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            rate_abs: 0.01,
            strongest_low_rel: 0.10,
            other_low_rel: 0.35,
            mean_delay_rel: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub receiver: usize,
    pub metric: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "receiver {}: {} = {} exceeds {}",
            self.receiver + 1,
            self.metric,
            self.value,
            self.limit
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub config: ScenarioConfig,
    pub mode: Mode,
    pub seeds: usize,
    /// Pooled simulation counters.
    pub simulation: Option<RunReport>,
    pub replicates: Vec<RunReport>,
    pub analysis: Option<AnalyticReport>,
    pub hybrid: Option<HybridInputs>,
    pub rows: Vec<ReceiverRow>,
}

fn rel_error(empirical: f64, analytic: f64) -> f64 {
    (empirical - analytic).abs() / analytic.abs()
}

fn errors(empirical: Option<f64>, analytic: Option<f64>) -> (Option<f64>, Option<f64>) {
    match (empirical, analytic) {
        (Some(e), Some(a)) => (Some((e - a).abs()), (a != 0.0).then(|| rel_error(e, a))),
        _ => (None, None),
    }
}

/// Runs the requested sides for `seeds` replications starting at
/// `config.seed`.
pub fn run_compare(config: &ScenarioConfig, mode: Mode, seeds: usize) -> Result<CompareReport, CompareError> {
    if seeds == 0 {
        return Err(CompareError::NoSeeds);
    }
    let sim_err = |source| CompareError::Simulation {
        scenario: config.name.clone(),
        source,
    };
    config.validate().map_err(|e| sim_err(SimError::from(e)))?;

    let (replicates, simulation) = if mode.simulates() {
        let reps = simulator::run_replicates(config, seeds).map_err(sim_err)?;
        let merged = RunReport::merge(&reps).map_err(|e| sim_err(SimError::from(e)))?;
        (reps, Some(merged))
    } else {
        (Vec::new(), None)
    };

    let hybrid = match &simulation {
        Some(sim) if config.high_receivers().len() >= 2 => extract_hybrid_inputs(sim).ok(),
        _ => None,
    };
    let analysis = if mode.analyzes() {
        Some(analysis::analyze(config, hybrid.as_ref()).map_err(|source| CompareError::Analysis {
            scenario: config.name.clone(),
            source,
        })?)
    } else {
        None
    };

    let rows = build_rows(config, &replicates, simulation.as_ref(), analysis.as_ref());
    Ok(CompareReport {
        config: config.clone(),
        mode,
        seeds,
        simulation,
        replicates,
        analysis,
        hybrid,
        rows,
    })
}

fn build_rows(
    config: &ScenarioConfig,
    replicates: &[RunReport],
    sim: Option<&RunReport>,
    analytic: Option<&AnalyticReport>,
) -> Vec<ReceiverRow> {
    let partition = analysis::Partition::new(config.lambda, &config.capacities);
    (0..config.receivers())
        .map(|i| {
            let capacity = config.capacities[i];
            let group = if capacity > config.lambda {
                Group::High
            } else if capacity == config.lambda {
                Group::Boundary
            } else {
                Group::Low
            };
            let rate_stats = (!replicates.is_empty())
                .then(|| mean_and_stderr(&replicates.iter().map(|r| r.rate(i)).collect::<Vec<_>>()));
            let delays: Vec<f64> = replicates.iter().filter_map(|r| r.mean_delay(i)).collect();
            let delay_stats = (!delays.is_empty()).then(|| mean_and_stderr(&delays));

            let empirical_rate = sim.map(|s| s.rate(i));
            let analytic_rate = analytic.and_then(|a| a.rate(i));
            let (rate_abs_error, rate_rel_error) = errors(empirical_rate, analytic_rate);
            let empirical_mean_delay = sim.and_then(|s| s.mean_delay(i));
            let analytic_mean_delay = analytic.and_then(|a| a.mean_delay(i));
            let (delay_abs_error, delay_rel_error) = errors(empirical_mean_delay, analytic_mean_delay);
            ReceiverRow {
                receiver: i,
                capacity,
                group,
                strongest_low: partition.strongest_low == Some(i),
                empirical_rate,
                rate_stderr: rate_stats.map(|s| s.1),
                analytic_rate,
                rate_abs_error,
                rate_rel_error,
                empirical_mean_delay,
                delay_stderr: delay_stats.map(|s| s.1),
                analytic_mean_delay,
                delay_abs_error,
                delay_rel_error,
                leader_fraction: sim.map(|s| s.leader_fraction(i)),
                success_prob: analytic.and_then(|a| a.success[i]),
            }
        })
        .collect()
}

impl CompareReport {
    pub fn scenario(&self) -> &str {
        &self.config.name
    }

    /// True when some receiver sits exactly at the arrival rate; rate
    /// thresholds for the low group are then not enforced.
    pub fn has_boundary(&self) -> bool {
        self.rows.iter().any(|r| r.group == Group::Boundary)
    }

    /// Threshold checks on whatever sides were computed.
    pub fn violations(&self, t: &Thresholds) -> Vec<Violation> {
        let mut out = Vec::new();
        let lambda = self.config.lambda;
        let high = self.config.high_receivers().len();
        let mut check = |receiver, metric, value: f64, limit| {
            if value.is_nan() || value > limit {
                out.push(Violation {
                    receiver,
                    metric,
                    value,
                    limit,
                });
            }
        };
        for row in &self.rows {
            let i = row.receiver;
            if let Some(rate) = row.empirical_rate {
                if row.group == Group::High {
                    check(i, "|rate - lambda|", (rate - lambda).abs(), t.rate_abs);
                } else if high == 0 && row.strongest_low {
                    check(i, "|rate - capacity|", (rate - row.capacity).abs(), t.rate_abs);
                }
            }
            if row.group != Group::High && !self.has_boundary() && row.empirical_rate.is_some() {
                if let Some(analysis) = &self.analysis {
                    let limit = if row.strongest_low { t.strongest_low_rel } else { t.other_low_rel };
                    match row.rate_rel_error {
                        Some(e) => check(i, "rate relative error", e, limit),
                        None if analysis.rate(i).is_none() => check(i, "analytic rate (non-physical)", f64::NAN, limit),
                        None => {}
                    }
                }
            }
            if high <= 1 && i < 2 {
                if let Some(e) = row.delay_rel_error {
                    check(i, "mean delay relative error", e, t.mean_delay_rel);
                }
            }
        }
        out
    }
}

/// Total-variation distance between two pmfs on `0..`, padding the shorter
/// with zeros.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
