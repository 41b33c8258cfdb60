//! Closed-form delivery-rate and delivery-delay model.
//!
//! Receivers are split into `H` (capacity strictly above the arrival rate)
//! and `L` (the rest). Members of `H` are treated as one virtual receiver
//! delivering at the arrival rate; the strongest member of `L` is the only
//! other receiver that ever leads. Leader-transmission counts are geometric,
//! so every infinite series below has a closed form; the truncated sums in
//! the tests act as the cross-check.

use thiserror::Error;

use crate::simulator::{HybridInputs, ScenarioConfig};

/// Tail mass below which a delay pmf is truncated.
pub const DELAY_TAIL: f64 = 1e-12;
/// Upper bound on the delay pmf horizon.
pub const MAX_DELAY_HORIZON: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("queue chain is not positive recurrent: lambda {lambda} >= capacity {capacity}")]
    NotRecurrent { lambda: f64, capacity: f64 },
    #[error("epsilon {0} outside (0, 1]")]
    Epsilon(f64),
    #[error("geometric series with ratio {0} does not converge")]
    Divergent(f64),
    #[error("leader-transmission normalisation is zero")]
    ZeroNormalisation,
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("more than one receiver above the arrival rate: simulated leader statistics are required")]
    MissingHybrid,
    #[error("delay pmf undefined for success probability {success} and rate {rate}")]
    DelayInputs { success: f64, rate: f64 },
    #[error("receiver {0} does not exist")]
    Receiver(usize),
}

/// Split of the receivers around the arrival rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub lambda: f64,
    pub capacities: Vec<f64>,
    pub high: Vec<usize>,
    pub low: Vec<usize>,
    /// `U_L`: strongest receiver of `L`.
    pub strongest_low: Option<usize>,
    /// Smallest capacity in `H`.
    pub c_high: Option<f64>,
    /// Capacity of `U_L`.
    pub c_low: Option<f64>,
    /// Common delivery rate of `H`: `lambda` if `H` is nonempty, else 0.
    pub rate_high: f64,
    /// Receivers whose capacity equals `lambda` exactly (placed in `L`).
    pub boundary: Vec<usize>,
}

impl Partition {
    pub fn new(lambda: f64, capacities: &[f64]) -> Self {
        let (high, low): (Vec<usize>, Vec<usize>) =
            (0..capacities.len()).partition(|&i| capacities[i] > lambda);
        let strongest_low = low
            .iter()
            .copied()
            .max_by(|&a, &b| capacities[a].total_cmp(&capacities[b]));
        let c_high = high.iter().map(|&i| capacities[i]).min_by(f64::total_cmp);
        Partition {
            lambda,
            capacities: capacities.to_vec(),
            rate_high: if high.is_empty() { 0.0 } else { lambda },
            c_low: strongest_low.map(|i| capacities[i]),
            boundary: (0..capacities.len())
                .filter(|&i| capacities[i] == lambda)
                .collect(),
            high,
            low,
            strongest_low,
            c_high,
        }
    }

    pub fn is_high(&self, i: usize) -> bool {
        self.high.contains(&i)
    }

    pub fn receivers(&self) -> usize {
        self.capacities.len()
    }
}

pub fn partition_receivers(config: &ScenarioConfig) -> Partition {
    Partition::new(config.lambda, &config.capacities)
}

fn check_probability(p: f64) -> Result<f64, AnalysisError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(AnalysisError::Probability(p))
    }
}

/// Ratio `lambda (1 - C) / ((1 - lambda) C)` of the gap chain of a receiver
/// with capacity `capacity`.
pub fn markov_ratio(lambda: f64, capacity: f64) -> Result<f64, AnalysisError> {
    check_probability(lambda)?;
    check_probability(capacity)?;
    if lambda >= capacity {
        return Err(AnalysisError::NotRecurrent { lambda, capacity });
    }
    Ok(lambda * (1.0 - capacity) / ((1.0 - lambda) * capacity))
}

/// Stationary probability that the gap between queue and receiver is `n`.
pub fn markov_state_pmf(lambda: f64, capacity: f64, n: u64) -> Result<f64, AnalysisError> {
    let r = markov_ratio(lambda, capacity)?;
    Ok((1.0 - r) * r.powf(n as f64))
}

/// Gap bound reached in a `1 - eps` share of slots, in the printed form
/// `floor(ln eps / ln r)`.
pub fn max_queue_gap(lambda: f64, capacity: f64, eps: f64) -> Result<u64, AnalysisError> {
    let r = markov_ratio(lambda, capacity)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(AnalysisError::Epsilon(eps));
    }
    if r == 0.0 || eps == 1.0 {
        return Ok(0);
    }
    Ok((eps.ln() / r.ln()).floor() as u64)
}

/// Smallest `n` whose exact cumulative mass `1 - r^(n+1)` reaches `1 - eps`.
pub fn max_queue_gap_exact(lambda: f64, capacity: f64, eps: f64) -> Result<u64, AnalysisError> {
    let r = markov_ratio(lambda, capacity)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(AnalysisError::Epsilon(eps));
    }
    if r == 0.0 || eps == 1.0 {
        return Ok(0);
    }
    let n = (eps.ln() / r.ln()).ceil() - 1.0;
    Ok(n.max(0.0) as u64)
}

/// Share of slots in which the leader belongs to `H`.
pub fn beta_high(partition: &Partition) -> f64 {
    match partition.c_high {
        Some(c_high) => partition.rate_high / c_high,
        None => 0.0,
    }
}

/// Probability of `k` unsuccessful leader transmissions of a packet
/// requested by `U_H`.
pub fn pmf_lh_star(c_high: f64, k: u64) -> f64 {
    (1.0 - c_high).powf(k as f64) * c_high
}

/// Probability of exactly `k` leader transmissions of a packet delivered to
/// `U_H`.
pub fn pmf_lh(c_high: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        (1.0 - c_high).powf((k - 1) as f64) * c_high
    }
}

/// Quantities fixing the leader-transmission law of `U_L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowLeader {
    pub beta_high: f64,
    /// Differential probability of `U_L` while `U_H` leads.
    pub diff_from_high: f64,
    pub c_low: f64,
}

impl LowLeader {
    fn normaliser(&self) -> Result<f64, AnalysisError> {
        let den = (1.0 - self.beta_high) + self.beta_high * self.diff_from_high * self.c_low;
        if den <= 0.0 {
            return Err(AnalysisError::ZeroNormalisation);
        }
        Ok(den)
    }

    /// `(ratio, scale)` with `L_L*(k) = scale * ratio^k`.
    pub fn geometric(&self) -> Result<(f64, f64), AnalysisError> {
        let den = self.normaliser()?;
        let bbar = 1.0 - self.beta_high;
        let ratio = bbar * (1.0 - self.c_low) / den;
        let scale = (bbar * self.c_low + self.beta_high * self.diff_from_high * self.c_low) / den;
        Ok((ratio, scale))
    }
}

/// Probability of `k` unsuccessful leader transmissions of a packet
/// requested by `U_L`.
pub fn pmf_ll_star(low: &LowLeader, k: u64) -> Result<f64, AnalysisError> {
    let (ratio, scale) = low.geometric()?;
    Ok(scale * ratio.powf(k as f64))
}

fn geometric_sum(scale: f64, ratio: f64) -> Result<f64, AnalysisError> {
    if ratio.abs() >= 1.0 {
        return Err(AnalysisError::Divergent(ratio));
    }
    Ok(scale / (1.0 - ratio))
}

/// Differential probability for a receiver of capacity `c_i` while `U_H`
/// leads: one minus the chance it missed every leader transmission.
pub fn diff_prob_from_high(c_i: f64, c_high: f64) -> Result<f64, AnalysisError> {
    let miss = 1.0 - c_i;
    Ok(1.0 - geometric_sum(c_high, (1.0 - c_high) * miss)?)
}

/// Differential probability for receiver `i` of `L` while `U_L` leads.
pub fn diff_prob_from_low(i: usize, partition: &Partition, low: &LowLeader) -> Result<f64, AnalysisError> {
    if partition.strongest_low == Some(i) {
        return Ok(1.0);
    }
    let c_i = *partition.capacities.get(i).ok_or(AnalysisError::Receiver(i))?;
    let miss = 1.0 - c_i;
    let (ratio, scale) = low.geometric()?;
    let missed_low = geometric_sum(scale, ratio * miss)?;
    match partition.c_high {
        None => Ok(1.0 - missed_low),
        Some(c_high) => {
            // Leader transmissions by U_H before U_L took over, assumed
            // independent of U_L's own.
            let missed_high = geometric_sum(c_high * miss, (1.0 - c_high) * miss)?;
            Ok(1.0 - missed_low * missed_high)
        }
    }
}

/// Delivery-rate estimate of one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateEstimate {
    Value(f64),
    /// The self-consistent equation has `B >= 1`.
    NonPhysical { b: f64 },
    /// Depends on a receiver whose estimate is non-physical.
    Undetermined,
}

impl RateEstimate {
    pub fn value(self) -> Option<f64> {
        match self {
            RateEstimate::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    pub beta_high: f64,
    /// `D_i^H`, defined for `L` members when `H` is nonempty.
    pub diff_high: Vec<Option<f64>>,
    /// `D_i^L`, defined for `L` members.
    pub diff_low: Vec<Option<f64>>,
    /// `B_i` for `L` members.
    pub b: Vec<Option<f64>>,
    pub rates: Vec<RateEstimate>,
    pub low_leader: Option<LowLeader>,
}

fn low_rate(
    c_i: f64,
    beta: f64,
    diff_high: Option<f64>,
    diff_low: f64,
    rate_high: f64,
    rate_low: f64,
) -> (f64, RateEstimate) {
    let dh = diff_high.unwrap_or(0.0);
    // Terms weighted by a zero probability are dropped before dividing.
    let from_high = if beta > 0.0 { beta * (1.0 - dh) * c_i / rate_high } else { 0.0 };
    let from_low = if beta < 1.0 && diff_low < 1.0 {
        (1.0 - beta) * (1.0 - diff_low) * c_i / rate_low
    } else {
        0.0
    };
    let b = from_high + from_low;
    if b >= 1.0 {
        return (b, RateEstimate::NonPhysical { b });
    }
    let rate = (beta * dh + (1.0 - beta) * diff_low) * c_i / (1.0 - b);
    (b, RateEstimate::Value(rate))
}

/// Evaluates the rate model in dependency order: `R_H`, `D_L^H`, the law of
/// `U_L`'s leader transmissions, `R_L`, then every other `L` member.
pub fn delivery_rates(partition: &Partition) -> Result<RateSolution, AnalysisError> {
    let m = partition.receivers();
    let beta = beta_high(partition);
    let mut solution = RateSolution {
        beta_high: beta,
        diff_high: vec![None; m],
        diff_low: vec![None; m],
        b: vec![None; m],
        rates: vec![RateEstimate::Undetermined; m],
        low_leader: None,
    };
    for &i in &partition.high {
        solution.rates[i] = RateEstimate::Value(partition.lambda);
    }
    let (Some(ul), Some(c_low)) = (partition.strongest_low, partition.c_low) else {
        return Ok(solution);
    };

    for &i in &partition.low {
        if let Some(c_high) = partition.c_high {
            solution.diff_high[i] = Some(diff_prob_from_high(partition.capacities[i], c_high)?);
        }
    }
    let low = LowLeader {
        beta_high: beta,
        diff_from_high: solution.diff_high[ul].unwrap_or(0.0),
        c_low,
    };
    solution.low_leader = Some(low);

    solution.diff_low[ul] = Some(1.0);
    let (b_l, rate_l) = low_rate(c_low, beta, solution.diff_high[ul], 1.0, partition.rate_high, 0.0);
    solution.b[ul] = Some(b_l);
    solution.rates[ul] = rate_l;
    let Some(r_low) = rate_l.value() else {
        return Ok(solution);
    };

    for &i in partition.low.iter().filter(|&&i| i != ul) {
        let d_low = diff_prob_from_low(i, partition, &low)?;
        solution.diff_low[i] = Some(d_low);
        let (b, rate) = low_rate(
            partition.capacities[i],
            beta,
            solution.diff_high[i],
            d_low,
            partition.rate_high,
            r_low,
        );
        solution.b[i] = Some(b);
        solution.rates[i] = rate;
    }
    Ok(solution)
}

/// Per-slot probability `d_{u_i}` that receiver `i` gets its requested
/// packet delivered. With more than one receiver in `H`, their values need
/// simulated leader and differential fractions; without them the entries
/// for `H` are `None`.
pub fn delivery_success_prob(
    partition: &Partition,
    solution: &RateSolution,
    hybrid: Option<&HybridInputs>,
) -> Vec<Option<f64>> {
    let beta = solution.beta_high;
    (0..partition.receivers())
        .map(|i| {
            let c_i = partition.capacities[i];
            if partition.is_high(i) {
                if partition.high.len() == 1 {
                    Some(beta * c_i)
                } else {
                    hybrid.map(|h| {
                        h.high
                            .iter()
                            .map(|&k| h.leader_fraction[k] * h.differential[i][k])
                            .sum::<f64>()
                            * c_i
                    })
                }
            } else {
                let dh = solution.diff_high[i].unwrap_or(0.0);
                let dl = solution.diff_low[i]?;
                Some((beta * dh + (1.0 - beta) * dl) * c_i)
            }
        })
        .collect()
}

/// Smallest `T` whose remaining tail `(d / R) (1 - d)^T` is below
/// [`DELAY_TAIL`], capped at [`MAX_DELAY_HORIZON`].
pub fn delay_horizon(success: f64, rate: f64) -> usize {
    delay_horizon_for(success, rate, DELAY_TAIL)
}

pub fn delay_horizon_for(success: f64, rate: f64, tail: f64) -> usize {
    if success >= 1.0 {
        return 1;
    }
    let lead = success / rate;
    if lead <= tail {
        return 1;
    }
    let t = ((tail / lead).ln() / (1.0 - success).ln()).ceil();
    (t.max(1.0) as usize).min(MAX_DELAY_HORIZON)
}

/// Delay pmf `P(0..=horizon)`: `d^2 (1-d)^(T-1) / R` for `T >= 1`, and the
/// complementary mass `1 - d/R` at `T = 0`.
pub fn delay_pmf(success: f64, rate: f64, horizon: usize) -> Result<Vec<f64>, AnalysisError> {
    let bad = || AnalysisError::DelayInputs { success, rate };
    if !(success > 0.0 && success <= 1.0 && rate > 0.0 && rate <= 1.0) {
        return Err(bad());
    }
    let zero = 1.0 - success / rate;
    if zero < -1e-12 {
        return Err(bad());
    }
    let mut pmf = Vec::with_capacity(horizon + 1);
    pmf.push(zero.max(0.0));
    let lead = success * success / rate;
    let mut tail = 1.0;
    for _ in 1..=horizon {
        pmf.push(lead * tail);
        tail *= 1.0 - success;
    }
    Ok(pmf)
}

/// Mean delivery delay, `1 / R`.
pub fn delay_expectation(rate: f64) -> f64 {
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / rate
    }
}

/// Everything the model says about one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReport {
    pub partition: Partition,
    pub solution: RateSolution,
    /// `d_{u_i}`; `None` where it cannot be evaluated.
    pub success: Vec<Option<f64>>,
}

impl AnalyticReport {
    pub fn rate(&self, i: usize) -> Option<f64> {
        self.solution.rates[i].value()
    }

    pub fn mean_delay(&self, i: usize) -> Option<f64> {
        self.rate(i).map(delay_expectation)
    }

    /// Delay pmf of receiver `i` truncated at `horizon`, or at the default
    /// horizon when `None`.
    pub fn delay_pmf(&self, i: usize, horizon: Option<usize>) -> Option<Result<Vec<f64>, AnalysisError>> {
        let d = self.success[i]?;
        let r = self.rate(i)?;
        let h = horizon.unwrap_or_else(|| delay_horizon(d, r));
        Some(delay_pmf(d, r, h))
    }
}

pub fn analyze(config: &ScenarioConfig, hybrid: Option<&HybridInputs>) -> Result<AnalyticReport, AnalysisError> {
    let partition = partition_receivers(config);
    let solution = delivery_rates(&partition)?;
    let success = delivery_success_prob(&partition, &solution, hybrid);
    Ok(AnalyticReport {
        partition,
        solution,
        success,
    })
}
