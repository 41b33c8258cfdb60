use thiserror::Error;

/// Gaps at or beyond this value share the last histogram bucket.
pub const GAP_CAP: usize = 512;

/// Empirical statistics of one run, accumulated after the warm-up.
///
/// Everything is kept as raw counts so that replications can be pooled by
/// summation; the accessor methods turn counts into rates and fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub seeds: usize,
    pub slots: u64,
    pub warmup: u64,
    pub lambda: f64,
    pub capacities: Vec<f64>,
    /// Post-warm-up slots, summed over pooled runs.
    pub measured_slots: u64,
    pub delivered: Vec<u64>,
    pub non_idle_slots: u64,
    pub idle_slots: u64,
    pub leader_slots: Vec<u64>,
    /// Slots led by at least one receiver with capacity above `lambda`.
    pub high_leader_slots: u64,
    /// Slots with more than one leader.
    pub shared_leader_slots: u64,
    /// `[receiver][leader]`: slots led by `leader` that were differential
    /// for `receiver`.
    pub differential_slots: Vec<Vec<u64>>,
    /// As `leader_slots`, but a slot with `n` leaders adds `1/n` to each.
    pub leader_weight: Vec<f64>,
    /// As `differential_slots`, weighted like `leader_weight`.
    pub differential_weight: Vec<Vec<f64>>,
    /// `[receiver][T]`: deliveries with delay `T`.
    pub delay_counts: Vec<Vec<u64>>,
    /// `[receiver][gap]`: slots where arrivals minus delivered equalled `gap`.
    pub gap_counts: Vec<Vec<u64>>,
    pub payloads_checked: u64,
    pub payload_mismatches: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no receiver has capacity above the arrival rate")]
    EmptyHigh,
    #[error("reports to merge disagree on the scenario")]
    Mismatch,
    #[error("nothing to merge")]
    Empty,
}

/// Leader and differential-knowledge fractions measured in simulation, used
/// where the analytical model has no closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridInputs {
    pub high: Vec<usize>,
    /// `leader_fraction[k]`: share of non-idle slots led by receiver `k`,
    /// with shared slots split evenly so that the shares sum to one.
    pub leader_fraction: Vec<f64>,
    /// `differential[i][k]`: share of the slots led by `k` that were
    /// differential for `i`, weighted like `leader_fraction`.
    pub differential: Vec<Vec<f64>>,
    pub beta_high: f64,
    /// Strongest receiver at or below the arrival rate, if any.
    pub strongest_low: Option<usize>,
    /// Differential share for each receiver when `strongest_low` leads.
    pub differential_low: Vec<f64>,
}

impl RunReport {
    pub fn receivers(&self) -> usize {
        self.capacities.len()
    }

    pub fn high_receivers(&self) -> Vec<usize> {
        (0..self.receivers())
            .filter(|&i| self.capacities[i] > self.lambda)
            .collect()
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.delivered[i] as f64 / self.measured_slots as f64
    }

    pub fn rates(&self) -> Vec<f64> {
        (0..self.receivers()).map(|i| self.rate(i)).collect()
    }

    fn over_non_idle(&self, count: u64) -> f64 {
        if self.non_idle_slots == 0 {
            0.0
        } else {
            count as f64 / self.non_idle_slots as f64
        }
    }

    /// Share of non-idle slots in which receiver `i` led.
    pub fn leader_fraction(&self, i: usize) -> f64 {
        self.over_non_idle(self.leader_slots[i])
    }

    pub fn beta_high(&self) -> f64 {
        self.over_non_idle(self.high_leader_slots)
    }

    pub fn shared_leader_fraction(&self) -> f64 {
        self.over_non_idle(self.shared_leader_slots)
    }

    pub fn idle_fraction(&self) -> f64 {
        self.idle_slots as f64 / self.measured_slots as f64
    }

    /// Empirical probability that a slot led by `leader` is differential for
    /// `receiver`; `None` if `leader` never led.
    pub fn differential(&self, receiver: usize, leader: usize) -> Option<f64> {
        let led = self.leader_slots[leader];
        (led > 0).then(|| self.differential_slots[receiver][leader] as f64 / led as f64)
    }

    /// Share of non-idle slots led by `i`, splitting shared slots evenly.
    pub fn leader_share(&self, i: usize) -> f64 {
        if self.non_idle_slots == 0 {
            0.0
        } else {
            self.leader_weight[i] / self.non_idle_slots as f64
        }
    }

    /// `differential` under the even split of shared slots.
    pub fn differential_share(&self, receiver: usize, leader: usize) -> Option<f64> {
        let led = self.leader_weight[leader];
        (led > 0.0).then(|| self.differential_weight[receiver][leader] / led)
    }

    pub fn deliveries_measured(&self, i: usize) -> u64 {
        self.delay_counts[i].iter().sum()
    }

    /// Delay histogram normalised to a pmf over `T = 0..`.
    pub fn delay_pmf(&self, i: usize) -> Vec<f64> {
        let total = self.deliveries_measured(i);
        if total == 0 {
            return Vec::new();
        }
        self.delay_counts[i]
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }

    pub fn mean_delay(&self, i: usize) -> Option<f64> {
        let total = self.deliveries_measured(i);
        (total > 0).then(|| {
            let sum: u64 = self.delay_counts[i]
                .iter()
                .enumerate()
                .map(|(t, &c)| t as u64 * c)
                .sum();
            sum as f64 / total as f64
        })
    }

    /// Share of measured slots in which the gap of receiver `i` was at most
    /// `bound`.
    pub fn gap_fraction_within(&self, i: usize, bound: u64) -> f64 {
        let total: u64 = self.gap_counts[i].iter().sum();
        let within: u64 = self.gap_counts[i]
            .iter()
            .take(bound as usize + 1)
            .sum();
        within as f64 / total as f64
    }

    pub fn gap_pmf(&self, i: usize) -> Vec<f64> {
        let total: u64 = self.gap_counts[i].iter().sum();
        self.gap_counts[i]
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }

    pub fn roundtrip_ok(&self) -> bool {
        self.payload_mismatches == 0
    }

    /// Pools replications by summing every counter. Rates of the pooled
    /// report are the averages of the replications' rates when their slot
    /// counts agree.
    pub fn merge(reports: &[RunReport]) -> Result<RunReport, ExtractError> {
        let (first, rest) = reports.split_first().ok_or(ExtractError::Empty)?;
        let mut out = first.clone();
        for r in rest {
            if r.capacities != out.capacities || r.lambda != out.lambda || r.scenario != out.scenario {
                return Err(ExtractError::Mismatch);
            }
            out.seeds += r.seeds;
            out.measured_slots += r.measured_slots;
            add_into(&mut out.delivered, &r.delivered);
            out.non_idle_slots += r.non_idle_slots;
            out.idle_slots += r.idle_slots;
            add_into(&mut out.leader_slots, &r.leader_slots);
            out.high_leader_slots += r.high_leader_slots;
            out.shared_leader_slots += r.shared_leader_slots;
            for (a, b) in out.differential_slots.iter_mut().zip(&r.differential_slots) {
                add_into(a, b);
            }
            for (a, b) in out.leader_weight.iter_mut().zip(&r.leader_weight) {
                *a += b;
            }
            for (a, b) in out.differential_weight.iter_mut().zip(&r.differential_weight) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            for (a, b) in out.delay_counts.iter_mut().zip(&r.delay_counts) {
                add_into(a, b);
            }
            for (a, b) in out.gap_counts.iter_mut().zip(&r.gap_counts) {
                add_into(a, b);
            }
            out.payloads_checked += r.payloads_checked;
            out.payload_mismatches += r.payload_mismatches;
        }
        Ok(out)
    }
}

fn add_into(dst: &mut Vec<u64>, src: &[u64]) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0);
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Mean and standard error of the mean over replications.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Leader and differential fractions for the receivers above the arrival
/// rate, plus the strongest remaining receiver's view.
pub fn extract_hybrid_inputs(report: &RunReport) -> Result<HybridInputs, ExtractError> {
    let high = report.high_receivers();
    if high.is_empty() {
        return Err(ExtractError::EmptyHigh);
    }
    let m = report.receivers();
    let leader_fraction: Vec<f64> = (0..m)
        .map(|k| if high.contains(&k) { report.leader_share(k) } else { 0.0 })
        .collect();
    let differential: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    if high.contains(&k) {
                        report.differential_share(i, k).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let strongest_low = (0..m).find(|&i| report.capacities[i] <= report.lambda);
    let differential_low = (0..m)
        .map(|i| strongest_low.and_then(|l| report.differential_share(i, l)).unwrap_or(0.0))
        .collect();
    Ok(HybridInputs {
        high,
        leader_fraction,
        differential,
        beta_high: report.beta_high(),
        strongest_low,
        differential_low,
    })
}
