//! CSV output of a [`CompareReport`].

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{self, DELAY_TAIL};
use crate::compare::CompareReport;
use crate::scenario::{emit_scenario, ScenarioError};

/// Gap-bound confidence parameter.
pub const GAP_EPSILON: f64 = 0.03;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        Some(x) if x.is_nan() => String::new(),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, ReportError> {
        let path = dir.join(name);
        let writer = csv::Writer::from_path(&path).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let mut t = Table { path, writer };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), ReportError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer.write_record(&fields).map_err(|source| ReportError::Csv {
            path: self.path.display().to_string(),
            source,
        })
    }

    fn finish(mut self) -> Result<PathBuf, ReportError> {
        self.writer.flush().map_err(|source| ReportError::Io {
            path: self.path.display().to_string(),
            source,
        })?;
        Ok(self.path)
    }
}

/// Writes `rates.csv`, `leader.csv`, `delay_hist.csv`, `gap.csv`,
/// `summary.csv` and `scenario.toml` into `dir`, creating it if needed.
pub fn emit_reports(report: &CompareReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let scenario = report.scenario().to_string();
    let mut written = Vec::new();

    let mut rates = Table::create(
        dir,
        "rates.csv",
        &["scenario", "receiver", "capacity", "group", "empirical_rate", "analytic_rate", "rel_error"],
    )?;
    for row in &report.rows {
        rates.row([
            scenario.clone(),
            (row.receiver + 1).to_string(),
            num(Some(row.capacity)),
            row.group.label().to_string(),
            num(row.empirical_rate),
            num(row.analytic_rate),
            num(row.rate_rel_error),
        ])?;
    }
    written.push(rates.finish()?);

    let mut leader = Table::create(dir, "leader.csv", &["scenario", "receiver", "leader_fraction"])?;
    for row in &report.rows {
        leader.row([scenario.clone(), (row.receiver + 1).to_string(), num(row.leader_fraction)])?;
    }
    written.push(leader.finish()?);

    let mut delay = Table::create(dir, "delay_hist.csv", &["scenario", "receiver", "T", "empirical_p", "analytic_p"])?;
    for i in 0..report.config.receivers() {
        let empirical = report.simulation.as_ref().map(|s| s.delay_pmf(i)).unwrap_or_default();
        let analytic = report
            .analysis
            .as_ref()
            .and_then(|a| a.delay_pmf(i, None))
            .and_then(Result::ok)
            .unwrap_or_default();
        let len = empirical.len().max(analytic.len());
        for t in 0..len {
            delay.row([
                scenario.clone(),
                (i + 1).to_string(),
                t.to_string(),
                num(empirical.get(t).copied()),
                num(analytic.get(t).copied()),
            ])?;
        }
    }
    written.push(delay.finish()?);

    let mut gap = Table::create(dir, "gap.csv", &["scenario", "receiver", "gap", "empirical_p", "analytic_p"])?;
    let lambda = report.config.lambda;
    for i in 0..report.config.receivers() {
        let c = report.config.capacities[i];
        let empirical = report.simulation.as_ref().map(|s| s.gap_pmf(i)).unwrap_or_default();
        // The stationary gap law exists only above the arrival rate.
        let analytic_len = match analysis::markov_ratio(lambda, c) {
            Ok(r) if r > 0.0 => (DELAY_TAIL.ln() / r.ln()).ceil() as usize + 1,
            Ok(_) => 1,
            Err(_) => 0,
        };
        let analytic_len = if report.analysis.is_some() { analytic_len } else { 0 };
        for n in 0..empirical.len().max(analytic_len) {
            let analytic = (n < analytic_len)
                .then(|| analysis::markov_state_pmf(lambda, c, n as u64).ok())
                .flatten();
            gap.row([
                scenario.clone(),
                (i + 1).to_string(),
                n.to_string(),
                num(empirical.get(n).copied()),
                num(analytic),
            ])?;
        }
    }
    written.push(gap.finish()?);

    let mut summary = Table::create(
        dir,
        "summary.csv",
        &[
            "scenario",
            "mode",
            "seed",
            "seeds",
            "slots",
            "warmup",
            "lambda",
            "receiver",
            "capacity",
            "group",
            "empirical_rate",
            "rate_stderr",
            "analytic_rate",
            "rate_abs_error",
            "rate_rel_error",
            "empirical_mean_delay",
            "delay_stderr",
            "analytic_mean_delay",
            "delay_abs_error",
            "delay_rel_error",
            "leader_fraction",
            "success_prob",
            "gap_bound",
            "gap_bound_exact",
            "gap_within_bound",
            "payload_mismatches",
        ],
    )?;
    for row in &report.rows {
        let i = row.receiver;
        let bound = analysis::max_queue_gap(lambda, row.capacity, GAP_EPSILON).ok();
        let exact = analysis::max_queue_gap_exact(lambda, row.capacity, GAP_EPSILON).ok();
        let within = match (bound, &report.simulation) {
            (Some(b), Some(s)) => Some(s.gap_fraction_within(i, b)),
            _ => None,
        };
        summary.row([
            scenario.clone(),
            report.mode.to_string(),
            report.config.seed.to_string(),
            report.seeds.to_string(),
            report.config.slots.to_string(),
            report.config.warmup.to_string(),
            num(Some(lambda)),
            (i + 1).to_string(),
            num(Some(row.capacity)),
            row.group.label().to_string(),
            num(row.empirical_rate),
            num(row.rate_stderr),
            num(row.analytic_rate),
            num(row.rate_abs_error),
            num(row.rate_rel_error),
            num(row.empirical_mean_delay),
            num(row.delay_stderr),
            num(row.analytic_mean_delay),
            num(row.delay_abs_error),
            num(row.delay_rel_error),
            num(row.leader_fraction),
            num(row.success_prob),
            bound.map(|b| b.to_string()).unwrap_or_default(),
            exact.map(|b| b.to_string()).unwrap_or_default(),
            num(within),
            report
                .simulation
                .as_ref()
                .map(|s| s.payload_mismatches.to_string())
                .unwrap_or_default(),
        ])?;
    }
    written.push(summary.finish()?);

    let toml_path = dir.join("scenario.toml");
    fs::write(&toml_path, emit_scenario(&report.config)?).map_err(|source| ReportError::Io {
        path: toml_path.display().to_string(),
        source,
    })?;
    written.push(toml_path);
    Ok(written)
}
