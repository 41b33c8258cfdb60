//! End-to-end acceptance checks. Runs every preset for five seeds of 10^6
//! slots after a 10^4-slot warm-up, prints one line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use mrnc::analysis::{self, delay_horizon};
use mrnc::compare::{run_compare, total_variation, CompareReport, Mode};
use mrnc::scenario::preset;
use mrnc::simulator::{self, ScenarioConfig};

const SEEDS: usize = 5;
const SLOTS: u64 = 1_000_000;
const WARMUP: u64 = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Runs {
    reports: Vec<CompareReport>,
}

impl Runs {
    fn get(&self, name: &str) -> &CompareReport {
        self.reports.iter().find(|r| r.scenario() == name).unwrap()
    }
}

fn config(name: &str) -> ScenarioConfig {
    preset(name).unwrap().with_slots(SLOTS, WARMUP)
}

fn criterion_1(runs: &Runs) -> Outcome {
    let mut worst = (0.0f64, String::new());
    for name in ["B", "C", "D", "E"] {
        let r = runs.get(name);
        let sim = r.simulation.as_ref().unwrap();
        for i in r.config.high_receivers() {
            let err = (sim.rate(i) - r.config.lambda).abs();
            if err >= worst.0 {
                worst = (err, format!("{name} U{}", i + 1));
            }
        }
    }
    outcome(
        worst.0 <= 0.01,
        format!("max |rate - lambda| over H receivers = {:.5} ({})", worst.0, worst.1),
    )
}

fn criterion_2(runs: &Runs) -> Outcome {
    let r = runs.get("A");
    let emp = r.simulation.as_ref().unwrap().rate(0);
    let ana = r.analysis.as_ref().unwrap().rate(0).unwrap();
    outcome(
        (emp - 0.8).abs() <= 0.01 && ana == 0.8,
        format!("setting A U1 empirical {emp:.5}, analytic {ana}"),
    )
}

fn criterion_3(runs: &Runs) -> Outcome {
    let b = runs.get("B").simulation.as_ref().unwrap();
    let expected = [0.85 / 0.9, 1.0 - 0.85 / 0.9, 0.0, 0.0, 0.0];
    let worst = (0..5)
        .map(|i| (b.leader_fraction(i) - expected[i]).abs())
        .fold(0.0, f64::max);
    let a = runs.get("A").simulation.as_ref().unwrap();
    let a_exact = a.leader_slots[0] == a.non_idle_slots && a.non_idle_slots > 0;
    outcome(
        worst <= 0.01 && a_exact,
        format!(
            "setting B leader fractions {:.4?}, max error {worst:.5}; setting A U1 leader fraction {}",
            (0..5).map(|i| b.leader_fraction(i)).collect::<Vec<_>>(),
            a.leader_fraction(0)
        ),
    )
}

fn criterion_4(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["A", "B", "C", "D", "E"] {
        let r = runs.get(name);
        let exempt = name == "E";
        let mut cells = Vec::new();
        for row in r.rows.iter().filter(|row| row.group != mrnc::compare::Group::High) {
            let e = row.rate_rel_error.unwrap_or(f64::INFINITY);
            let limit = if row.strongest_low { 0.10 } else { 0.35 };
            let ok = e <= limit;
            if !ok && !exempt {
                pass = false;
            }
            cells.push(format!("U{} {:.3}{}", row.receiver + 1, e, if ok { "" } else { "!" }));
        }
        parts.push(format!("{name}{}[{}]", if exempt { "(exempt)" } else { "" }, cells.join(" ")));
    }
    outcome(pass, format!("relative rate errors of L receivers: {}", parts.join(" ")))
}

fn criterion_5(runs: &Runs) -> Outcome {
    let sim = runs.get("A").simulation.as_ref().unwrap();
    let pmf = sim.delay_pmf(0);
    let p = |t: usize| pmf.get(t).copied().unwrap_or(0.0);
    let worst = (1..=6)
        .map(|t| (p(t) - 0.8 * 0.2f64.powi(t as i32 - 1)).abs())
        .fold(0.0, f64::max);
    let head: f64 = (0..=6).map(p).sum();
    outcome(
        p(0) <= 0.001 && worst <= 0.01 && head >= 0.999,
        format!("setting A U1 P(0) = {:.5}, max |P(T) - 0.8*0.2^(T-1)| for T<=6 = {worst:.5}, mass T<=6 = {head:.5}", p(0)),
    )
}

fn criterion_6(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut worst_mean = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut missing = Vec::new();
    for r in &runs.reports {
        let a = r.analysis.as_ref().unwrap();
        for i in 0..r.config.receivers() {
            match a.delay_pmf(i, None) {
                Some(Ok(pmf)) => {
                    let mass: f64 = pmf.iter().sum();
                    let mean: f64 = pmf.iter().enumerate().map(|(t, p)| t as f64 * p).sum();
                    let rate = a.rate(i).unwrap();
                    worst_mass = worst_mass.max((mass - 1.0).abs());
                    worst_mean = worst_mean.max((mean - 1.0 / rate).abs());
                }
                Some(Err(e)) => {
                    pass = false;
                    missing.push(format!("{} U{}: {e}", r.scenario(), i + 1));
                }
                None => {
                    pass = false;
                    missing.push(format!("{} U{}: no success probability", r.scenario(), i + 1));
                }
            }
        }
    }
    pass &= worst_mean <= 1e-6 && worst_mass <= 1e-9;
    let mut detail = format!("max |sum T P(T) - 1/R| = {worst_mean:.3e}, max |sum P - 1| = {worst_mass:.3e}");
    if !missing.is_empty() {
        detail.push_str(&format!("; undefined: {}", missing.join(", ")));
    }
    outcome(pass, detail)
}

fn criterion_7(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut cells = Vec::new();
    for name in ["A", "B"] {
        let r = runs.get(name);
        for row in &r.rows[..2] {
            let e = row.delay_rel_error.unwrap_or(f64::INFINITY);
            pass &= e <= 0.10;
            cells.push(format!(
                "{name} U{} {:.4} vs {:.4} ({:.3})",
                row.receiver + 1,
                row.empirical_mean_delay.unwrap_or(f64::NAN),
                row.analytic_mean_delay.unwrap_or(f64::NAN),
                e
            ));
        }
    }
    outcome(pass, format!("mean delay empirical vs 1/R (rel err): {}", cells.join(", ")))
}

fn criterion_8(runs: &Runs) -> Outcome {
    let r = runs.get("C");
    let sim = r.simulation.as_ref().unwrap();
    let a = r.analysis.as_ref().unwrap();
    let mut pass = r.hybrid.is_some();
    let mut cells = Vec::new();
    for i in 0..2 {
        match (a.success[i], a.rate(i)) {
            (Some(d), Some(rate)) => match analysis::delay_pmf(d, rate, delay_horizon(d, rate)) {
                Ok(pmf) => {
                    let tv = total_variation(&sim.delay_pmf(i), &pmf);
                    pass &= tv <= 0.1;
                    cells.push(format!("U{} d = {d:.4} TV = {tv:.4}", i + 1));
                }
                Err(e) => {
                    pass = false;
                    cells.push(format!("U{} {e}", i + 1));
                }
            },
            _ => {
                pass = false;
                cells.push(format!("U{} no hybrid success probability", i + 1));
            }
        }
    }
    outcome(pass, format!("setting C hybrid delay pmf: {}", cells.join(", ")))
}

fn criterion_9() -> Outcome {
    let mut c = ScenarioConfig::new("oracle", 0.85, vec![0.8, 0.6, 0.4])
        .with_slots(10_000, 0)
        .with_seed(1);
    c.field_exponent = 2;
    c.payload_len = 4;
    let mut t = common::audit(&c);
    let mut c2 = c.clone();
    c2.lambda = 0.6;
    c2.capacities = vec![0.9, 0.7, 0.5];
    let t2 = common::audit(&c2);
    t.innovation_checks += t2.innovation_checks;
    t.leader_checks += t2.leader_checks;
    let violations = t.violations() + t2.violations();
    outcome(
        violations == 0 && t.innovation_checks > 0 && t.leader_checks > 0,
        format!(
            "M=3 over GF(4), 2 x 10^4 slots: {} innovation checks, {} leader checks, {violations} violations",
            t.innovation_checks, t.leader_checks
        ),
    )
}

fn criterion_10(runs: &Runs) -> Outcome {
    let checked: u64 = runs.reports.iter().map(|r| r.simulation.as_ref().unwrap().payloads_checked).sum();
    let bad: u64 = runs.reports.iter().map(|r| r.simulation.as_ref().unwrap().payload_mismatches).sum();
    outcome(
        bad == 0 && checked > 0,
        format!("{checked} delivered payloads compared, {bad} mismatches"),
    )
}

fn criterion_11() -> Outcome {
    let mut worst = (1.0f64, String::new());
    let mut points = 0;
    for l in 5..=9 {
        for c in (l + 1)..=10 {
            let lambda = l as f64 / 10.0;
            let cap = c as f64 / 10.0;
            let bound = analysis::max_queue_gap(lambda, cap, 0.03).unwrap();
            let cfg = ScenarioConfig::new("gap", lambda, vec![cap])
                .with_slots(SLOTS, WARMUP)
                .with_seed(100 + points);
            let reps = simulator::run_replicates(&cfg, SEEDS).unwrap();
            let merged = mrnc::RunReport::merge(&reps).unwrap();
            let within = merged.gap_fraction_within(0, bound);
            if within <= worst.0 {
                worst = (within, format!("lambda {lambda} C {cap} bound {bound}"));
            }
            points += 1;
        }
    }
    outcome(
        worst.0 >= 0.95,
        format!("{points} grid points, smallest share within bound = {:.4} ({})", worst.0, worst.1),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let reports = ["A", "B", "C", "D", "E"]
        .iter()
        .map(|name| run_compare(&config(name), Mode::Compare, SEEDS).expect("preset runs"))
        .collect();
    let runs = Runs { reports };
    eprintln!("simulated presets in {:.1}s", start.elapsed().as_secs_f64());

    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "H receivers deliver at the arrival rate", criterion_1(&runs)),
        (2, "setting A strongest receiver at capacity", criterion_2(&runs)),
        (3, "leader fractions", criterion_3(&runs)),
        (4, "analytic vs simulated L rates", criterion_4(&runs)),
        (5, "setting A U1 delay pmf", criterion_5(&runs)),
        (6, "analytic delay pmf identities", criterion_6(&runs)),
        (7, "mean delay U1, U2 in A and B", criterion_7(&runs)),
        (8, "hybrid delay pmf in setting C", criterion_8(&runs)),
        (9, "encoder against independent elimination", criterion_9()),
        (10, "payload round-trip", criterion_10(&runs)),
        (11, "queue gap bound", criterion_11()),
    ];

    let mut failed = 0;
    for (n, title, o) in &results {
        println!("criterion {n:>2}: {} - {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1}s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
