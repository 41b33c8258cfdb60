use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use mrnc::compare::{run_compare, CompareReport, Mode, Thresholds};
use mrnc::report::emit_reports;
use mrnc::scenario::{load_scenario_file, preset};
use mrnc::ScenarioConfig;

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Simulate and analyse multirate network-coded broadcast.
#[derive(Debug, Parser)]
#[command(name = "mrnc", version)]
#[command(group(ArgGroup::new("scenario").required(true).args(["preset", "config"])))]
struct Args {
    /// Built-in scenario: A, B, C, D or E.
    #[arg(long)]
    preset: Option<String>,
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// simulate, analyze or compare.
    #[arg(long, default_value = "compare")]
    mode: Mode,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    /// First seed; replication k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications, run in parallel.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Directory for the CSV reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Field is GF(2^m) with m = this value.
    #[arg(long = "field-exp")]
    field_exp: Option<u8>,
    /// Exit with status 1 if any acceptance threshold is violated.
    #[arg(long)]
    assert: bool,
}

fn scenario(args: &Args) -> Result<ScenarioConfig, String> {
    let mut config = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name).ok_or_else(|| format!("unknown preset `{name}` (expected A to E)"))?,
        (None, Some(path)) => load_scenario_file(path).map_err(|e| e.to_string())?,
        (None, None) => unreachable!("clap requires one of --preset and --config"),
    };
    if let Some(slots) = args.slots {
        config.slots = slots;
        if args.warmup.is_none() && config.warmup >= slots {
            config.warmup = slots / 100;
        }
    }
    if let Some(warmup) = args.warmup {
        config.warmup = warmup;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(m) = args.field_exp {
        config.field_exponent = m;
    }
    config.validate().map_err(|e| format!("invalid scenario: {e}"))?;
    Ok(config)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn print_summary(report: &CompareReport) {
    println!(
        "scenario {} mode {} lambda {} slots {} warmup {} seeds {}..{}",
        report.scenario(),
        report.mode,
        report.config.lambda,
        report.config.slots,
        report.config.warmup,
        report.config.seed,
        report.config.seed + report.seeds as u64 - 1
    );
    println!("receiver capacity group emp_rate ana_rate rel_err emp_delay ana_delay leader");
    for row in &report.rows {
        println!(
            "{} {} {} {} {} {} {} {} {}",
            row.receiver + 1,
            row.capacity,
            row.group.label(),
            opt(row.empirical_rate),
            opt(row.analytic_rate),
            opt(row.rate_rel_error),
            opt(row.empirical_mean_delay),
            opt(row.analytic_mean_delay),
            opt(row.leader_fraction),
        );
    }
    if report.has_boundary() {
        println!("note: a receiver sits exactly at the arrival rate and is grouped with L");
    }
    if let Some(sim) = &report.simulation {
        if !sim.roundtrip_ok() {
            println!("payload mismatches: {}", sim.payload_mismatches);
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match scenario(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let report = match run_compare(&config, args.mode, args.seeds) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    print_summary(&report);
    if let Some(dir) = &args.out {
        if let Err(e) = emit_reports(&report, dir) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    if args.assert {
        let violations = report.violations(&Thresholds::default());
        if !violations.is_empty() {
            for v in &violations {
                eprintln!("threshold violated: {v}");
            }
            return ExitCode::from(EXIT_VIOLATION);
        }
    }
    ExitCode::SUCCESS
}
