//! `rbsched`: validate instances, run single simulations, compare the two
//! buffer movement schemes over seeded batches, and export Gantt charts.
//!
//! Exit codes: 0 ok, 1 validation violations, 2 I/O or parse failure,
//! 3 deadlock.

mod gantt;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rbsched::harness::{
    compare_schemes, export_report, random_permutation, HarnessError, ReportFormat,
};
use rbsched::model::{parse_instance, validate_instance, Instance};
use rbsched::sim::{simulate, ScheduleResult, SchemeConfig, SimError};

#[derive(Parser)]
#[command(name = "rbsched", version, about = "Flow shop simulator with a routing buffer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an instance file and report every invariant violation.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run one seeded simulation and write result.json and metrics.json.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::MinSetup)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run both schemes over paired seeded batches and write the report.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 20)]
        runs: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Render a result.json as an SVG Gantt chart.
    Gantt {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Minimum-total-setup-cost movement (scheme 1).
    #[value(name = "min-setup")]
    MinSetup,
    /// Random movement (scheme 2).
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

enum CliError {
    Validation,
    Io(String),
    Deadlock(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation => 1,
            CliError::Io(_) => 2,
            CliError::Deadlock(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation => write!(f, "instance has validation violations"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Deadlock(e) => write!(f, "{e}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Deadlock { .. } => CliError::Deadlock(e.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::RunFailed { ref source, .. } if matches!(source, SimError::Deadlock { .. }) => {
                CliError::Deadlock(e.to_string())
            }
            other => CliError::Io(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// `RBSCHED_THREADS` caps batch parallelism; 0 or unset means auto.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RBSCHED_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("RBSCHED_THREADS must be a non-negative integer, got {raw:?}"))?;
    // num_threads(0) selects rayon's automatic degree.
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Validate { instance } => cmd_validate(&instance),
        Cmd::Run { instance, scheme, seed, out } => cmd_run(&instance, scheme, seed, &out),
        Cmd::Compare { instance, runs, seed, out, format } => {
            cmd_compare(&instance, runs, seed, &out, format)
        }
        Cmd::Gantt { result, out } => cmd_gantt(&result, &out),
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = read_to_string(path)?;
    parse_instance(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Parse and validate; print the report. Violations exit 1.
fn load_valid_instance(path: &Path) -> Result<Instance, CliError> {
    let inst = load_instance(path)?;
    let report = validate_instance(&inst);
    if !report.is_empty() {
        eprint!("{report}");
        return Err(CliError::Validation);
    }
    Ok(inst)
}

fn cmd_validate(path: &Path) -> Result<(), CliError> {
    let inst = load_instance(path)?;
    let report = validate_instance(&inst);
    print!("{report}");
    if report.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}

fn scheme_config(scheme: SchemeArg, seed: u64) -> SchemeConfig {
    match scheme {
        SchemeArg::MinSetup => SchemeConfig::min_setup_cost(seed),
        SchemeArg::Random => SchemeConfig::random_movement(seed),
    }
}

fn cmd_run(instance: &Path, scheme: SchemeArg, seed: u64, out: &Path) -> Result<(), CliError> {
    let inst = load_valid_instance(instance)?;
    let sequence = random_permutation(inst.bus_count(), seed);
    let result = simulate(&inst, &sequence, &scheme_config(scheme, seed))?;

    let mut result_json = serde_json::to_string_pretty(&result).expect("result serializes");
    result_json.push('\n');
    let mut metrics_json = serde_json::to_string_pretty(&result.metrics).expect("metrics serialize");
    metrics_json.push('\n');
    write_file(&out.join("result.json"), &result_json)?;
    write_file(&out.join("metrics.json"), &metrics_json)?;

    let next = inst.buffer_next_stage() as usize - 1;
    let next_setup: u32 = result.metrics.setup_time_total[next].iter().sum();
    println!("makespan: {}", result.metrics.makespan);
    println!("next_stage_setup_total: {next_setup}");
    Ok(())
}

fn cmd_compare(
    instance: &Path,
    runs: u32,
    seed: u64,
    out: &Path,
    format: FormatArg,
) -> Result<(), CliError> {
    let inst = load_valid_instance(instance)?;
    let report = compare_schemes(&inst, &SchemeConfig::min_setup_cost(seed), runs)?;

    let (name, text) = match format {
        FormatArg::Json => ("report.json", export_report(&report, ReportFormat::Json)),
        FormatArg::Csv => ("report.csv", export_report(&report, ReportFormat::Csv)),
    };
    let path = out.join(name);
    write_file(&path, &text)?;

    println!("{:<24} {:>10} {:>10} {:>8} {:>8}", "metric", "scheme1", "scheme2", "range", "ratio");
    for m in &report.metrics {
        println!(
            "{:<24} {:>10.1} {:>10.1} {:>8.1} {:>7.1}%",
            m.metric,
            m.scheme1_avg,
            m.scheme2_avg,
            m.optimization_range,
            m.optimization_ratio * 100.0
        );
    }
    println!("report written to {}", path.display());
    Ok(())
}

fn cmd_gantt(result: &Path, out: &Path) -> Result<(), CliError> {
    let text = read_to_string(result)?;
    let parsed: ScheduleResult = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", result.display())))?;
    let svg = gantt::render_svg(&gantt::layout(&parsed));
    write_file(out, &svg)
}
