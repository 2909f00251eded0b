//! Batch experiment runner: repeated seeded runs per scheme, min/worst/mean
//! statistics, and the two-scheme comparison report with optimization ranges
//! and ratios.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BusId, Instance, Minutes};
use crate::rng::{stream, Stream};
use crate::sim::{
    simulate, verify_schedule, EntryPolicy, MovementPolicy, ScheduleResult, SchemeConfig, SimError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("a batch needs at least one run")]
    ZeroRuns,
    #[error("run with seed {seed} failed: {source}")]
    RunFailed {
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("run with seed {seed} produced an infeasible schedule: {detail}")]
    InfeasibleRun { seed: u64, detail: String },
    #[error("cannot write per-run dump: {0}")]
    Dump(#[from] std::io::Error),
}

/// Min / max / mean of one metric over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub optimal: Minutes,
    pub worst: Minutes,
    pub average: f64,
}

impl Stat {
    fn fold(values: &[Minutes]) -> Stat {
        let sum: u64 = values.iter().map(|&v| v as u64).sum();
        Stat {
            optimal: values.iter().copied().min().unwrap_or(0),
            worst: values.iter().copied().max().unwrap_or(0),
            average: sum as f64 / values.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub runs: u32,
    pub seeds: Vec<u64>,
    /// Setup-time stats per workstation of the buffer's next stage.
    pub next_stage_setup_per_ws: Vec<Stat>,
    pub next_stage_completion: Stat,
    pub makespan: Stat,
}

/// One comparison row: scheme averages, their gap, and the gap as a fraction
/// of the scheme-2 (baseline) average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub scheme1_avg: f64,
    pub scheme2_avg: f64,
    pub optimization_range: f64,
    pub optimization_ratio: f64,
}

impl MetricComparison {
    /// `range = avg2 - avg1`, `ratio = range / avg2` (0 when the baseline
    /// average is 0).
    pub fn from_averages(metric: impl Into<String>, scheme1_avg: f64, scheme2_avg: f64) -> Self {
        let optimization_range = scheme2_avg - scheme1_avg;
        let optimization_ratio = if scheme2_avg == 0.0 {
            0.0
        } else {
            optimization_range / scheme2_avg
        };
        MetricComparison {
            metric: metric.into(),
            scheme1_avg,
            scheme2_avg,
            optimization_range,
            optimization_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub runs: u32,
    pub base_seed: u64,
    pub scheme1: BatchStats,
    pub scheme2: BatchStats,
    pub metrics: Vec<MetricComparison>,
}

/// The job permutation for one seeded run.
pub fn random_permutation(bus_count: u32, seed: u64) -> Vec<BusId> {
    let mut order: Vec<BusId> = (1..=bus_count).map(BusId).collect();
    order.shuffle(&mut stream(seed, Stream::Permutation));
    order
}

struct RunOutcome {
    seed: u64,
    next_stage_setup: Vec<Minutes>,
    next_stage_completion: Minutes,
    makespan: Minutes,
}

fn one_run(
    inst: &Instance,
    cfg: &SchemeConfig,
    seed: u64,
    dump: Option<(&Path, &str, u32)>,
) -> Result<RunOutcome, HarnessError> {
    let sequence = random_permutation(inst.bus_count(), seed);
    let run_cfg = cfg.with_seed(seed);
    let result =
        simulate(inst, &sequence, &run_cfg).map_err(|source| HarnessError::RunFailed { seed, source })?;
    let violations = verify_schedule(inst, &result);
    if !violations.is_empty() {
        return Err(HarnessError::InfeasibleRun {
            seed,
            detail: violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    if let Some((dir, label, k)) = dump {
        write_run_dump(dir, label, k, &result)?;
    }
    let next = inst.buffer_next_stage() as usize - 1;
    Ok(RunOutcome {
        seed,
        next_stage_setup: result.metrics.setup_time_total[next].clone(),
        next_stage_completion: result.metrics.next_stage_completion,
        makespan: result.metrics.makespan,
    })
}

fn write_run_dump(dir: &Path, label: &str, k: u32, result: &ScheduleResult) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(result).expect("result serializes");
    text.push('\n');
    fs::write(dir.join(format!("run_{k}_{label}.json")), text)?;
    Ok(())
}

fn fold_stats(outcomes: &[RunOutcome], ws_count: usize) -> BatchStats {
    let per_ws = (0..ws_count)
        .map(|w| Stat::fold(&outcomes.iter().map(|o| o.next_stage_setup[w]).collect::<Vec<_>>()))
        .collect();
    BatchStats {
        runs: outcomes.len() as u32,
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        next_stage_setup_per_ws: per_ws,
        next_stage_completion: Stat::fold(
            &outcomes.iter().map(|o| o.next_stage_completion).collect::<Vec<_>>(),
        ),
        makespan: Stat::fold(&outcomes.iter().map(|o| o.makespan).collect::<Vec<_>>()),
    }
}

fn batch(
    inst: &Instance,
    cfg: &SchemeConfig,
    runs: u32,
    dump: Option<(&Path, &str)>,
) -> Result<BatchStats, HarnessError> {
    if runs == 0 {
        return Err(HarnessError::ZeroRuns);
    }
    // Run k uses seed base + k; results are folded in run order, so the
    // aggregate does not depend on scheduling.
    let outcomes: Vec<RunOutcome> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let seed = cfg.seed.wrapping_add(k as u64);
            one_run(inst, cfg, seed, dump.map(|(dir, label)| (dir, label, k)))
        })
        .collect::<Result<_, _>>()?;
    let ws_count = inst.stages[inst.buffer_next_stage() as usize - 1] as usize;
    Ok(fold_stats(&outcomes, ws_count))
}

/// Run `runs` independent seeded simulations of `cfg` and fold the metric
/// statistics. Run `k` derives its permutation and all stochastic choices
/// from `cfg.seed + k`.
pub fn run_batch(inst: &Instance, cfg: &SchemeConfig, runs: u32) -> Result<BatchStats, HarnessError> {
    batch(inst, cfg, runs, None)
}

/// [`run_batch`] that also writes each run's full `ScheduleResult` to
/// `dump_dir/run_<k>_<scheme_label>.json`.
pub fn run_batch_with_dump(
    inst: &Instance,
    cfg: &SchemeConfig,
    runs: u32,
    dump_dir: &Path,
    scheme_label: &str,
) -> Result<BatchStats, HarnessError> {
    batch(inst, cfg, runs, Some((dump_dir, scheme_label)))
}

/// Compare minimum-setup-cost movement (scheme 1) against random movement
/// (scheme 2) in a paired design: identical per-run seeds, hence identical
/// job permutations, and the dispatch policy taken from `base_cfg`. The
/// aggregated next-stage setup metric averages the per-workstation totals.
pub fn compare_schemes(
    inst: &Instance,
    base_cfg: &SchemeConfig,
    runs: u32,
) -> Result<ComparisonReport, HarnessError> {
    compare_schemes_impl(inst, base_cfg, runs, None)
}

/// [`compare_schemes`] that dumps every run of both schemes.
pub fn compare_schemes_with_dump(
    inst: &Instance,
    base_cfg: &SchemeConfig,
    runs: u32,
    dump_dir: &Path,
) -> Result<ComparisonReport, HarnessError> {
    compare_schemes_impl(inst, base_cfg, runs, Some(dump_dir))
}

fn compare_schemes_impl(
    inst: &Instance,
    base_cfg: &SchemeConfig,
    runs: u32,
    dump_dir: Option<&Path>,
) -> Result<ComparisonReport, HarnessError> {
    let cfg1 = SchemeConfig {
        movement: MovementPolicy::MinSetupCost,
        entry: EntryPolicy::MinCost,
        ..*base_cfg
    };
    let cfg2 = SchemeConfig {
        movement: MovementPolicy::Random,
        entry: EntryPolicy::Random,
        ..*base_cfg
    };
    let scheme1 = batch(inst, &cfg1, runs, dump_dir.map(|d| (d, "scheme1")))?;
    let scheme2 = batch(inst, &cfg2, runs, dump_dir.map(|d| (d, "scheme2")))?;

    let mean_ws = |stats: &BatchStats| {
        let per_ws = &stats.next_stage_setup_per_ws;
        per_ws.iter().map(|s| s.average).sum::<f64>() / per_ws.len().max(1) as f64
    };
    let metrics = vec![
        MetricComparison::from_averages("next_stage_setup", mean_ws(&scheme1), mean_ws(&scheme2)),
        MetricComparison::from_averages(
            "next_stage_completion",
            scheme1.next_stage_completion.average,
            scheme2.next_stage_completion.average,
        ),
        MetricComparison::from_averages("makespan", scheme1.makespan.average, scheme2.makespan.average),
    ];
    Ok(ComparisonReport {
        runs,
        base_seed: base_cfg.seed,
        scheme1,
        scheme2,
        metrics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Render a comparison report. JSON keeps full precision and round-trips;
/// CSV is one `metric,statistic,value` row per cell with values rounded to
/// one decimal, ratios as percentages.
pub fn export_report(report: &ComparisonReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report).expect("report serializes");
            text.push('\n');
            text
        }
        ReportFormat::Csv => {
            let mut rows = vec!["metric,statistic,value".to_string()];
            let mut stat_rows = |name: &str, s1: &Stat, s2: &Stat| {
                rows.push(format!("{name},scheme1_optimal,{:.1}", s1.optimal as f64));
                rows.push(format!("{name},scheme1_worst,{:.1}", s1.worst as f64));
                rows.push(format!("{name},scheme1_average,{:.1}", s1.average));
                rows.push(format!("{name},scheme2_optimal,{:.1}", s2.optimal as f64));
                rows.push(format!("{name},scheme2_worst,{:.1}", s2.worst as f64));
                rows.push(format!("{name},scheme2_average,{:.1}", s2.average));
            };
            for (w, (s1, s2)) in report
                .scheme1
                .next_stage_setup_per_ws
                .iter()
                .zip(&report.scheme2.next_stage_setup_per_ws)
                .enumerate()
            {
                stat_rows(&format!("next_stage_setup_ws{}", w + 1), s1, s2);
            }
            stat_rows(
                "next_stage_completion",
                &report.scheme1.next_stage_completion,
                &report.scheme2.next_stage_completion,
            );
            stat_rows("makespan", &report.scheme1.makespan, &report.scheme2.makespan);
            for m in &report.metrics {
                rows.push(format!("{},scheme1_average,{:.1}", m.metric, m.scheme1_avg));
                rows.push(format!("{},scheme2_average,{:.1}", m.metric, m.scheme2_avg));
                rows.push(format!("{},range,{:.1}", m.metric, m.optimization_range));
                rows.push(format!("{},ratio,{:.1}%", m.metric, m.optimization_ratio * 100.0));
            }
            let mut text = rows.join("\n");
            text.push('\n');
            text
        }
    }
}
