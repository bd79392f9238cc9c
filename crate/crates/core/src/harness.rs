//! Experiment sweeps: planning, parallel execution and result files.
//!
//! Run seeds follow common random numbers: replication `i` of every scheme
//! and grid point uses `seed::mix(master_seed, [i])`, so schemes and grid
//! points are compared on the same user draws and fading.

use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{Config, ConfigError, Scheme, SweepVar};
use crate::seed;
use crate::sim::run_scheme;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// One grid point: the swept value and the configuration it yields.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub index: usize,
    pub value: Option<f64>,
    pub config: Config,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub base: Config,
    pub points: Vec<GridPoint>,
}

impl Plan {
    pub fn new(base: Config) -> Result<Plan, ConfigError> {
        base.validate()?;
        let points = match &base.experiment.sweep {
            None => vec![GridPoint {
                index: 0,
                value: None,
                config: base.clone(),
            }],
            Some(sweep) => sweep
                .values
                .iter()
                .enumerate()
                .map(|(index, &v)| {
                    let mut config = base.clone();
                    config.apply(sweep.var, v)?;
                    Ok(GridPoint {
                        index,
                        value: Some(v),
                        config,
                    })
                })
                .collect::<Result<_, ConfigError>>()?,
        };
        Ok(Plan { base, points })
    }

    pub fn sweep_var(&self) -> Option<SweepVar> {
        self.base.experiment.sweep.as_ref().map(|s| s.var)
    }

    /// Every run in output order: point, then scheme, then replication.
    pub fn tasks(&self) -> Vec<Task> {
        let e = &self.base.experiment;
        let mut out = Vec::new();
        for point in &self.points {
            for &scheme in &e.schemes {
                for replication in 0..e.seeds_per_point {
                    out.push(Task {
                        point: point.index,
                        scheme,
                        replication,
                        seed: run_seed(e.master_seed, replication),
                    });
                }
            }
        }
        out
    }
}

/// Seed of replication `replication`, shared by every scheme and point.
pub fn run_seed(master: u64, replication: usize) -> u64 {
    seed::mix(master, &[replication as u64])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub point: usize,
    pub scheme: Scheme,
    pub replication: usize,
    pub seed: u64,
}

/// One line of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub scheme: Scheme,
    pub seed: u64,
    pub v_kmh: f64,
    pub r_m: f64,
    pub k_max: usize,
    pub r_th: f64,
    pub prp: Option<f64>,
    pub latency_ratio: Option<f64>,
    pub rotations_utsa: Option<usize>,
    pub rotations_rmsa: Option<usize>,
    pub point: usize,
    pub replication: usize,
    pub n_users: Option<usize>,
    pub intended: Option<usize>,
    pub decoded: Option<usize>,
    pub unsatisfied_power: Option<usize>,
    pub silenced: Option<usize>,
    pub violations: Option<usize>,
    pub status: RunStatus,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

fn execute_task(point: &GridPoint, task: Task) -> RunRow {
    let c = &point.config;
    let mut row = RunRow {
        scheme: task.scheme,
        seed: task.seed,
        v_kmh: c.velocity_kmh(),
        r_m: c.scenario.range_m,
        k_max: c.scheduler.max_channels_per_tx,
        r_th: c.radio.rate_threshold,
        prp: None,
        latency_ratio: None,
        rotations_utsa: None,
        rotations_rmsa: None,
        point: task.point,
        replication: task.replication,
        n_users: None,
        intended: None,
        decoded: None,
        unsatisfied_power: None,
        silenced: None,
        violations: None,
        status: RunStatus::Failed,
        error: String::new(),
    };
    match catch_unwind(AssertUnwindSafe(|| run_scheme(c, task.scheme, task.seed))) {
        Ok(Ok(out)) => {
            let m = out.metrics;
            row.prp = m.prp;
            row.latency_ratio = m.latency_ratio;
            row.rotations_utsa = Some(m.rotations_utsa);
            row.rotations_rmsa = Some(m.rotations_rmsa);
            row.n_users = Some(m.n_users);
            row.intended = Some(m.intended);
            row.decoded = Some(m.decoded);
            row.unsatisfied_power = Some(m.unsatisfied_power);
            row.silenced = Some(m.silenced);
            row.violations = Some(m.violations);
            row.status = RunStatus::Ok;
        }
        Ok(Err(e)) => row.error = e.to_string(),
        Err(panic) => {
            row.error = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
        }
    }
    if row.status == RunStatus::Failed {
        log::warn!(
            "{} point {} seed {} failed: {}",
            task.scheme,
            task.point,
            task.seed,
            row.error
        );
    }
    row
}

/// Runs every task on a pool of `jobs` workers (0 for all cores); rows come
/// back in task order.
pub fn execute(plan: &Plan, jobs: usize) -> Result<Vec<RunRow>, HarnessError> {
    let tasks = plan.tasks();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&t| execute_task(&plan.points[t.point], t))
            .collect()
    }))
}

/// Sample mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub n: usize,
    pub mean: Option<f64>,
    pub ci95: Option<f64>,
}

impl Estimate {
    pub fn of(sample: &[f64]) -> Estimate {
        let n = sample.len();
        if n == 0 {
            return Estimate {
                n,
                mean: None,
                ci95: None,
            };
        }
        let mean = sample.iter().sum::<f64>() / n as f64;
        let ci95 = (n > 1).then(|| {
            let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        });
        Estimate {
            n,
            mean: Some(mean),
            ci95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub scheme: Scheme,
    pub point: usize,
    pub value: Option<f64>,
    pub runs: usize,
    pub failed: usize,
    pub prp: Estimate,
    pub latency_ratio: Estimate,
    pub rotations_utsa: Estimate,
    pub rotations_rmsa: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub sweep: Option<SweepVar>,
    pub master_seed: u64,
    pub seeds_per_point: usize,
    /// How run seeds are derived.
    pub seeding: &'static str,
    /// Denominator of the packet reception probability.
    pub prp_denominator: &'static str,
    pub points: Vec<PointSummary>,
}

pub fn summarize(plan: &Plan, rows: &[RunRow]) -> Summary {
    let mut points = Vec::new();
    for point in &plan.points {
        for &scheme in &plan.base.experiment.schemes {
            let group: Vec<&RunRow> = rows
                .iter()
                .filter(|r| r.point == point.index && r.scheme == scheme)
                .collect();
            let sample = |f: &dyn Fn(&RunRow) -> Option<f64>| {
                Estimate::of(&group.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            points.push(PointSummary {
                scheme,
                point: point.index,
                value: point.value,
                runs: group.len(),
                failed: group
                    .iter()
                    .filter(|r| r.status == RunStatus::Failed)
                    .count(),
                prp: sample(&|r| r.prp),
                latency_ratio: sample(&|r| r.latency_ratio),
                rotations_utsa: sample(&|r| r.rotations_utsa.map(|x| x as f64)),
                rotations_rmsa: sample(&|r| r.rotations_rmsa.map(|x| x as f64)),
            });
        }
    }
    Summary {
        sweep: plan.sweep_var(),
        master_seed: plan.base.experiment.master_seed,
        seeds_per_point: plan.base.experiment.seeds_per_point,
        seeding: "run seed = mix(master_seed, [replication]), shared across schemes and grid points",
        prp_denominator: "in-range receivers per scheduled transmission",
        points,
    }
}

pub fn write_rows<W: Write>(rows: &[RunRow], writer: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: PathBuf::from("runs.csv"),
        source,
    })?;
    Ok(())
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub runs: PathBuf,
    pub summary: PathBuf,
}

/// Writes `runs.csv` and `summary.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    rows: &[RunRow],
    summary: &Summary,
) -> Result<OutputFiles, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let runs = dir.join("runs.csv");
    let file = fs::File::create(&runs).map_err(io(&runs))?;
    write_rows(rows, std::io::BufWriter::new(file))?;
    let summary_path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(&summary_path, text).map_err(io(&summary_path))?;
    Ok(OutputFiles {
        runs,
        summary: summary_path,
    })
}
