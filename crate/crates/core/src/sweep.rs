//! Parameter sweeps: every grid point × every seed, run independently.
//!
//! Parameters are dotted paths into the canonical scenario document
//! (`decision.epsilon`, `world.agent_count`, `registry.practices.0.preference_weight`).
//! All grid points are resolved and validated before the first run starts.
//! Rows come back ordered by (grid point, seed) whatever the executor.

use std::collections::BTreeSet;

use serde_json::Value;
use thiserror::Error;

use crate::diagnostics::ValidationReport;
use crate::engine::run;
use crate::metrics::{summarize, Summary};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),
    #[error("parameter `{0}` has no values")]
    NoValues(String),
    #[error("no seeds given")]
    NoSeeds,
    #[error("scenario invalid at {point}:\n{report}")]
    Invalid {
        point: String,
        report: ValidationReport,
    },
    #[error("scenario at {point} does not deserialize: {message}")]
    Malformed { point: String, message: String },
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamAxis {
    pub path: String,
    pub values: Vec<Value>,
}

impl ParamAxis {
    /// Parses `PATH=v1,v2,...`. Each value is read as a JSON literal and
    /// falls back to a plain string.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let (path, values) = spec
            .split_once('=')
            .ok_or_else(|| format!("expected PATH=v1,v2,... in `{spec}`"))?;
        if path.is_empty() {
            return Err(format!("empty parameter path in `{spec}`"));
        }
        let values = values
            .split(',')
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string())))
            .collect();
        Ok(ParamAxis {
            path: path.to_string(),
            values,
        })
    }
}

/// How independent runs are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    /// Rayon pool with `jobs` threads (`None`: rayon's default). Runs
    /// sequentially when the `parallel` feature is off.
    Parallel {
        jobs: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: Vec<usize>,
    pub values: Vec<Value>,
    pub seed: u64,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub paths: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn lookup_mut<'a>(doc: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    path.split('.').try_fold(doc, |node, key| match node {
        Value::Object(map) => map.get_mut(key),
        Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
        _ => None,
    })
}

struct Job {
    point: Vec<usize>,
    values: Vec<Value>,
    seed: u64,
    scenario: usize,
}

/// Resolves and validates every grid point, then runs all jobs.
pub fn sweep(
    scenario: &Scenario,
    axes: &[ParamAxis],
    seeds: &[u64],
    ticks: Option<u64>,
    executor: Executor,
) -> Result<SweepTable, SweepError> {
    if seeds.is_empty() {
        return Err(SweepError::NoSeeds);
    }
    let base = serde_json::to_value(scenario).expect("scenario serializes");
    for axis in axes {
        if axis.values.is_empty() {
            return Err(SweepError::NoValues(axis.path.clone()));
        }
        if lookup_mut(&mut base.clone(), &axis.path).is_none() {
            return Err(SweepError::UnknownPath(axis.path.clone()));
        }
    }

    // Cartesian product in row-major order over the axes.
    let mut points: Vec<Vec<usize>> = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..axis.values.len()).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }

    let mut scenarios = Vec::with_capacity(points.len());
    for point in &points {
        let mut doc = base.clone();
        let mut label = Vec::new();
        for (axis, &i) in axes.iter().zip(point) {
            *lookup_mut(&mut doc, &axis.path).expect("checked path") = axis.values[i].clone();
            label.push(format!("{}={}", axis.path, axis.values[i]));
        }
        let label = label.join(", ");
        let s: Scenario = serde_json::from_value(doc).map_err(|e| SweepError::Malformed {
            point: label.clone(),
            message: e.to_string(),
        })?;
        let report = s.validate();
        if !report.is_valid() {
            return Err(SweepError::Invalid {
                point: label,
                report,
            });
        }
        scenarios.push(s);
    }

    let seeds: Vec<u64> = seeds
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let jobs: Vec<Job> = points
        .iter()
        .enumerate()
        .flat_map(|(k, point)| {
            seeds.iter().map(move |&seed| Job {
                point: point.clone(),
                values: axes
                    .iter()
                    .zip(point)
                    .map(|(a, &i)| a.values[i].clone())
                    .collect(),
                seed,
                scenario: k,
            })
        })
        .collect();

    let execute = |job: &Job| -> SweepRow {
        let s = &scenarios[job.scenario];
        let log = run(s, job.seed, ticks.unwrap_or(s.ticks)).expect("validated scenario");
        SweepRow {
            point: job.point.clone(),
            values: job.values.clone(),
            seed: job.seed,
            summary: summarize(&log, s.consensus.theta, s.consensus.window),
        }
    };

    let mut rows = match executor {
        Executor::Sequential => jobs.iter().map(execute).collect::<Vec<_>>(),
        Executor::Parallel { jobs: threads } => run_parallel(&jobs, threads, &execute)?,
    };
    rows.sort_by(|a, b| (&a.point, a.seed).cmp(&(&b.point, b.seed)));

    Ok(SweepTable {
        paths: axes.iter().map(|a| a.path.clone()).collect(),
        rows,
    })
}

#[cfg(feature = "parallel")]
fn run_parallel<F>(
    jobs: &[Job],
    threads: Option<usize>,
    execute: &F,
) -> Result<Vec<SweepRow>, SweepError>
where
    F: Fn(&Job) -> SweepRow + Sync,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(execute).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<F>(
    jobs: &[Job],
    _threads: Option<usize>,
    execute: &F,
) -> Result<Vec<SweepRow>, SweepError>
where
    F: Fn(&Job) -> SweepRow + Sync,
{
    Ok(jobs.iter().map(execute).collect())
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepTable {
    /// One header line, then one line per run. Per-practice performance
    /// counts follow the fixed columns as `performed.<practice>`.
    pub fn to_csv(&self) -> Vec<u8> {
        let practices: BTreeSet<&str> = self
            .rows
            .iter()
            .flat_map(|r| r.summary.performances.keys().map(String::as_str))
            .collect();
        let mut header: Vec<String> = self.paths.clone();
        header.extend(
            [
                "seed",
                "ticks",
                "agents",
                "idle",
                "overrides",
                "checks_passed",
                "checks_failed",
                "acceptability_rate",
                "final_consensus",
                "time_to_consensus",
            ]
            .map(String::from),
        );
        header.extend(practices.iter().map(|p| format!("performed.{p}")));

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let s = &row.summary;
            let mut rec: Vec<String> = row.values.iter().map(cell).collect();
            rec.extend([
                row.seed.to_string(),
                s.header.ticks.to_string(),
                s.agents.to_string(),
                s.idle.to_string(),
                s.overrides.to_string(),
                s.checks_passed.to_string(),
                s.checks_failed.to_string(),
                opt(s.acceptability_rate.map(|x| format!("{x:?}"))),
                opt(s.final_consensus.map(|x| format!("{x:?}"))),
                opt(s.time_to_consensus),
            ]);
            rec.extend(
                practices
                    .iter()
                    .map(|p| s.performances.get(*p).copied().unwrap_or(0).to_string()),
            );
            w.write_record(&rec).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}
