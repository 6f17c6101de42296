//! Log serialization and run summaries.
//!
//! CSV: header `tick,agent_id,action,practice_id,override,discard_trace,belief,belief_score`,
//! one row per agent per tick sorted by `(tick, agent_id)`. `action` is
//! `perform` or `idle`; `practice_id` is empty when idle; the discard trace is
//! `practice:Reason;practice:Reason` (empty if none); `belief` is the context
//! id, empty for Unknown; `belief_score` uses the shortest round-trip float
//! form with at least one decimal (`1.0`, `0.5`).
//!
//! JSONL: one object per tick,
//! `{"tick":0,"consensus":1.0,"agents":[{"agent_id":..,"action":..,"practice_id":..,
//! "override":..,"discard_trace":[{"practice":..,"reason":..}],"belief":..,"belief_score":..}]}`,
//! with `null` for absent practice, Unknown belief, and undefined consensus.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::time_to_consensus;
use crate::decision::{Action, DiscardReason};
use crate::engine::{MetricsLog, RunHeader};

pub const CSV_HEADER: &str =
    "tick,agent_id,action,practice_id,override,discard_trace,belief,belief_score";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl LogFormat {
    pub fn extension(self) -> &'static str {
        match self {
            LogFormat::Csv => "csv",
            LogFormat::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Error)]
pub enum LogParseError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub practice: String,
    pub reason: DiscardReason,
}

/// Format-neutral view of one agent in one tick, with ids resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub agent_id: String,
    pub action: String,
    pub practice_id: Option<String>,
    #[serde(rename = "override")]
    pub override_used: bool,
    pub discard_trace: Vec<TraceEntry>,
    pub belief: Option<String>,
    pub belief_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickLine {
    pub tick: u64,
    pub consensus: Option<f64>,
    pub agents: Vec<LogRow>,
}

/// Resolves a log into format-neutral tick lines.
pub fn tick_lines(log: &MetricsLog) -> Vec<TickLine> {
    log.records
        .iter()
        .map(|rec| TickLine {
            tick: rec.tick,
            consensus: rec.consensus,
            agents: rec
                .entries
                .iter()
                .map(|e| LogRow {
                    agent_id: log.agent_ids[e.agent.index()].clone(),
                    action: match e.action {
                        Action::Perform(_) => "perform",
                        Action::Idle => "idle",
                    }
                    .to_string(),
                    practice_id: e
                        .action
                        .practice()
                        .map(|p| log.practice_ids[p.index()].clone()),
                    override_used: e.override_used,
                    discard_trace: e
                        .trace
                        .iter()
                        .map(|&(p, reason)| TraceEntry {
                            practice: log.practice_ids[p.index()].clone(),
                            reason,
                        })
                        .collect(),
                    belief: e.belief.context.map(|c| log.context_ids[c.index()].clone()),
                    belief_score: e.belief.score,
                })
                .collect(),
        })
        .collect()
}

pub fn encode_trace(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    for (i, t) in trace.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        let _ = write!(out, "{}:{}", t.practice, t.reason);
    }
    out
}

pub fn decode_trace(text: &str) -> Result<Vec<TraceEntry>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|item| {
            let (practice, reason) = item
                .split_once(':')
                .ok_or_else(|| format!("trace item `{item}` lacks a reason"))?;
            Ok(TraceEntry {
                practice: practice.to_string(),
                reason: reason.parse()?,
            })
        })
        .collect()
}

fn format_score(x: f64) -> String {
    format!("{x:?}")
}

pub fn emit_log(log: &MetricsLog, format: LogFormat) -> Vec<u8> {
    let lines = tick_lines(log);
    match format {
        LogFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER.split(','))
                .expect("in-memory write");
            for line in &lines {
                for row in &line.agents {
                    w.write_record([
                        line.tick.to_string(),
                        row.agent_id.clone(),
                        row.action.clone(),
                        row.practice_id.clone().unwrap_or_default(),
                        row.override_used.to_string(),
                        encode_trace(&row.discard_trace),
                        row.belief.clone().unwrap_or_default(),
                        format_score(row.belief_score),
                    ])
                    .expect("in-memory write");
                }
            }
            w.into_inner().expect("in-memory flush")
        }
        LogFormat::Jsonl => {
            let mut out = Vec::new();
            for line in &lines {
                serde_json::to_writer(&mut out, line).expect("tick line serializes");
                out.push(b'\n');
            }
            out
        }
    }
}

/// Reads a CSV log back into `(tick, row)` pairs.
pub fn parse_csv_log(bytes: &[u8]) -> Result<Vec<(u64, LogRow)>, LogParseError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(LogParseError::Malformed {
            line: 1,
            message: format!("unexpected header `{header}`"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| LogParseError::Malformed { line, message };
        let field = |k: usize| rec.get(k).unwrap_or_default();
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let tick = field(0).parse().map_err(|e| bad(format!("tick: {e}")))?;
        let row = LogRow {
            agent_id: field(1).to_string(),
            action: field(2).to_string(),
            practice_id: opt(field(3)),
            override_used: field(4)
                .parse()
                .map_err(|e| bad(format!("override: {e}")))?,
            discard_trace: decode_trace(field(5)).map_err(bad)?,
            belief: opt(field(6)),
            belief_score: field(7)
                .parse()
                .map_err(|e| bad(format!("belief_score: {e}")))?,
        };
        out.push((tick, row));
    }
    Ok(out)
}

pub fn parse_jsonl_log(bytes: &[u8]) -> Result<Vec<TickLine>, LogParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| LogParseError::Malformed {
        line: 0,
        message: e.to_string(),
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(LogParseError::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefCount {
    pub context: Option<String>,
    pub agents: u64,
}

/// Aggregate counts for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub header: RunHeader,
    pub agents: u64,
    /// Performances per practice, every practice listed.
    pub performances: BTreeMap<String, u64>,
    pub idle: u64,
    /// Discards per practice and reason; only non-zero entries.
    pub discards: BTreeMap<String, BTreeMap<DiscardReason, u64>>,
    pub overrides: u64,
    /// Non-override performances: selections that passed both disturbance checks.
    pub checks_passed: u64,
    /// Discards caused by a failed disturbance check.
    pub checks_failed: u64,
    /// `checks_passed / (checks_passed + checks_failed)`; `None` without checks.
    pub acceptability_rate: Option<f64>,
    /// Beliefs after the last tick (initial beliefs for a zero-tick run are not logged).
    pub final_beliefs: Vec<BeliefCount>,
    pub final_consensus: Option<f64>,
    pub consensus_threshold: f64,
    pub consensus_window: usize,
    pub time_to_consensus: Option<u64>,
}

pub fn summarize(log: &MetricsLog, theta: f64, window: usize) -> Summary {
    let mut performances: BTreeMap<String, u64> =
        log.practice_ids.iter().map(|p| (p.clone(), 0)).collect();
    let mut discards: BTreeMap<String, BTreeMap<DiscardReason, u64>> = BTreeMap::new();
    let mut idle = 0;
    let mut overrides = 0;
    let mut passed = 0;
    let mut failed = 0;
    for rec in &log.records {
        for e in &rec.entries {
            match e.action {
                Action::Perform(p) => {
                    *performances
                        .get_mut(&log.practice_ids[p.index()])
                        .expect("listed practice") += 1;
                    if e.override_used {
                        overrides += 1;
                    } else {
                        passed += 1;
                    }
                }
                Action::Idle => idle += 1,
            }
            for &(p, reason) in &e.trace {
                *discards
                    .entry(log.practice_ids[p.index()].clone())
                    .or_default()
                    .entry(reason)
                    .or_default() += 1;
                if reason.is_disturbance() {
                    failed += 1;
                }
            }
        }
    }

    let mut final_beliefs: BTreeMap<Option<String>, u64> = BTreeMap::new();
    if let Some(last) = log.records.last() {
        for e in &last.entries {
            let key = e.belief.context.map(|c| log.context_ids[c.index()].clone());
            *final_beliefs.entry(key).or_default() += 1;
        }
    }

    let series: Vec<f64> = log
        .records
        .iter()
        .map(|r| r.consensus.unwrap_or(f64::NAN))
        .collect();

    Summary {
        header: log.header.clone(),
        agents: log.agent_ids.len() as u64,
        performances,
        idle,
        discards,
        overrides,
        checks_passed: passed,
        checks_failed: failed,
        acceptability_rate: (passed + failed > 0).then(|| passed as f64 / (passed + failed) as f64),
        final_beliefs: final_beliefs
            .into_iter()
            .map(|(context, agents)| BeliefCount { context, agents })
            .collect(),
        final_consensus: log.records.last().and_then(|r| r.consensus),
        consensus_threshold: theta,
        consensus_window: window,
        time_to_consensus: time_to_consensus(&series, theta, window).map(|t| t as u64),
    }
}

impl Summary {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("summary serializes");
        out.push(b'\n');
        out
    }
}
