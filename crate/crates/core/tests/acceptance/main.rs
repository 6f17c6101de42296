//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.


use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use psim::context::time_to_consensus;
use psim::decision::{Action, DiscardReason};
use psim::metrics::{decode_trace, encode_trace, parse_csv_log, TraceEntry, CSV_HEADER};
use psim::practice::{compile_disturbance, Registry};
use psim::scenario::{builtin, emit_scenario, parse_scenario, Scenario, BUILTIN_NAMES};
use psim::sweep::{sweep, Executor, ParamAxis};
use psim::topology::AgentIx;
use psim::{emit_log, init_world, run, LogFormat, Summary};
use serde_json::Value;

use gen::{Gen, Limits};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;
type Discards = BTreeMap<String, BTreeMap<DiscardReason, u64>>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn psim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psim"))
        .args(args)
        .output()
        .expect("psim binary runs")
}

fn export_builtins(dir: &Path) -> Result<(), String> {
    for name in BUILTIN_NAMES {
        let out = psim(&["scenarios", "export", name, dir.to_str().unwrap()]);
        ensure(out.status.success(), || format!("export {name} failed"))?;
    }
    Ok(())
}

fn load_builtin(name: &str) -> Scenario {
    parse_scenario(builtin(name).unwrap()).unwrap()
}

fn read_summary(path: &Path) -> Summary {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Registry-level disturbance relation, computed from strings.
fn disturbs(reg: &Registry, a: &str, b: &str) -> bool {
    let pa = reg.practices.iter().find(|p| p.id == a).unwrap();
    let pb = reg.practices.iter().find(|p| p.id == b).unwrap();
    reg.rules
        .iter()
        .any(|r| pa.emits.contains(&r.emitter) && pb.requires.contains(&r.disturbed))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    export_builtins(tmp.path())?;
    let mut slowest = Duration::ZERO;
    for name in BUILTIN_NAMES {
        let file = tmp.path().join(format!("{name}.json"));
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let dir = tmp.path().join(format!("{name}-{attempt}"));
            let start = Instant::now();
            let out = psim(&[
                "run",
                file.to_str().unwrap(),
                "--seed",
                "42",
                "--ticks",
                "100",
                "--out",
                dir.to_str().unwrap(),
            ]);
            let took = start.elapsed();
            ensure(out.status.success(), || {
                format!("{name}: {}", String::from_utf8_lossy(&out.stderr))
            })?;
            ensure(took < Duration::from_secs(1), || {
                format!("{name} took {took:?}")
            })?;
            slowest = slowest.max(took);
            outputs.push((
                fs::read(dir.join("log.csv")).unwrap(),
                fs::read(dir.join("summary.json")).unwrap(),
            ));
        }
        ensure(outputs[0] == outputs[1], || {
            format!("{name}: outputs differ")
        })?;
        ensure(outputs[0].0.len() > CSV_HEADER.len() + 1, || {
            format!("{name}: empty log")
        })?;
    }
    Ok(format!(
        "3 scenarios x 2 runs identical, slowest {slowest:?}"
    ))
}

fn library_faithfulness() -> Outcome {
    let s = load_builtin("library");
    let world = init_world(&s, 42).map_err(|e| e.to_string())?;
    let n = world.agents().len();
    let model = world.model();
    let read = model.practice_ix("read_book").unwrap();
    let play = model.practice_ix("play_music").unwrap();
    let readers = world
        .agents()
        .iter()
        .filter(|a| model.performable(&a.profile.endowment, read))
        .count();
    let musician_last = world
        .agents()
        .iter()
        .position(|a| model.performable(&a.profile.endowment, play))
        == Some(n - 1);
    ensure(n == 10 && readers == 9 && musician_last, || {
        "library is not 9 readers then a musician".into()
    })?;
    ensure(s.decision.epsilon == 0.0, || "epsilon is not 0".into())?;
    for i in 0..n {
        let near = world.space().neighbors(AgentIx(i as u32)).unwrap();
        ensure(near.len() == n - 1, || {
            "neighbourhood is not fully mixing".into()
        })?;
    }

    let tmp = tempfile::tempdir().unwrap();
    export_builtins(tmp.path())?;
    let out_dir = tmp.path().join("out");
    let out = psim(&[
        "run",
        tmp.path().join("library.json").to_str().unwrap(),
        "--seed",
        "42",
        "--ticks",
        "100",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    ensure(out.status.success(), || "run failed".into())?;
    let summary = read_summary(&out_dir.join("summary.json"));
    ensure(summary.performances["read_book"] == 900, || {
        format!("read_book = {}", summary.performances["read_book"])
    })?;
    ensure(summary.performances["play_music"] == 0, || {
        format!("play_music = {}", summary.performances["play_music"])
    })?;
    let expected: Discards = [(
        "play_music".to_string(),
        [(DiscardReason::DisturbsOther, 100)].into(),
    )]
    .into();
    ensure(summary.discards == expected, || {
        format!("discards = {:?}", summary.discards)
    })?;

    // Hand trace: every tick the nine readers read; the musician, activated
    // last, sees them reading and backs off. Only a01 at tick 0 observes
    // nothing.
    let rows = parse_csv_log(&fs::read(out_dir.join("log.csv")).unwrap()).unwrap();
    ensure(rows.len() == 1000, || format!("{} rows", rows.len()))?;
    for (tick, row) in &rows {
        let musician = row.agent_id == "a10";
        let trace = encode_trace(&row.discard_trace);
        let first = *tick == 0 && row.agent_id == "a01";
        let ok = if musician {
            row.action == "idle" && trace == "play_music:DisturbsOther"
        } else {
            row.action == "perform"
                && row.practice_id.as_deref() == Some("read_book")
                && trace.is_empty()
        } && !row.override_used
            && if first {
                row.belief.is_none() && row.belief_score == 0.0
            } else {
                row.belief.as_deref() == Some("library") && row.belief_score == 1.0
            };
        ensure(ok, || format!("tick {tick}: unexpected row {row:?}"))?;
    }
    Ok(
        "read_book 900, play_music 0, 100 DisturbsOther discards; all 1000 rows match the trace"
            .into(),
    )
}

fn safety_audit() -> Outcome {
    let limits = Limits {
        agents: 10,
        practices: 5,
        rules: 6,
    };
    let mut g = Gen::new(0x5afe);
    let mut scenarios = 0;
    let mut audited = 0u64;
    let mut violations = Vec::new();
    let mut with_neighbours = 0u64;
    while scenarios < 1200 {
        // The first 1000 run with epsilon 0; the rest mix in overrides,
        // which the audit must skip.
        let epsilon = if scenarios < 1000 {
            Some(0.0)
        } else {
            Some(0.3)
        };
        let value = gen::scenario(&mut g, &limits, epsilon, 20);
        let s = parse_scenario(&value.to_string()).map_err(|e| format!("generator: {e}"))?;
        let seed = g.u64();
        let mut world = init_world(&s, seed).map_err(|e| e.to_string())?;
        let n = world.agents().len();
        let practice_ids: Vec<String> = world
            .model()
            .practices()
            .iter()
            .map(|p| p.id.clone())
            .collect();
        let stationary = s.movement == psim::topology::MovementPolicy::None;
        // Brute-force neighbourhoods for stationary worlds.
        let expected_near: Option<Vec<BTreeSet<usize>>> = stationary.then(|| {
            (0..n)
                .map(|i| match &s.world.topology {
                    psim::Topology::Grid {
                        width,
                        height,
                        radius,
                        torus,
                    } => {
                        let ci = world.space().cell(AgentIx(i as u32)).unwrap();
                        (0..n)
                            .filter(|&j| j != i)
                            .filter(|&j| {
                                let cj = world.space().cell(AgentIx(j as u32)).unwrap();
                                let mut dx = ci.x.abs_diff(cj.x);
                                let mut dy = ci.y.abs_diff(cj.y);
                                if *torus {
                                    dx = dx.min(width - dx);
                                    dy = dy.min(height - dy);
                                }
                                dx.max(dy) <= *radius
                            })
                            .collect()
                    }
                    psim::Topology::Network { edges } => {
                        let me = &world.agents()[i].id;
                        edges
                            .iter()
                            .filter_map(|(a, b)| {
                                if a == me {
                                    Some(b)
                                } else if b == me {
                                    Some(a)
                                } else {
                                    None
                                }
                            })
                            .map(|id| world.agent_ix(id).unwrap().index())
                            .collect()
                    }
                })
                .collect()
        });

        let mut shadow: Vec<Option<String>> = vec![None; n];
        for _ in 0..20 {
            world.step_observed(|turn| {
                let i = turn.agent.index();
                for &(j, q) in turn.neighbours {
                    if shadow[j.index()].as_deref() != Some(practice_ids[q.index()].as_str()) {
                        violations.push(format!("tick {}: stale neighbour view", turn.tick));
                    }
                }
                if let Some(near) = &expected_near {
                    let shown: BTreeSet<usize> =
                        turn.neighbours.iter().map(|(j, _)| j.index()).collect();
                    let busy: BTreeSet<usize> = near[i]
                        .iter()
                        .copied()
                        .filter(|&j| shadow[j].is_some())
                        .collect();
                    if shown != busy {
                        violations.push(format!("tick {}: neighbourhood mismatch", turn.tick));
                    }
                }
                if let Action::Perform(p) = turn.decision.action {
                    with_neighbours += u64::from(!turn.neighbours.is_empty());
                    if !turn.decision.override_used {
                        audited += 1;
                        let mine = &practice_ids[p.index()];
                        for &(_, q) in turn.neighbours {
                            let theirs = &practice_ids[q.index()];
                            if disturbs(&s.registry, mine, theirs)
                                || disturbs(&s.registry, theirs, mine)
                            {
                                violations.push(format!(
                                    "tick {}: {mine} performed next to {theirs}",
                                    turn.tick
                                ));
                            }
                        }
                    }
                }
                shadow[i] = turn
                    .decision
                    .action
                    .practice()
                    .map(|p| practice_ids[p.index()].clone());
            });
        }
        scenarios += 1;
    }
    ensure(violations.is_empty(), || {
        format!("{} violations, first: {}", violations.len(), violations[0])
    })?;
    ensure(audited > 10_000 && with_neighbours > 1_000, || {
        format!("audit too thin: {audited} performances, {with_neighbours} with neighbours")
    })?;
    Ok(format!(
        "{scenarios} scenarios, {audited} non-override performances replayed, 0 violations"
    ))
}

fn oracle_equivalence() -> Outcome {
    let limits = Limits {
        agents: 3,
        practices: 3,
        rules: 4,
    };
    let mut g = Gen::new(0x0dd);
    let mut performs = 0;
    let pairs = 1500;
    for k in 0..pairs {
        let ticks = g.between(0, 2) as u64;
        let value = gen::scenario(&mut g, &limits, None, ticks);
        let seed = if g.chance(0.5) {
            g.u64()
        } else {
            g.below(50) as u64
        };
        let s = parse_scenario(&value.to_string()).map_err(|e| format!("generator: {e}"))?;
        let log = run(&s, seed, ticks).map_err(|e| e.to_string())?;
        let got = String::from_utf8(emit_log(&log, LogFormat::Csv)).unwrap();
        let want = oracle::simulate(&value, seed, ticks);
        ensure(got == want.csv, || {
            format!(
                "pair {k} (seed {seed}) differs\nscenario: {value}\nengine:\n{got}oracle:\n{}",
                want.csv
            )
        })?;
        let consensus: Vec<Option<f64>> = log.records.iter().map(|r| r.consensus).collect();
        ensure(consensus == want.consensus, || {
            format!("pair {k}: consensus {consensus:?} vs {:?}", want.consensus)
        })?;
        performs += got.matches(",perform,").count();
    }
    Ok(format!(
        "{pairs} (scenario, seed) pairs byte-identical, {performs} performances"
    ))
}

fn breakfast_consensus() -> Outcome {
    let s = load_builtin("breakfast");
    let world = init_world(&s, 42).map_err(|e| e.to_string())?;
    let model = world.model();
    let ctx = model.context_ix("breakfast").unwrap();
    let breakfast_practices: Vec<_> = (0..model.practices().len() as u32)
        .map(psim::practice::PracticeIx)
        .filter(|&p| model.context(ctx).is_appropriate(p))
        .collect();
    for a in world.agents() {
        ensure(
            breakfast_practices
                .iter()
                .all(|&p| model.performable(&a.profile.endowment, p)),
            || format!("{} lacks a breakfast endowment", a.id),
        )?;
        ensure(a.initial_belief.context.is_none(), || {
            format!("{} starts with a belief", a.id)
        })?;
    }
    let n = world.agents().len();
    for i in 0..n {
        ensure(
            world.space().neighbors(AgentIx(i as u32)).unwrap().len() == n - 1,
            || "neighbourhood is not fully mixing".into(),
        )?;
    }

    let log = run(&s, 42, s.ticks).map_err(|e| e.to_string())?;
    let series: Vec<f64> = log.records.iter().map(|r| r.consensus.unwrap()).collect();
    let first_full = series.iter().position(|&c| c == 1.0);
    let ttc = time_to_consensus(&series, 0.9, 10);
    ensure(first_full.is_some_and(|t| t <= 10), || {
        format!("first 1.0 at {first_full:?}")
    })?;
    ensure(ttc.is_some_and(|t| t <= 10), || {
        format!("time_to_consensus {ttc:?}")
    })?;
    // Hand trace: at tick 0 the first agent sees nobody yet (7 of 8 agree);
    // from tick 1 everyone has seen breakfast practices.
    ensure(
        series[0] == 0.875 && series[1..].iter().all(|&c| c == 1.0),
        || format!("series starts {:?}", &series[..3]),
    )?;
    ensure(ttc == Some(1), || {
        format!("time_to_consensus {ttc:?}, expected 1")
    })?;
    Ok(format!(
        "consensus 0.875 then 1.0 from tick 1; time_to_consensus {}",
        ttc.unwrap()
    ))
}

/// Spearman correlation with average ranks for ties.
fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn crowdedness() -> Outcome {
    let s = load_builtin("density");
    ensure(
        matches!(
            s.world.topology,
            psim::Topology::Grid {
                width: 10,
                height: 10,
                ..
            }
        ),
        || "density is not on a 10x10 grid".into(),
    )?;
    let axis = ParamAxis::parse("world.agent_count=5,10,20").unwrap();
    let seeds: Vec<u64> = (1..=20).collect();
    let table = sweep(&s, &[axis], &seeds, None, Executor::Parallel { jobs: None })
        .map_err(|e| e.to_string())?;
    ensure(table.rows.len() == 60, || {
        format!("{} rows", table.rows.len())
    })?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut by_level: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for row in &table.rows {
        let level = row.summary.agents;
        let rate = row
            .summary
            .acceptability_rate
            .ok_or_else(|| format!("no checks at {level} agents, seed {}", row.seed))?;
        xs.push(level as f64);
        ys.push(rate);
        by_level.entry(level).or_default().push(rate);
    }
    let means: Vec<(u64, f64)> = by_level
        .iter()
        .map(|(&k, v)| (k, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    ensure(
        means.iter().map(|m| m.0).collect::<Vec<_>>() == [5, 10, 20],
        || format!("levels {means:?}"),
    )?;
    ensure(means.windows(2).all(|w| w[1].1 <= w[0].1), || {
        format!("means increase: {means:?}")
    })?;
    let rho = spearman(&xs, &ys);
    ensure(rho <= 0.0, || format!("rho = {rho}"))?;
    let shown: Vec<String> = means.iter().map(|(k, m)| format!("{k}:{m:.4}")).collect();
    Ok(format!("means {} ; Spearman rho {rho:.4}", shown.join(" ")))
}

fn matrix_equivalence() -> Outcome {
    let mut g = Gen::new(0x3a7);
    let mut cells = 0u64;
    let mut hits = 0u64;
    for k in 0..600 {
        let value = gen::registry(&mut g, 20, 30);
        let reg: Registry = serde_json::from_value(value).unwrap();
        let matrix = compile_disturbance(&reg).map_err(|e| format!("registry {k}: {e}"))?;
        let mut ids: Vec<&str> = reg.practices.iter().map(|p| p.id.as_str()).collect();
        ids.sort_unstable();
        ensure(matrix.practice_ids() == ids.as_slice(), || {
            format!("registry {k}: id order")
        })?;
        for p in &reg.practices {
            for q in &reg.practices {
                let mut expected = false;
                for r in &reg.rules {
                    for e in &p.emits {
                        for d in &q.requires {
                            if *e == r.emitter && *d == r.disturbed {
                                expected = true;
                            }
                        }
                    }
                }
                let got = matrix.by_id(&p.id, &q.id);
                ensure(got == Some(expected), || {
                    format!(
                        "registry {k}: ({}, {}) = {got:?}, expected {expected}",
                        p.id, q.id
                    )
                })?;
                cells += 1;
                hits += u64::from(expected);
            }
        }
    }
    ensure(hits > 0 && hits < cells, || "degenerate registries".into())?;
    Ok(format!(
        "600 registries, {cells} cells ({hits} disturbing) match"
    ))
}

fn duet(musician_first: bool) -> Value {
    let mut s: Value = serde_json::from_str(builtin("library").unwrap()).unwrap();
    let agents = s["world"]["agents"].as_array().unwrap().clone();
    let reader = agents[0]["endowment"].clone();
    let musician = agents[9]["endowment"].clone();
    let (e0, e1) = if musician_first {
        (musician, reader)
    } else {
        (reader, musician)
    };
    s["world"]["topology"] =
        serde_json::json!({"kind": "grid", "width": 2, "height": 1, "radius": 1, "torus": false});
    s["world"]["agents"] = serde_json::json!([
        {"id": "a0", "endowment": e0, "cell": [0, 0]},
        {"id": "a1", "endowment": e1, "cell": [1, 0]},
    ]);
    s
}

fn first_mover() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut logs = Vec::new();
    for musician_first in [true, false] {
        let file = tmp.path().join(format!("duet-{musician_first}.json"));
        fs::write(&file, duet(musician_first).to_string()).unwrap();
        let dir = tmp.path().join(format!("out-{musician_first}"));
        let out = psim(&[
            "run",
            file.to_str().unwrap(),
            "--ticks",
            "1",
            "--out",
            dir.to_str().unwrap(),
        ]);
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        logs.push(fs::read_to_string(dir.join("log.csv")).unwrap());
    }
    let musician_first = format!(
        "{CSV_HEADER}\n0,a0,perform,play_music,false,,,0.0\n0,a1,idle,,false,read_book:DisturbedByOther,library,1.0\n"
    );
    let reader_first = format!(
        "{CSV_HEADER}\n0,a0,perform,read_book,false,,,0.0\n0,a1,idle,,false,play_music:DisturbsOther,library,1.0\n"
    );
    ensure(logs[0] == musician_first, || {
        format!("musician first:\n{}", logs[0])
    })?;
    ensure(logs[1] == reader_first, || {
        format!("reader first:\n{}", logs[1])
    })?;
    ensure(logs[0] != logs[1], || "outcomes coincide".into())?;
    Ok("musician-first blocks the reader; reader-first blocks the musician".into())
}

fn format_stability() -> Outcome {
    ensure(
        CSV_HEADER == "tick,agent_id,action,practice_id,override,discard_trace,belief,belief_score",
        || format!("header {CSV_HEADER}"),
    )?;
    let trace = vec![
        TraceEntry {
            practice: "play_music".into(),
            reason: DiscardReason::DisturbsOther,
        },
        TraceEntry {
            practice: "read_book".into(),
            reason: DiscardReason::ContextInappropriate,
        },
        TraceEntry {
            practice: "chat".into(),
            reason: DiscardReason::DisturbedByOther,
        },
        TraceEntry {
            practice: "nap".into(),
            reason: DiscardReason::NotPerformable,
        },
    ];
    let encoded = encode_trace(&trace);
    ensure(
        encoded
            == "play_music:DisturbsOther;read_book:ContextInappropriate;chat:DisturbedByOther;nap:NotPerformable",
        || format!("trace encodes as {encoded}"),
    )?;
    ensure(decode_trace(&encoded).as_ref() == Ok(&trace), || {
        "trace round trip".into()
    })?;
    ensure(encode_trace(&[]).is_empty(), || "empty trace".into())?;

    let tmp = tempfile::tempdir().unwrap();
    export_builtins(tmp.path())?;
    for name in BUILTIN_NAMES {
        let file = tmp.path().join(format!("{name}.json"));
        let out = psim(&["validate", file.to_str().unwrap()]);
        ensure(
            out.status.code() == Some(0) && out.stdout.is_empty() && out.stderr.is_empty(),
            || format!("validate {name}: {:?}", out.status),
        )?;
        let text = fs::read_to_string(&file).unwrap();
        let reparsed = parse_scenario(&text).map_err(|e| e.to_string())?;
        ensure(emit_scenario(&reparsed) == text, || {
            format!("{name} does not round-trip")
        })?;
    }

    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        builtin("library")
            .unwrap()
            .replacen("\"ticks\"", "\"tick_count\"", 1),
    )
    .unwrap();
    let out = psim(&["validate", bad.to_str().unwrap()]);
    ensure(out.status.code() == Some(1), || {
        format!("unknown field exit {:?}", out.status)
    })?;
    ensure(
        String::from_utf8_lossy(&out.stderr).contains("E100"),
        || "no E100".into(),
    )?;
    ensure(out.stdout.is_empty(), || {
        "validation wrote to stdout".into()
    })?;

    let out = psim(&["frobnicate"]);
    ensure(out.status.code() == Some(2), || {
        format!("unknown subcommand exit {:?}", out.status)
    })?;
    let out = psim(&[
        "run",
        tmp.path().join("missing.json").to_str().unwrap(),
        "--out",
        "x",
    ]);
    ensure(out.status.code() == Some(2), || {
        format!("missing file exit {:?}", out.status)
    })?;

    let density = tmp.path().join("density.json");
    let bogus_out = tmp.path().join("bogus.csv");
    let out = psim(&[
        "sweep",
        density.to_str().unwrap(),
        "--param",
        "bogus.path=1",
        "--seeds",
        "1..3",
        "--out",
        bogus_out.to_str().unwrap(),
    ]);
    ensure(out.status.code() == Some(1), || {
        format!("bogus path exit {:?}", out.status)
    })?;
    ensure(!bogus_out.exists(), || "bogus sweep wrote output".into())?;

    let sweep_out = tmp.path().join("sweep.csv");
    let out = psim(&[
        "sweep",
        density.to_str().unwrap(),
        "--param",
        "world.agent_count=5,10,20",
        "--seeds",
        "1..20",
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    let lines = fs::read_to_string(&sweep_out).unwrap().lines().count();
    ensure(lines == 61, || format!("sweep wrote {lines} lines"))?;

    let golden = include_str!("golden/library_seed42_2ticks.csv");
    let dir = tmp.path().join("golden");
    let out = psim(&[
        "run",
        tmp.path().join("library.json").to_str().unwrap(),
        "--seed",
        "42",
        "--ticks",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    ensure(out.status.success(), || "golden run failed".into())?;
    let got = fs::read_to_string(dir.join("log.csv")).unwrap();
    ensure(got == golden, || format!("golden log differs:\n{got}"))?;
    Ok("header, trace encoding, round-trip, exit codes, golden log and sweep shape".into())
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("determinism", determinism),
        ("library scenario outcome", library_faithfulness),
        ("epsilon-0 safety audit", safety_audit),
        ("small-instance oracle equivalence", oracle_equivalence),
        ("breakfast consensus emergence", breakfast_consensus),
        ("crowdedness property", crowdedness),
        ("disturbance matrix oracle", matrix_equivalence),
        ("first-mover sensitivity", first_mover),
        ("format stability", format_stability),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{took:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL: {why} [{took:.2}s]", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
