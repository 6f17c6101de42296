//! Scenario documents: schema, strict parsing, semantic validation, and
//! realisation into runtime structures.
//!
//! Scenarios are JSON. Unknown fields are rejected everywhere (`E100`), a
//! missing `schema_version` is `E101`, and everything else that fails to
//! deserialize is `E102` with line/column. Semantic checks follow.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::Belief;
use crate::decision::{AgentProfile, DecisionParams};
use crate::diagnostics::{is_valid_identifier, Code, Diagnostic, ValidationReport};
use crate::practice::{validate_registry, Endowment, Model, Registry};
use crate::rng::{Pcg32, INIT_STREAM};
use crate::topology::{AgentIx, Cell, MovementPolicy, Space, Topology};

pub const SCHEMA_VERSION: u32 = 1;

/// Names of the scenarios shipped with the crate.
pub const BUILTIN_NAMES: [&str; 3] = ["library", "breakfast", "density"];

pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "library" => Some(include_str!("../scenarios/library.json")),
        "breakfast" => Some(include_str!("../scenarios/breakfast.json")),
        "density" => Some(include_str!("../scenarios/density.json")),
        _ => None,
    }
}

fn default_ticks() -> u64 {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub registry: Registry,
    pub world: WorldSpec,
    #[serde(default)]
    pub decision: DecisionParams,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub movement: MovementPolicy,
    #[serde(default)]
    pub consensus: ConsensusParams,
    #[serde(default = "default_ticks")]
    pub ticks: u64,
}

/// Within-tick order in which agents observe, decide and act.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Ascending agent id.
    #[default]
    Ordered,
    /// A fresh seeded permutation every tick.
    Random,
}

fn default_theta() -> f64 {
    0.9
}

fn default_window() -> usize {
    10
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusParams {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_window")]
    pub window: usize,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        ConsensusParams {
            theta: default_theta(),
            window: default_window(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub topology: Topology,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    /// Number of agents generated from `population`, in addition to `agents`.
    #[serde(default)]
    pub agent_count: usize,
    #[serde(default)]
    pub population: Option<Population>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    #[serde(default)]
    pub endowment: BTreeSet<String>,
    #[serde(default)]
    pub initial_belief: Option<String>,
    #[serde(default)]
    pub preferences: BTreeMap<String, f64>,
    /// `[x, y]`; required on grids, forbidden on networks.
    #[serde(default)]
    pub cell: Option<[u32; 2]>,
}

fn default_prefix() -> String {
    "agent_".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Population {
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
    /// Generated agent `i` uses archetype `i % archetypes.len()`.
    pub archetypes: Vec<Archetype>,
    #[serde(default)]
    pub placement: PopulationPlacement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub endowment: BTreeSet<String>,
    #[serde(default)]
    pub initial_belief: Option<String>,
    #[serde(default)]
    pub preferences: BTreeMap<String, f64>,
}

/// Where generated agents go on a grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationPlacement {
    /// Uniformly among free cells, drawn from the initialisation stream.
    #[default]
    Random,
    /// First free cells in row-major order.
    RowMajor,
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ValidationReport> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Diagnostic::new(Code::E102, "", format!("syntax error: {e}")))?;
    let Some(object) = value.as_object() else {
        return Err(Diagnostic::new(Code::E102, "", "scenario must be a JSON object").into());
    };
    if !object.contains_key("schema_version") {
        return Err(Diagnostic::new(Code::E101, "schema_version", "missing schema_version").into());
    }

    let mut de = serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        let code = if message.starts_with("unknown field") {
            Code::E100
        } else {
            Code::E102
        };
        let path = if path == "." { String::new() } else { path };
        Diagnostic::new(code, path, message)
    })?;

    scenario.validate().into_result()?;
    Ok(scenario)
}

/// Canonical pretty-printed form; `parse_scenario(&emit_scenario(s)) == s`.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(scenario).expect("scenario serializes");
    out.push('\n');
    out
}

/// One agent after population expansion, before id sorting.
#[derive(Clone, Debug)]
struct AgentDraft<'a> {
    id: String,
    path: String,
    endowment: &'a BTreeSet<String>,
    initial_belief: Option<&'a str>,
    preferences: &'a BTreeMap<String, f64>,
    cell: Option<[u32; 2]>,
    generated: bool,
}

/// Scenario turned into runtime structures: validated model, agents sorted
/// by id, and their placement.
#[derive(Clone, Debug)]
pub struct Realized {
    pub model: Model,
    pub agents: Vec<RealizedAgent>,
    pub space: Space,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizedAgent {
    pub id: String,
    pub profile: AgentProfile,
    pub initial_belief: Belief,
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}

impl Scenario {
    /// SHA-256 of the compact canonical serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn drafts(&self) -> Vec<AgentDraft<'_>> {
        let mut out: Vec<AgentDraft<'_>> = self
            .world
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| AgentDraft {
                id: a.id.clone(),
                path: format!("world.agents[{i}]"),
                endowment: &a.endowment,
                initial_belief: a.initial_belief.as_deref(),
                preferences: &a.preferences,
                cell: a.cell,
                generated: false,
            })
            .collect();
        let count = self.world.agent_count;
        if let Some(pop) = &self.world.population {
            if !pop.archetypes.is_empty() {
                let width = digits(count.saturating_sub(1));
                for i in 0..count {
                    let k = i % pop.archetypes.len();
                    let arch = &pop.archetypes[k];
                    out.push(AgentDraft {
                        id: format!("{}{:0width$}", pop.id_prefix, i),
                        path: format!("world.population.archetypes[{k}]"),
                        endowment: &arch.endowment,
                        initial_belief: arch.initial_belief.as_deref(),
                        preferences: &arch.preferences,
                        cell: None,
                        generated: true,
                    });
                }
            }
        }
        out
    }

    /// Full semantic validation. Empty report means the scenario can run.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.schema_version != SCHEMA_VERSION {
            report.push(Diagnostic::new(
                Code::E103,
                "schema_version",
                format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        report.extend(validate_registry(&self.registry));

        let eps = self.decision.epsilon;
        if !(0.0..=1.0).contains(&eps) {
            report.push(Diagnostic::new(
                Code::E118,
                "decision.epsilon",
                format!("epsilon {eps} outside [0, 1]"),
            ));
        }
        let theta = self.consensus.theta;
        if !(theta > 0.0 && theta <= 1.0) {
            report.push(Diagnostic::new(
                Code::E119,
                "consensus.theta",
                format!("theta {theta} outside (0, 1]"),
            ));
        }
        if self.consensus.window == 0 {
            report.push(Diagnostic::new(
                Code::E119,
                "consensus.window",
                "window must be at least 1",
            ));
        }

        let components: HashSet<&str> = self
            .registry
            .components
            .iter()
            .map(|c| c.id.as_str())
            .collect();
        let practices: HashSet<&str> = self
            .registry
            .practices
            .iter()
            .map(|p| p.id.as_str())
            .collect();
        let contexts: HashSet<&str> = self
            .registry
            .contexts
            .iter()
            .map(|c| c.id.as_str())
            .collect();

        if self.world.agent_count > 0
            && self
                .world
                .population
                .as_ref()
                .is_none_or(|p| p.archetypes.is_empty())
        {
            report.push(Diagnostic::new(
                Code::E121,
                "world.population",
                "agent_count > 0 requires a population with at least one archetype",
            ));
        }

        let drafts = self.drafts();
        let mut seen_ids = HashSet::new();
        let mut checked_archetypes = HashSet::new();
        for d in &drafts {
            if !seen_ids.insert(d.id.as_str()) {
                report.push(Diagnostic::new(
                    Code::E112,
                    format!("{}.id", d.path),
                    format!("duplicate agent id `{}`", d.id),
                ));
            }
            if !is_valid_identifier(&d.id) {
                report.push(Diagnostic::new(
                    Code::E006,
                    format!("{}.id", d.path),
                    format!("invalid agent id `{}`", d.id),
                ));
            }
            // Archetype contents are shared by many agents; report them once.
            if d.generated && !checked_archetypes.insert(d.path.clone()) {
                continue;
            }
            let who = if d.generated {
                "archetype".to_string()
            } else {
                format!("agent `{}`", d.id)
            };
            for c in d.endowment {
                if !components.contains(c.as_str()) {
                    report.push(Diagnostic::new(
                        Code::E110,
                        format!("{}.endowment", d.path),
                        format!("{who} is endowed with unknown component `{c}`"),
                    ));
                }
            }
            if let Some(b) = d.initial_belief {
                if !contexts.contains(b) {
                    report.push(Diagnostic::new(
                        Code::E111,
                        format!("{}.initial_belief", d.path),
                        format!("{who} believes in unknown context `{b}`"),
                    ));
                }
            }
            for (p, w) in d.preferences {
                if !practices.contains(p.as_str()) {
                    report.push(Diagnostic::new(
                        Code::E120,
                        format!("{}.preferences", d.path),
                        format!("{who} has a preference for unknown practice `{p}`"),
                    ));
                }
                if !(w.is_finite() && *w >= 0.0) {
                    report.push(Diagnostic::new(
                        Code::E120,
                        format!("{}.preferences", d.path),
                        format!("{who} has invalid weight {w} for `{p}`"),
                    ));
                }
            }
        }

        match &self.world.topology {
            Topology::Grid {
                width,
                height,
                radius,
                ..
            } => {
                if *width == 0 || *height == 0 || *radius == 0 {
                    report.push(Diagnostic::new(
                        Code::E115,
                        "world.topology",
                        "grid width, height and radius must be at least 1",
                    ));
                } else {
                    let mut occupied: HashMap<[u32; 2], &str> = HashMap::new();
                    for d in drafts.iter().filter(|d| !d.generated) {
                        match d.cell {
                            None => report.push(Diagnostic::new(
                                Code::E113,
                                format!("{}.cell", d.path),
                                format!("agent `{}` needs a cell on a grid", d.id),
                            )),
                            Some([x, y]) if x >= *width || y >= *height => {
                                report.push(Diagnostic::new(
                                    Code::E113,
                                    format!("{}.cell", d.path),
                                    format!(
                                        "agent `{}` placed at ({x}, {y}) outside the {width}x{height} grid",
                                        d.id
                                    ),
                                ))
                            }
                            Some(cell) => {
                                if let Some(first) = occupied.insert(cell, &d.id) {
                                    report.push(Diagnostic::new(
                                        Code::E114,
                                        format!("{}.cell", d.path),
                                        format!(
                                            "agents `{first}` and `{}` share cell ({}, {})",
                                            d.id, cell[0], cell[1]
                                        ),
                                    ));
                                }
                            }
                        }
                    }
                    let total = *width as usize * *height as usize;
                    let free = total.saturating_sub(occupied.len());
                    if self.world.agent_count > free {
                        report.push(Diagnostic::new(
                            Code::E121,
                            "world.agent_count",
                            format!(
                                "{} generated agents do not fit in {free} free cells",
                                self.world.agent_count
                            ),
                        ));
                    }
                }
            }
            Topology::Network { edges } => {
                for d in drafts.iter().filter(|d| d.cell.is_some()) {
                    report.push(Diagnostic::new(
                        Code::E113,
                        format!("{}.cell", d.path),
                        format!("agent `{}` has a cell but the topology is a network", d.id),
                    ));
                }
                for (i, (a, b)) in edges.iter().enumerate() {
                    if a == b || !seen_ids.contains(a.as_str()) || !seen_ids.contains(b.as_str()) {
                        report.push(Diagnostic::new(
                            Code::E116,
                            format!("world.topology.edges[{i}]"),
                            format!("edge ({a}, {b}) is a self-loop or names an unknown agent"),
                        ));
                    }
                }
                if self.movement == MovementPolicy::RandomWalk {
                    report.push(Diagnostic::new(
                        Code::E117,
                        "movement",
                        "random_walk requires a grid topology",
                    ));
                }
            }
        }

        report
    }

    /// Validates and builds the runtime structures. Only placement of
    /// generated agents depends on `seed`.
    pub fn realize(&self, seed: u64) -> Result<Realized, ValidationReport> {
        self.validate().into_result()?;
        let model = Model::new(self.registry.clone())?;
        let mut drafts = self.drafts();

        if let Topology::Grid { width, height, .. } = self.world.topology {
            let taken: HashSet<[u32; 2]> = drafts.iter().filter_map(|d| d.cell).collect();
            let mut free: Vec<[u32; 2]> = (0..height)
                .flat_map(|y| (0..width).map(move |x| [x, y]))
                .filter(|c| !taken.contains(c))
                .collect();
            let placement = self
                .world
                .population
                .as_ref()
                .map(|p| p.placement)
                .unwrap_or_default();
            if placement == PopulationPlacement::Random {
                Pcg32::for_stream(seed, INIT_STREAM).shuffle(&mut free);
            }
            let mut free = free.into_iter();
            for d in drafts.iter_mut().filter(|d| d.generated) {
                d.cell = free.next();
            }
        }

        drafts.sort_by(|a, b| a.id.cmp(&b.id));

        let agents = drafts
            .iter()
            .map(|d| {
                let endowment = Endowment::from_ids(&model, d.endowment.iter().map(String::as_str))
                    .expect("validated endowment");
                let weights = d
                    .preferences
                    .iter()
                    .map(|(p, w)| (model.practice_ix(p).expect("validated practice"), *w))
                    .collect();
                let initial_belief = match d.initial_belief {
                    Some(c) => Belief::new(model.context_ix(c).expect("validated context"), 0.0),
                    None => Belief::UNKNOWN,
                };
                RealizedAgent {
                    id: d.id.clone(),
                    profile: AgentProfile::new(&model, endowment, &weights, self.decision.ordering),
                    initial_belief,
                }
            })
            .collect::<Vec<_>>();

        let space = match &self.world.topology {
            Topology::Grid {
                width,
                height,
                radius,
                torus,
            } => {
                let cells = drafts
                    .iter()
                    .map(|d| {
                        let [x, y] = d.cell.expect("placed agent");
                        Cell::new(x, y)
                    })
                    .collect();
                Space::grid(*width, *height, *radius, *torus, cells)
            }
            Topology::Network { edges } => {
                let index: HashMap<&str, AgentIx> = drafts
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (d.id.as_str(), AgentIx(i as u32)))
                    .collect();
                let edges: Vec<_> = edges
                    .iter()
                    .map(|(a, b)| (index[a.as_str()], index[b.as_str()]))
                    .collect();
                Space::network(drafts.len(), &edges)
            }
        }
        .expect("validated topology");

        Ok(Realized {
            model,
            agents,
            space,
        })
    }
}
