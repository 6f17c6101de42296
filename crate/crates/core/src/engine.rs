//! The tick loop.
//!
//! Each tick draws a fresh generator from `(seed, tick)`. Agents are activated
//! one at a time (ascending id, or a seeded permutation). An activated agent
//! moves (if enabled), observes the performances its neighbours hold at that
//! moment, updates its belief, decides, and its new performance is visible
//! to every agent activated after it. Performances last one tick.

use std::sync::Arc;

use crate::context::{consensus_index, infer_context, Belief};
use crate::decision::{decide, Action, AgentProfile, Decision, DecisionParams, DiscardReason};
use crate::diagnostics::ValidationReport;
use crate::practice::{Model, PracticeIx};
use crate::rng::Pcg32;
use crate::scenario::{Activation, Scenario};
use crate::topology::{AgentIx, MovementPolicy, Space};
use crate::ENGINE_VERSION;

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub id: String,
    pub profile: AgentProfile,
    pub initial_belief: Belief,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentRecord {
    pub agent: AgentIx,
    pub action: Action,
    pub override_used: bool,
    pub trace: Vec<(PracticeIx, DiscardReason)>,
    pub belief: Belief,
}

/// One entry per agent, in ascending agent order regardless of activation.
/// `consensus` is `None` for an empty world.
#[derive(Clone, Debug, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub entries: Vec<AgentRecord>,
    pub consensus: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RunHeader {
    pub scenario_hash: String,
    pub seed: u64,
    pub ticks: u64,
    pub engine_version: String,
}

/// Everything a run produced, with the id tables needed to print it.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsLog {
    pub header: RunHeader,
    pub agent_ids: Vec<String>,
    pub practice_ids: Vec<String>,
    pub context_ids: Vec<String>,
    pub records: Vec<TickRecord>,
}

/// What an agent saw and did when it was activated.
#[derive(Debug)]
pub struct Turn<'a> {
    pub tick: u64,
    pub agent: AgentIx,
    pub neighbours: &'a [(AgentIx, PracticeIx)],
    pub belief: Belief,
    pub decision: &'a Decision,
}

#[derive(Clone, Debug)]
pub struct World {
    model: Arc<Model>,
    agents: Vec<Agent>,
    space: Space,
    performances: Vec<Option<PracticeIx>>,
    beliefs: Vec<Belief>,
    tick: u64,
    seed: u64,
    rng: Pcg32,
    params: DecisionParams,
    activation: Activation,
    movement: MovementPolicy,
}

/// World at tick 0: everyone idle, beliefs at their initial values.
pub fn init_world(scenario: &Scenario, seed: u64) -> Result<World, ValidationReport> {
    let realized = scenario.realize(seed)?;
    let agents: Vec<Agent> = realized
        .agents
        .into_iter()
        .map(|a| Agent {
            id: a.id,
            profile: a.profile,
            initial_belief: a.initial_belief,
        })
        .collect();
    let n = agents.len();
    Ok(World {
        model: Arc::new(realized.model),
        beliefs: agents.iter().map(|a| a.initial_belief).collect(),
        agents,
        space: realized.space,
        performances: vec![None; n],
        tick: 0,
        seed,
        rng: Pcg32::for_stream(seed, 0),
        params: scenario.decision,
        activation: scenario.activation,
        movement: scenario.movement,
    })
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        *self.model == *other.model
            && self.agents == other.agents
            && self.space == other.space
            && self.performances == other.performances
            && self.beliefs == other.beliefs
            && self.tick == other.tick
            && self.seed == other.seed
            && self.rng == other.rng
            && self.params == other.params
            && self.activation == other.activation
            && self.movement == other.movement
    }
}

impl World {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn beliefs(&self) -> &[Belief] {
        &self.beliefs
    }

    pub fn performances(&self) -> &[Option<PracticeIx>] {
        &self.performances
    }

    pub fn agent_ix(&self, id: &str) -> Option<AgentIx> {
        self.agents
            .binary_search_by(|a| a.id.as_str().cmp(id))
            .ok()
            .map(|i| AgentIx(i as u32))
    }

    pub fn step(&mut self) -> TickRecord {
        self.step_observed(|_| {})
    }

    /// Advances one tick, reporting every activation to `observe`.
    pub fn step_observed<F>(&mut self, mut observe: F) -> TickRecord
    where
        F: FnMut(&Turn<'_>),
    {
        let n = self.agents.len();
        self.rng = Pcg32::for_stream(self.seed, self.tick);
        let mut order: Vec<AgentIx> = (0..n as u32).map(AgentIx).collect();
        if self.activation == Activation::Random {
            self.rng.shuffle(&mut order);
        }

        let mut entries: Vec<Option<AgentRecord>> = vec![None; n];
        let mut neighbours = Vec::new();
        let mut observation = Vec::new();
        for agent in order {
            let i = agent.index();
            self.space
                .move_agent(agent, self.movement, &mut self.rng)
                .expect("movement policy validated against topology");

            neighbours.clear();
            for other in self.space.neighbors(agent).expect("agent exists") {
                if let Some(p) = self.performances[other.index()] {
                    neighbours.push((other, p));
                }
            }
            observation.clear();
            observation.extend(neighbours.iter().map(|&(_, p)| p));

            let belief = infer_context(&self.model, &observation, self.beliefs[i])
                .expect("performances are model practices");
            let decision = decide(
                &self.model,
                &self.agents[i].profile,
                belief,
                &neighbours,
                &self.params,
                &mut self.rng,
            );
            observe(&Turn {
                tick: self.tick,
                agent,
                neighbours: &neighbours,
                belief,
                decision: &decision,
            });

            self.beliefs[i] = belief;
            self.performances[i] = decision.action.practice();
            entries[i] = Some(AgentRecord {
                agent,
                action: decision.action,
                override_used: decision.override_used,
                trace: decision.trace,
                belief,
            });
        }

        let record = TickRecord {
            tick: self.tick,
            entries: entries
                .into_iter()
                .map(|e| e.expect("every agent activated once"))
                .collect(),
            consensus: consensus_index(&self.beliefs).ok(),
        };
        self.tick += 1;
        record
    }

    /// Empty log carrying this world's id tables.
    pub fn empty_log(&self, scenario_hash: String, ticks: u64) -> MetricsLog {
        MetricsLog {
            header: RunHeader {
                scenario_hash,
                seed: self.seed,
                ticks,
                engine_version: ENGINE_VERSION.to_string(),
            },
            agent_ids: self.agents.iter().map(|a| a.id.clone()).collect(),
            practice_ids: self
                .model
                .practices()
                .iter()
                .map(|p| p.id.clone())
                .collect(),
            context_ids: self.model.contexts().iter().map(|c| c.id.clone()).collect(),
            records: Vec::with_capacity(ticks as usize),
        }
    }
}

/// Runs `ticks` ticks from a fresh world.
pub fn run(scenario: &Scenario, seed: u64, ticks: u64) -> Result<MetricsLog, ValidationReport> {
    let mut world = init_world(scenario, seed)?;
    let mut log = world.empty_log(scenario.content_hash(), ticks);
    for _ in 0..ticks {
        log.records.push(world.step());
    }
    Ok(log)
}
