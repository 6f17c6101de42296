//! Who surrounds whom: Moore neighbourhoods on a grid, or links in a network.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Pcg32;

index_type!(
    /// Position of an agent in the world's id-sorted agent list.
    AgentIx
);

fn default_radius() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Grid {
        width: u32,
        height: u32,
        #[serde(default = "default_radius")]
        radius: u32,
        #[serde(default)]
        torus: bool,
    },
    Network {
        #[serde(default)]
        edges: Vec<(String, String)>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementPolicy {
    #[default]
    None,
    RandomWalk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("unknown agent {0}")]
    UnknownAgent(u32),
    #[error("grid dimensions and radius must be at least 1")]
    EmptyGrid,
    #[error("agent {agent} placed at ({x}, {y}) outside the grid")]
    OutOfBounds { agent: u32, x: u32, y: u32 },
    #[error("agents {first} and {second} share cell ({x}, {y})")]
    SharedCell {
        first: u32,
        second: u32,
        x: u32,
        y: u32,
    },
    #[error("edge ({0}, {1}) is a self-loop or names an unknown agent")]
    BadEdge(u32, u32),
    #[error("random walk requires a grid topology")]
    MovementOnNetwork,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Grid {
    width: u32,
    height: u32,
    radius: u32,
    torus: bool,
    cells: Vec<Cell>,
    occupancy: Vec<Option<AgentIx>>,
}

impl Grid {
    fn slot(&self, c: Cell) -> usize {
        c.y as usize * self.width as usize + c.x as usize
    }

    fn coords(&self, pos: u32, len: u32, reach: u32) -> Vec<u32> {
        if self.torus {
            if 2 * u64::from(reach) + 1 >= u64::from(len) {
                (0..len).collect()
            } else {
                (0..=2 * reach)
                    .map(|k| (pos + len - reach + k) % len)
                    .collect()
            }
        } else {
            (pos.saturating_sub(reach)..=(pos + reach).min(len - 1)).collect()
        }
    }
}

/// Topology together with the agents' placement in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space(Layout);

#[derive(Clone, Debug, PartialEq, Eq)]
enum Layout {
    Grid(Grid),
    Network { adjacency: Vec<Vec<AgentIx>> },
}

impl Space {
    /// `cells[i]` is the cell of agent `i`; placement must be injective.
    pub fn grid(
        width: u32,
        height: u32,
        radius: u32,
        torus: bool,
        cells: Vec<Cell>,
    ) -> Result<Self, TopologyError> {
        if width == 0 || height == 0 || radius == 0 {
            return Err(TopologyError::EmptyGrid);
        }
        let mut occupancy = vec![None; width as usize * height as usize];
        for (i, c) in cells.iter().enumerate() {
            if c.x >= width || c.y >= height {
                return Err(TopologyError::OutOfBounds {
                    agent: i as u32,
                    x: c.x,
                    y: c.y,
                });
            }
            let slot = c.y as usize * width as usize + c.x as usize;
            if let Some(AgentIx(first)) = occupancy[slot] {
                return Err(TopologyError::SharedCell {
                    first,
                    second: i as u32,
                    x: c.x,
                    y: c.y,
                });
            }
            occupancy[slot] = Some(AgentIx(i as u32));
        }
        Ok(Space(Layout::Grid(Grid {
            width,
            height,
            radius,
            torus,
            cells,
            occupancy,
        })))
    }

    /// Undirected network over `agents` nodes.
    pub fn network(agents: usize, edges: &[(AgentIx, AgentIx)]) -> Result<Self, TopologyError> {
        let mut adjacency = vec![Vec::new(); agents];
        for &(a, b) in edges {
            if a == b || a.index() >= agents || b.index() >= agents {
                return Err(TopologyError::BadEdge(a.0, b.0));
            }
            adjacency[a.index()].push(b);
            adjacency[b.index()].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Space(Layout::Network { adjacency }))
    }

    pub fn agent_count(&self) -> usize {
        match &self.0 {
            Layout::Grid(g) => g.cells.len(),
            Layout::Network { adjacency } => adjacency.len(),
        }
    }

    pub fn cell(&self, agent: AgentIx) -> Option<Cell> {
        match &self.0 {
            Layout::Grid(g) => g.cells.get(agent.index()).copied(),
            Layout::Network { .. } => None,
        }
    }

    /// Occupied share of the grid; `None` on a network.
    pub fn density(&self) -> Option<f64> {
        match &self.0 {
            Layout::Grid(g) => Some(g.cells.len() as f64 / g.occupancy.len() as f64),
            Layout::Network { .. } => None,
        }
    }

    /// Agents within Chebyshev distance `radius` (wrapping iff torus), or
    /// adjacent network nodes. Excludes `agent`; sorted ascending.
    pub fn neighbors(&self, agent: AgentIx) -> Result<Vec<AgentIx>, TopologyError> {
        if agent.index() >= self.agent_count() {
            return Err(TopologyError::UnknownAgent(agent.0));
        }
        match &self.0 {
            Layout::Network { adjacency } => Ok(adjacency[agent.index()].clone()),
            Layout::Grid(g) => {
                let c = g.cells[agent.index()];
                let xs = g.coords(c.x, g.width, g.radius);
                let ys = g.coords(c.y, g.height, g.radius);
                let mut out = Vec::new();
                for &y in &ys {
                    for &x in &xs {
                        if let Some(other) = g.occupancy[g.slot(Cell::new(x, y))] {
                            if other != agent {
                                out.push(other);
                            }
                        }
                    }
                }
                out.sort_unstable();
                Ok(out)
            }
        }
    }

    /// Empty cells among the (up to 8) cells adjacent to `agent`, scanned
    /// row by row from the top-left offset.
    pub fn free_adjacent(&self, agent: AgentIx) -> Result<Vec<Cell>, TopologyError> {
        let g = match &self.0 {
            Layout::Grid(g) => g,
            Layout::Network { .. } => return Err(TopologyError::MovementOnNetwork),
        };
        let c = *g
            .cells
            .get(agent.index())
            .ok_or(TopologyError::UnknownAgent(agent.0))?;
        let mut out: Vec<Cell> = Vec::with_capacity(8);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let Some(x) = shift(c.x, dx, g.width, g.torus) else {
                    continue;
                };
                let Some(y) = shift(c.y, dy, g.height, g.torus) else {
                    continue;
                };
                let cell = Cell::new(x, y);
                if cell != c && g.occupancy[g.slot(cell)].is_none() && !out.contains(&cell) {
                    out.push(cell);
                }
            }
        }
        Ok(out)
    }

    /// `None` leaves the placement unchanged. `RandomWalk` moves the agent to
    /// a uniformly drawn free adjacent cell (one bounded draw), and stays put
    /// without drawing when there is none.
    pub fn move_agent(
        &mut self,
        agent: AgentIx,
        policy: MovementPolicy,
        rng: &mut Pcg32,
    ) -> Result<(), TopologyError> {
        match policy {
            MovementPolicy::None => {
                if agent.index() >= self.agent_count() {
                    return Err(TopologyError::UnknownAgent(agent.0));
                }
                Ok(())
            }
            MovementPolicy::RandomWalk => {
                let free = self.free_adjacent(agent)?;
                if free.is_empty() {
                    return Ok(());
                }
                let target = free[rng.next_bounded(free.len() as u32) as usize];
                let Layout::Grid(g) = &mut self.0 else {
                    unreachable!("free_adjacent rejects networks");
                };
                let from = g.slot(g.cells[agent.index()]);
                let to = g.slot(target);
                g.occupancy[from] = None;
                g.occupancy[to] = Some(agent);
                g.cells[agent.index()] = target;
                Ok(())
            }
        }
    }
}

fn shift(pos: u32, delta: i64, len: u32, torus: bool) -> Option<u32> {
    let moved = i64::from(pos) + delta;
    let len = i64::from(len);
    if torus {
        Some(moved.rem_euclid(len) as u32)
    } else if (0..len).contains(&moved) {
        Some(moved as u32)
    } else {
        None
    }
}
