//! Agent-based simulation of co-located social practices.
//!
//! Agents placed on a grid or a social network repeatedly interpret their
//! context from the practices performed around them, restrict their options
//! to practices appropriate in that context, and perform the first option
//! that neither disturbs nor is disturbed by a neighbouring performance.
//! Runs are deterministic in `(scenario, seed, ticks)`; parameter sweeps run
//! in parallel when the `parallel` feature is enabled.

macro_rules! index_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

pub mod cli;
pub mod context;
pub mod decision;
pub mod diagnostics;
pub mod engine;
pub mod metrics;
pub mod practice;
pub mod rng;
pub mod scenario;
pub mod sweep;
pub mod topology;


pub use context::{consensus_index, infer_context, time_to_consensus, Belief};
pub use decision::{candidate_set, decide, disturbance_check, Action, Decision, DiscardReason};
pub use diagnostics::{Code, Diagnostic, ValidationReport};
pub use engine::{init_world, run, MetricsLog, TickRecord, World};
pub use metrics::{emit_log, summarize, LogFormat, Summary};
pub use practice::{compile_disturbance, performable, validate_registry, Model, Registry};
pub use scenario::{parse_scenario, Scenario};
pub use sweep::{sweep, Executor, SweepTable};
pub use topology::{AgentIx, Space, Topology};

/// Version string recorded in every run header.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
