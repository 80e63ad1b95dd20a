//! Agent-based kinetic Monte Carlo simulation of customers on a digital
//! financial platform.
//!
//! This crate is `no_std` (it needs `alloc`). It holds the event loop, agent
//! model and rate scheduling; file formats, configuration loading and the
//! command line live in the `finkmc` crate.
//!
//! ```
//! use finkmc_core::{run, Action, AgentKind, ArchetypeSpec, NormalSpec, PopulationEntry, WorldParams};
//!
//! let mut params = WorldParams::new(7, 3.0);
//! params.archetypes.push(
//!     ArchetypeSpec::new("saver", AgentKind::Individual)
//!         .with_rate(Action::CashIn, NormalSpec::new(2.0, 0.5)),
//! );
//! params.population.push(PopulationEntry { archetype: "saver".into(), count: 10, bad_actor_fraction: 0.0 });
//! let out = run(params).unwrap();
//! assert_eq!(out.events.len() as u64, out.steps);
//! ```

#![no_std]

extern crate alloc;

pub mod action;
pub mod agents;
pub mod engine;
pub mod money;
pub mod rng;
pub mod scheduler;
pub mod spec;

pub use action::{Action, ActionMap};
pub use agents::{
    attempt_id_verification, eligible_actions, execute_action, p2p_send, sample_agent, ActionOutcome, ActionParams,
    ActionSet, Agent, AgentError, AgentId, EventValue,
};
pub use engine::{
    advance_clock, run, select_event, BuildError, Clock, EngineError, EngineStep, Event, EventCandidate, EventKind,
    RateTable, RunError, RunOutput, Simulation, Target, Termination, World,
};
pub use money::Cents;
pub use rng::SimRng;
pub use scheduler::{arm_scheduled, fire_and_reset, update_rates, RatePolicy, ScheduledEvent};
pub use spec::{
    AgentKind, ArchetypeSpec, BadActorOverrides, LoanSpec, NormalSpec, PopulationEntry, ScheduleSpec, WorldParams,
};
