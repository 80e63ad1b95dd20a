//! Rejection-free kinetic Monte Carlo loop.
//!
//! Each step:
//!
//! 1. refresh every candidate's rate ([`update_rates`]);
//! 2. build the cumulative array of `rate_i / R` with `R = Σ rate_i`;
//! 3. draw `u1 ∈ (0, 1]` and pick the smallest index whose cumulative value is
//!    `≥ u1`;
//! 4. draw `u2 ∈ (0, 1]`;
//! 5. execute the event (any per-action draws come after `u1` and `u2`);
//! 6. advance the clock by `-ln(u2) / R` and emit one record stamped with the
//!    new time.
//!
//! The loop runs while `sim_time < max_time`, so the final record may carry a
//! time at or beyond `max_time`. Every iteration emits exactly one record.
//!
//! `R` is the plain sum of rates, which makes the mean waiting time `1 / R`
//! shrink as the number of possible events grows.

use alloc::vec::Vec;
use core::fmt;

use crate::action::Action;
use crate::agents::{execute_action, sample_agent, ActionParams, Agent, AgentError, AgentId, EventValue};
use crate::money::Cents;
use crate::rng::SimRng;
use crate::scheduler::{fire_and_reset, update_rates, RatePolicy};
use crate::spec::WorldParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Agent { agent: AgentId, action: Action },
    /// A new customer joins the platform.
    Arrival,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventCandidate {
    pub target: Target,
    /// Per day; strictly positive once in a table.
    pub rate: f64,
}

/// Flattened candidate list with its cumulative normalized rates.
#[derive(Debug, Clone, Default)]
pub struct RateTable {
    entries: Vec<EventCandidate>,
    cumulative: Vec<f64>,
    total: f64,
}

impl RateTable {
    /// Table over `rates`, attributing entry `i` to agent `i`'s cash_in.
    /// Zero rates are dropped.
    pub fn from_rates(rates: &[f64]) -> Result<Self, EngineError> {
        let mut t = RateTable::default();
        for (i, &rate) in rates.iter().enumerate() {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(EngineError::InvalidRate(rate));
            }
            t.push(EventCandidate {
                target: Target::Agent { agent: i as AgentId, action: Action::CashIn },
                rate,
            });
        }
        t.finalize();
        Ok(t)
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.cumulative.clear();
        self.total = 0.0;
    }

    /// Appends a candidate; non-positive rates are skipped.
    pub fn push(&mut self, candidate: EventCandidate) {
        if candidate.rate > 0.0 {
            self.total += candidate.rate;
            self.entries.push(candidate);
        }
    }

    /// Sum of the rates pushed so far.
    pub fn running_total(&self) -> f64 {
        self.total
    }

    /// Rebuilds the cumulative array from the entries.
    pub fn finalize(&mut self) {
        self.cumulative.clear();
        let total: f64 = self.entries.iter().map(|e| e.rate).sum();
        self.total = total;
        let mut acc = 0.0;
        self.cumulative.extend(self.entries.iter().map(|e| {
            acc += e.rate;
            acc / total
        }));
        if let Some(last) = self.cumulative.last_mut() {
            *last = 1.0;
        }
    }

    pub fn entries(&self) -> &[EventCandidate] {
        &self.entries
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `R`, per day.
    pub fn total_rate(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Smallest index whose cumulative value is `≥ u1`.
pub fn select_event(table: &RateTable, u1: f64) -> Result<usize, EngineError> {
    if table.is_empty() {
        return Err(EngineError::NoEnabledEvents);
    }
    if !(u1 > 0.0 && u1 <= 1.0) {
        return Err(EngineError::InvalidDraw(u1));
    }
    let i = table.cumulative.partition_point(|&c| c < u1);
    Ok(i.min(table.len() - 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    /// Days since the epoch.
    pub sim_time: f64,
    pub max_time: f64,
}

impl Clock {
    pub fn new(max_time: f64) -> Self {
        Clock { sim_time: 0.0, max_time }
    }

    pub fn finished(&self) -> bool {
        self.sim_time >= self.max_time
    }
}

/// Advances by the exponential waiting time `-ln(u2) / R`.
pub fn advance_clock(clock: Clock, total_rate: f64, u2: f64) -> Result<Clock, EngineError> {
    if !(total_rate > 0.0 && total_rate.is_finite()) {
        return Err(EngineError::InvalidRate(total_rate));
    }
    if !(u2 > 0.0 && u2 <= 1.0) {
        return Err(EngineError::InvalidDraw(u2));
    }
    Ok(Clock {
        sim_time: clock.sim_time + waiting_time(total_rate, u2),
        ..clock
    })
}

#[inline]
fn waiting_time(total_rate: f64, u2: f64) -> f64 {
    -libm::log(u2) / total_rate
}

/// Draws and outcome of one loop iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineStep {
    pub u1: f64,
    pub u2: f64,
    pub selected: usize,
    pub total_rate: f64,
    /// Days.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    /// Every candidate rate is zero; the world is frozen.
    NoEnabledEvents,
    InvalidRate(f64),
    InvalidDraw(f64),
    Agent(AgentError),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::NoEnabledEvents => f.write_str("no enabled events"),
            EngineError::InvalidRate(r) => write!(f, "invalid total rate {r}"),
            EngineError::InvalidDraw(u) => write!(f, "random draw {u} outside (0, 1]"),
            EngineError::Agent(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EngineError {}

impl From<AgentError> for EngineError {
    fn from(e: AgentError) -> Self {
        EngineError::Agent(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Action(Action),
    /// A new agent joined; the record's value is its opening balance.
    CustomerJoin,
}

/// One emitted record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Days since the epoch, after the clock advance.
    pub time: f64,
    pub agent: AgentId,
    pub kind: EventKind,
    pub value: EventValue,
    pub counterparty: Option<AgentId>,
}

/// All agents of a run plus the parameters that produced them.
#[derive(Debug, Clone)]
pub struct World {
    pub params: WorldParams,
    pub agents: Vec<Agent>,
}

impl World {
    /// Samples the initial population.
    ///
    /// Agents get consecutive ids in population-entry order. In each entry,
    /// exactly `round(count × bad_actor_fraction)` agents are flagged bad, the
    /// positions chosen by a shuffle on the population stream. Each agent is
    /// then drawn from its own `(seed, id)` stream.
    pub fn build(params: WorldParams) -> Result<World, BuildError> {
        use rand::seq::SliceRandom;

        let mut flags_rng = SimRng::for_population(params.seed);
        let mut agents = Vec::with_capacity(params.total_population() as usize);
        for entry in &params.population {
            let archetype = params
                .archetype_index(&entry.archetype)
                .ok_or(BuildError::UnknownArchetype)?;
            let count = entry.count as usize;
            let bad = libm::round(entry.count as f64 * entry.bad_actor_fraction) as usize;
            let mut flags: Vec<bool> = (0..count).map(|i| i < bad.min(count)).collect();
            flags.shuffle(flags_rng.inner_mut());
            for is_bad in flags {
                let id = agents.len() as AgentId;
                let mut rng = SimRng::for_agent(params.seed, u64::from(id));
                agents.push(sample_agent(&params.archetypes[archetype], archetype, id, is_bad, 0.0, &mut rng));
            }
        }
        Ok(World { params, agents })
    }

    /// Samples the agent that arrives with id `id` at time `now`.
    ///
    /// The archetype is picked with probability proportional to its
    /// population count, and the bad-actor flag with that entry's fraction,
    /// both from the agent's own stream.
    pub fn sample_arrival(params: &WorldParams, id: AgentId, now: f64) -> Option<Agent> {
        let total = params.total_population();
        if total == 0 {
            return None;
        }
        let mut rng = SimRng::for_agent(params.seed, u64::from(id));
        let mut pick = rng.index_below(total as usize) as u64;
        let entry = params.population.iter().find(|e| {
            if pick < u64::from(e.count) {
                true
            } else {
                pick -= u64::from(e.count);
                false
            }
        })?;
        let archetype = params.archetype_index(&entry.archetype)?;
        let is_bad = rng.uniform() < entry.bad_actor_fraction;
        Some(sample_agent(&params.archetypes[archetype], archetype, id, is_bad, now, &mut rng))
    }

    pub fn total_cash(&self) -> Cents {
        self.agents.iter().map(|a| a.cash).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildError {
    UnknownArchetype,
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("population references an unknown archetype")
    }
}

impl core::error::Error for BuildError {}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    MaxTime,
    /// Frozen world before `max_time`; records up to here are kept.
    NoEnabledEvents { at: f64 },
}

/// A running simulation: world, clock, main random stream and scratch table.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: World,
    rng: SimRng,
    clock: Clock,
    table: RateTable,
    policy: RatePolicy,
    action_params: ActionParams,
    steps: u64,
    last_step: Option<EngineStep>,
}

impl Simulation {
    pub fn new(params: WorldParams) -> Result<Self, BuildError> {
        Ok(Self::from_world(World::build(params)?))
    }

    /// Starts from an already-built (possibly hand-edited) world at time 0.
    pub fn from_world(world: World) -> Self {
        let p = &world.params;
        Simulation {
            rng: SimRng::new(p.seed),
            clock: Clock::new(p.max_time),
            table: RateTable::default(),
            policy: RatePolicy {
                boost_multiplier: p.boost_multiplier,
                new_customer_rate: p.new_customer_rate,
            },
            action_params: ActionParams {
                unverified_cap: Cents::from_units(p.unverified_cap),
                btc_price: p.btc_price,
            },
            steps: 0,
            last_step: None,
            world,
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    /// Completed loop iterations.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn last_step(&self) -> Option<EngineStep> {
        self.last_step
    }

    /// The table built by the most recent step.
    pub fn rate_table(&self) -> &RateTable {
        &self.table
    }

    /// One iteration: refresh rates, select, execute, advance, report.
    pub fn step(&mut self) -> Result<Event, EngineError> {
        let now = self.clock.sim_time;
        update_rates(&mut self.world.agents, now, &self.policy, &mut self.table);
        if self.table.is_empty() {
            return Err(EngineError::NoEnabledEvents);
        }
        let u1 = self.rng.unit_open_closed();
        let u2 = self.rng.unit_open_closed();
        let selected = select_event(&self.table, u1)?;
        let total_rate = self.table.total_rate();

        let (agent, kind, value, counterparty) = match self.table.entries()[selected].target {
            Target::Agent { agent, action } => {
                let idx = agent as usize;
                let out = execute_action(&mut self.world.agents, idx, action, &self.action_params, &mut self.rng)?;
                if action.is_scheduled() {
                    fire_and_reset(&mut self.world.agents[idx], action);
                }
                (agent, EventKind::Action(action), out.value, out.counterparty)
            }
            Target::Arrival => {
                let id = self.world.agents.len() as AgentId;
                let newcomer = World::sample_arrival(&self.world.params, id, now).ok_or(EngineError::NoEnabledEvents)?;
                let opening = newcomer.cash;
                self.world.agents.push(newcomer);
                (id, EventKind::CustomerJoin, EventValue::Amount(opening), None)
            }
        };

        let before = self.clock.sim_time;
        self.clock = advance_clock(self.clock, total_rate, u2)?;
        self.steps += 1;
        self.last_step = Some(EngineStep {
            u1,
            u2,
            selected,
            total_rate,
            dt: self.clock.sim_time - before,
        });
        Ok(Event {
            time: self.clock.sim_time,
            agent,
            kind,
            value,
            counterparty,
        })
    }

    /// Steps until the clock reaches `max_time`, handing each record to
    /// `sink`. A frozen world ends the run early; any other error is a bug in
    /// gating and is returned.
    pub fn run_with<F: FnMut(&Event)>(&mut self, mut sink: F) -> Result<Termination, EngineError> {
        while !self.clock.finished() {
            match self.step() {
                Ok(event) => sink(&event),
                Err(EngineError::NoEnabledEvents) => {
                    return Ok(Termination::NoEnabledEvents { at: self.clock.sim_time })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Termination::MaxTime)
    }

    /// Runs a fixed number of steps regardless of `max_time`.
    pub fn run_steps(&mut self, n: u64) -> Result<Vec<Event>, EngineError> {
        (0..n).map(|_| self.step()).collect()
    }
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub events: Vec<Event>,
    pub termination: Termination,
    pub steps: u64,
    pub world: World,
}

/// Builds the world from `params` and simulates it to `max_time`.
pub fn run(params: WorldParams) -> Result<RunOutput, RunError> {
    let mut sim = Simulation::new(params).map_err(RunError::Build)?;
    let mut events = Vec::new();
    let termination = sim.run_with(|e| events.push(*e)).map_err(RunError::Engine)?;
    Ok(RunOutput {
        events,
        termination,
        steps: sim.steps,
        world: sim.world,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Build(BuildError),
    Engine(EngineError),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Build(e) => write!(f, "{e}"),
            RunError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for RunError {}
