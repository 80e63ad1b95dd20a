//! Static, dynamic and triggered rates.
//!
//! Free-running actions carry each agent's sampled rate, gated by the agent's
//! state. Periodic payments (rent, paycheque, loan) are guaranteed events: once
//! due they are armed with a boost rate many orders of magnitude above the rest
//! of the system, so the next selected event is almost surely one of them, and
//! they drop back to rate 0 as soon as they fire.

use crate::action::Action;
use crate::agents::{Agent, AgentId};
use crate::engine::{EventCandidate, RateTable, Target};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledEvent {
    pub agent: AgentId,
    pub action: Action,
    /// Simulated day the next payment falls due.
    pub next_due: f64,
    pub period: f64,
    pub armed: bool,
    /// Rate while armed, fixed at arming time; 0 otherwise.
    pub boost_rate: f64,
    /// Set once a loan is fully repaid; never re-armed afterwards.
    pub finished: bool,
}

impl ScheduledEvent {
    pub fn new(agent: AgentId, action: Action, next_due: f64, period: f64) -> Self {
        debug_assert!(action.is_scheduled());
        ScheduledEvent {
            agent,
            action,
            next_due,
            period,
            armed: false,
            boost_rate: 0.0,
            finished: false,
        }
    }

    pub fn is_due(&self, now: f64) -> bool {
        !self.finished && now >= self.next_due
    }

    fn skip_cycle(&mut self) {
        self.armed = false;
        self.boost_rate = 0.0;
        self.next_due += self.period;
    }
}

/// Run-wide rate settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePolicy {
    /// Boost rate as a multiple of the current sum of non-boosted rates.
    pub boost_multiplier: f64,
    /// World-level static rate of new-customer arrivals, per day.
    pub new_customer_rate: f64,
}

impl RatePolicy {
    /// `multiplier × non_boost_sum`, or `multiplier × 1 day⁻¹` when nothing
    /// else is enabled.
    pub fn boost_rate(&self, non_boost_sum: f64) -> f64 {
        let base = if non_boost_sum > 0.0 { non_boost_sum } else { 1.0 };
        self.boost_multiplier * base
    }
}

/// Arms `action`'s schedule if it is due.
///
/// Returns the armed event. A due payment the agent cannot make (no cash for
/// rent or loan) skips this cycle without a record and keeps the original
/// cadence. A schedule whose loan is already repaid is retired instead.
pub fn arm_scheduled(
    agent: &mut Agent,
    action: Action,
    now: f64,
    boost_rate: f64,
    population: usize,
) -> Option<ScheduledEvent> {
    let loan_done = action == Action::RepayLoan && !agent.loan_balance.is_positive();
    let allowed = agent.state_allows(action, population);
    let sched = agent.schedule_mut(action)?;
    if loan_done {
        sched.finished = true;
        sched.armed = false;
        sched.boost_rate = 0.0;
        return None;
    }
    if sched.armed {
        return Some(*sched);
    }
    if !sched.is_due(now) {
        return None;
    }
    if !allowed {
        sched.skip_cycle();
        return None;
    }
    sched.armed = true;
    sched.boost_rate = boost_rate;
    Some(*sched)
}

/// Resets a schedule right after its payment executed: rate back to 0 and the
/// due date moves one period on. A loan that reached zero is retired.
pub fn fire_and_reset(agent: &mut Agent, action: Action) {
    let loan_done = action == Action::RepayLoan && !agent.loan_balance.is_positive();
    if let Some(sched) = agent.schedule_mut(action) {
        sched.skip_cycle();
        if loan_done {
            sched.finished = true;
        }
    }
}

/// Rebuilds `table` from the current world state at time `now`.
///
/// Candidate order: every agent's free-running actions (agent order, then
/// action order), the arrival process, then armed scheduled payments in agent
/// order. A boost rate is computed from the non-boosted sum of this same
/// refresh, when the schedule is armed.
pub fn update_rates(agents: &mut [Agent], now: f64, policy: &RatePolicy, table: &mut RateTable) {
    table.clear();
    let population = agents.len();

    for agent in agents.iter() {
        for action in Action::STOCHASTIC {
            let rate = agent.current_rate(action, population);
            if rate > 0.0 {
                table.push(EventCandidate {
                    target: Target::Agent { agent: agent.id, action },
                    rate,
                });
            }
        }
    }
    if policy.new_customer_rate > 0.0 {
        table.push(EventCandidate {
            target: Target::Arrival,
            rate: policy.new_customer_rate,
        });
    }

    let boost = policy.boost_rate(table.running_total());
    for agent in agents.iter_mut() {
        for action in [Action::PayRent, Action::DepositPaycheque, Action::RepayLoan] {
            if agent.schedule(action).is_none() {
                continue;
            }
            if let Some(armed) = arm_scheduled(agent, action, now, boost, population) {
                if agent.state_allows(action, population) {
                    table.push(EventCandidate {
                        target: Target::Agent { agent: agent.id, action },
                        rate: armed.boost_rate,
                    });
                } else if let Some(s) = agent.schedule_mut(action) {
                    // Funds vanished between arming and firing.
                    s.skip_cycle();
                }
            }
        }
    }
    table.finalize();
}
