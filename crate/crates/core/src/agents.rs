//! Agent state, archetype sampling, eligibility gating and the execution
//! semantics of each action.

use core::fmt;

use crate::action::{Action, ActionMap};
use crate::money::Cents;
use crate::rng::SimRng;
use crate::scheduler::ScheduledEvent;
use crate::spec::{AgentKind, ArchetypeSpec, NormalSpec, LOAN_PERIOD_DAYS, PAYCHEQUE_PERIOD_DAYS, RENT_PERIOD_DAYS};

/// Index of an agent within its world; also its numeric id.
pub type AgentId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: AgentId,
    pub kind: AgentKind,
    /// Index into the world's archetype list.
    pub archetype: usize,
    pub is_bad_actor: bool,
    pub cash: Cents,
    pub btc: f64,
    pub loan_original: Cents,
    pub loan_balance: Cents,
    pub id_verified: bool,
    /// Simulated day the agent joined.
    pub joined_at: f64,
    /// Sampled base rates, per day. Scheduled actions stay at 0 here; their
    /// boosted rate lives on the schedule.
    pub rates: ActionMap<f64>,
    /// Per-transfer amount distributions for the free-running money actions.
    pub amounts: ActionMap<NormalSpec>,
    pub p2p_threshold: Cents,
    pub id_success_prob: f64,
    pub rent_amount: Cents,
    pub paycheque_amount: Cents,
    pub loan_installment: Cents,
    /// Schedules for pay_rent, deposit_paycheque and repay_loan, in that order.
    pub schedules: [Option<ScheduledEvent>; 3],
}

pub(crate) const fn schedule_slot(action: Action) -> Option<usize> {
    match action {
        Action::PayRent => Some(0),
        Action::DepositPaycheque => Some(1),
        Action::RepayLoan => Some(2),
        _ => None,
    }
}

fn draw_amount(rng: &mut SimRng, dist: NormalSpec) -> Cents {
    Cents::from_units(rng.normal(dist))
}

fn draw_rate(rng: &mut SimRng, dist: NormalSpec) -> f64 {
    rng.normal(dist).max(0.0)
}

/// Draws an agent from `spec`.
///
/// Draw order (from `rng`): one rate per entry of `spec.rates` in action
/// order, then the p2p threshold, then the scheduled amounts (rent, paycheque,
/// loan original) for those the archetype has.
pub fn sample_agent(
    spec: &ArchetypeSpec,
    archetype: usize,
    id: AgentId,
    is_bad_actor: bool,
    joined_at: f64,
    rng: &mut SimRng,
) -> Agent {
    let mut rates = ActionMap::splat(0.0);
    for (&action, &dist) in &spec.rates {
        let r = draw_rate(rng, dist);
        if !action.is_scheduled() && !(spec.kind == AgentKind::Business && action.is_individual_only()) {
            rates[action] = r;
        }
    }

    let mut amounts = ActionMap::splat(crate::spec::DEFAULT_AMOUNT);
    for action in [Action::CashIn, Action::CashOut, Action::P2pSend, Action::BtcBuy] {
        amounts[action] = spec.amount(action);
    }

    let (threshold_dist, id_success_prob) = if is_bad_actor {
        amounts[Action::P2pSend] = spec.bad_actor.p2p_amount;
        (spec.bad_actor.p2p_threshold, spec.bad_actor.id_success_prob)
    } else {
        (spec.p2p_threshold, spec.id_success_prob)
    };
    let p2p_threshold = draw_amount(rng, threshold_dist).clamp_to(Cents::ZERO, Cents(i64::MAX));

    let individual = spec.kind == AgentKind::Individual;
    let mut schedules = [None; 3];
    let mut rent_amount = Cents::ZERO;
    let mut paycheque_amount = Cents::ZERO;
    let mut loan_original = Cents::ZERO;
    let mut loan_installment = Cents::ZERO;

    if let Some(rent) = spec.rent.filter(|_| individual) {
        rent_amount = draw_amount(rng, rent.amount).clamp_to(Cents::MIN_TRANSFER, Cents(i64::MAX));
        let period = rent.period_days.unwrap_or(RENT_PERIOD_DAYS);
        schedules[0] = Some(ScheduledEvent::new(
            id,
            Action::PayRent,
            joined_at + rent.first_due_days.unwrap_or(period),
            period,
        ));
    }
    if let Some(pay) = spec.paycheque {
        paycheque_amount = draw_amount(rng, pay.amount).clamp_to(Cents::MIN_TRANSFER, Cents(i64::MAX));
        let period = pay.period_days.unwrap_or(PAYCHEQUE_PERIOD_DAYS);
        schedules[1] = Some(ScheduledEvent::new(
            id,
            Action::DepositPaycheque,
            joined_at + pay.first_due_days.unwrap_or(period),
            period,
        ));
    }
    if let Some(loan) = spec.loan.filter(|_| individual) {
        loan_original = draw_amount(rng, loan.original).clamp_to(Cents::MIN_TRANSFER, Cents(i64::MAX));
        // Rounded up so that ceil(1 / fraction) installments always clear the loan.
        let exact = loan_original.0 as f64 * loan.repayment_fraction;
        loan_installment = Cents(libm::ceil(exact - 1e-6) as i64).clamp_to(Cents::MIN_TRANSFER, loan_original);
        let period = loan.period_days.unwrap_or(LOAN_PERIOD_DAYS);
        schedules[2] = Some(ScheduledEvent::new(
            id,
            Action::RepayLoan,
            joined_at + loan.first_due_days.unwrap_or(period),
            period,
        ));
    }

    Agent {
        id,
        kind: spec.kind,
        archetype,
        is_bad_actor,
        cash: Cents::from_units(spec.initial_cash).clamp_to(Cents::ZERO, Cents(i64::MAX)),
        btc: 0.0,
        loan_original,
        loan_balance: loan_original,
        id_verified: false,
        joined_at,
        rates,
        amounts,
        p2p_threshold,
        id_success_prob,
        rent_amount,
        paycheque_amount,
        loan_installment,
        schedules,
    }
}

/// A small set of actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActionSet(u16);

impl ActionSet {
    pub fn insert(&mut self, a: Action) {
        self.0 |= 1 << a.index();
    }

    pub fn contains(self, a: Action) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

impl Agent {
    pub fn schedule(&self, action: Action) -> Option<&ScheduledEvent> {
        schedule_slot(action).and_then(|i| self.schedules[i].as_ref())
    }

    pub fn schedule_mut(&mut self, action: Action) -> Option<&mut ScheduledEvent> {
        schedule_slot(action).and_then(move |i| self.schedules[i].as_mut())
    }

    /// State gate for `action`, ignoring whether its rate is nonzero or a
    /// schedule is armed.
    pub fn state_allows(&self, action: Action, population: usize) -> bool {
        if self.kind == AgentKind::Business && action.is_individual_only() {
            return false;
        }
        let has_cash = self.cash.is_positive();
        match action {
            Action::CashIn | Action::DepositPaycheque => true,
            Action::CashOut | Action::PayRent => has_cash,
            Action::P2pSend => has_cash && self.cash > self.p2p_threshold && population > 1,
            Action::IdVerification => !self.id_verified,
            Action::BtcBuy => self.id_verified && has_cash,
            Action::RepayLoan => has_cash && self.loan_balance.is_positive(),
        }
    }

    /// The rate this action currently contributes to the rate table.
    pub fn current_rate(&self, action: Action, population: usize) -> f64 {
        if !self.state_allows(action, population) {
            return 0.0;
        }
        if action.is_scheduled() {
            match self.schedule(action) {
                Some(s) if s.armed => s.boost_rate,
                _ => 0.0,
            }
        } else {
            self.rates[action]
        }
    }
}

/// Actions with a nonzero rate after all gates.
pub fn eligible_actions(agent: &Agent, population: usize) -> ActionSet {
    let mut set = ActionSet::default();
    for a in Action::ALL {
        if agent.current_rate(a, population) > 0.0 {
            set.insert(a);
        }
    }
    set
}

/// What an executed action reports to the log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventValue {
    Amount(Cents),
    Verified(bool),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionOutcome {
    pub action: Action,
    pub value: EventValue,
    /// Receiving agent; p2p only.
    pub counterparty: Option<AgentId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentError {
    /// Gating let through an action the agent cannot take.
    Ineligible { agent: AgentId, action: Action },
    AlreadyVerified { agent: AgentId },
    UnknownAgent { agent: AgentId },
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::Ineligible { agent, action } => {
                write!(f, "agent {agent} is not eligible for {action}")
            }
            AgentError::AlreadyVerified { agent } => {
                write!(f, "agent {agent} attempted id verification after success")
            }
            AgentError::UnknownAgent { agent } => write!(f, "no agent with id {agent}"),
        }
    }
}

impl core::error::Error for AgentError {}

/// Run-wide knobs that affect action execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionParams {
    pub unverified_cap: Cents,
    pub btc_price: f64,
}

/// One id-verification attempt. Consumes one uniform draw.
pub fn attempt_id_verification(agent: &mut Agent, rng: &mut SimRng) -> Result<ActionOutcome, AgentError> {
    if agent.id_verified {
        return Err(AgentError::AlreadyVerified { agent: agent.id });
    }
    let success = rng.uniform() < agent.id_success_prob;
    if success {
        agent.id_verified = true;
        agent.rates[Action::IdVerification] = 0.0;
    }
    Ok(ActionOutcome {
        action: Action::IdVerification,
        value: EventValue::Verified(success),
        counterparty: None,
    })
}

/// Receiver for a p2p transfer: uniform over every agent except the sender.
pub fn choose_receiver(population: usize, sender: usize, rng: &mut SimRng) -> usize {
    debug_assert!(population > 1);
    let r = rng.index_below(population - 1);
    if r >= sender {
        r + 1
    } else {
        r
    }
}

/// Transfers a sampled amount from `sender` to `receiver`.
///
/// Draws the receiver first, then the amount. The amount is clamped to
/// `[0.01, sender.cash]`, so total cash is conserved exactly.
pub fn p2p_send(agents: &mut [Agent], sender: usize, rng: &mut SimRng) -> Result<ActionOutcome, AgentError> {
    let population = agents.len();
    let s = &agents[sender];
    if !s.state_allows(Action::P2pSend, population) {
        return Err(AgentError::Ineligible { agent: s.id, action: Action::P2pSend });
    }
    let receiver = choose_receiver(population, sender, rng);
    let amount = draw_amount(rng, s.amounts[Action::P2pSend]).clamp_to(Cents::MIN_TRANSFER, s.cash);
    agents[sender].cash -= amount;
    agents[receiver].cash += amount;
    Ok(ActionOutcome {
        action: Action::P2pSend,
        value: EventValue::Amount(amount),
        counterparty: Some(agents[receiver].id),
    })
}

/// Carries out `action` for agent `idx`. Scheduled actions only update
/// balances here; rearming is the scheduler's job.
pub fn execute_action(
    agents: &mut [Agent],
    idx: usize,
    action: Action,
    params: &ActionParams,
    rng: &mut SimRng,
) -> Result<ActionOutcome, AgentError> {
    let population = agents.len();
    let agent = agents.get(idx).ok_or(AgentError::UnknownAgent { agent: idx as AgentId })?;
    if !agent.state_allows(action, population) {
        return Err(AgentError::Ineligible { agent: agent.id, action });
    }
    let unlimited = Cents(i64::MAX);
    let cap = if agent.id_verified { unlimited } else { params.unverified_cap };

    let agent = &mut agents[idx];
    let amount = match action {
        Action::P2pSend => return p2p_send(agents, idx, rng),
        Action::IdVerification => return attempt_id_verification(agent, rng),
        Action::CashIn => {
            let amount = draw_amount(rng, agent.amounts[Action::CashIn]).clamp_to(Cents::MIN_TRANSFER, cap);
            agent.cash += amount;
            amount
        }
        Action::CashOut => {
            let hi = if agent.cash < cap { agent.cash } else { cap };
            let amount = draw_amount(rng, agent.amounts[Action::CashOut]).clamp_to(Cents::MIN_TRANSFER, hi);
            agent.cash -= amount;
            amount
        }
        Action::BtcBuy => {
            let amount = draw_amount(rng, agent.amounts[Action::BtcBuy]).clamp_to(Cents::MIN_TRANSFER, agent.cash);
            agent.cash -= amount;
            agent.btc += btc_for(amount, params.btc_price);
            amount
        }
        Action::PayRent => {
            let amount = agent.rent_amount.clamp_to(Cents::MIN_TRANSFER, agent.cash);
            agent.cash -= amount;
            amount
        }
        Action::DepositPaycheque => {
            agent.cash += agent.paycheque_amount;
            agent.paycheque_amount
        }
        Action::RepayLoan => {
            let due = agent.loan_installment.min(agent.loan_balance);
            let amount = due.clamp_to(Cents::MIN_TRANSFER, agent.cash);
            agent.cash -= amount;
            agent.loan_balance -= amount;
            amount
        }
    };
    Ok(ActionOutcome {
        action,
        value: EventValue::Amount(amount),
        counterparty: None,
    })
}

/// BTC units bought for `amount` at `price` currency units per BTC.
pub fn btc_for(amount: Cents, price: f64) -> f64 {
    amount.as_units() / price
}
