//! Scenario parameters: archetypes, population composition and run-wide
//! settings. Everything here is plain data; validation lives with the config
//! loader.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::action::Action;

/// A normal distribution `N(mean, std)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NormalSpec {
    pub mean: f64,
    pub std: f64,
}

impl NormalSpec {
    pub const fn new(mean: f64, std: f64) -> Self {
        NormalSpec { mean, std }
    }

    pub const fn fixed(value: f64) -> Self {
        NormalSpec { mean: value, std: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AgentKind {
    Individual,
    Business,
}

impl AgentKind {
    pub const fn name(self) -> &'static str {
        match self {
            AgentKind::Individual => "individual",
            AgentKind::Business => "business",
        }
    }
}

/// A periodic payment of a per-agent fixed amount.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ScheduleSpec {
    /// Distribution of the agent's fixed payment amount, currency units.
    pub amount: NormalSpec,
    /// Cycle length in days; the action's standard cycle when absent.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub period_days: Option<f64>,
    /// Days after joining when the first payment falls due; one full period
    /// when absent.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub first_due_days: Option<f64>,
}

/// An outstanding loan repaid in fixed fractions of the original amount.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LoanSpec {
    /// Distribution of the original loan amount, currency units.
    pub original: NormalSpec,
    /// Share of the original amount due each cycle, in `(0, 1]`.
    pub repayment_fraction: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub period_days: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub first_due_days: Option<f64>,
}

/// Parameters that replace an archetype's own values when an agent of that
/// archetype is flagged as a bad actor.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct BadActorOverrides {
    pub id_success_prob: f64,
    pub p2p_amount: NormalSpec,
    pub p2p_threshold: NormalSpec,
}

impl Default for BadActorOverrides {
    fn default() -> Self {
        BadActorOverrides {
            id_success_prob: 0.5,
            p2p_amount: NormalSpec::new(5.0, 3.0),
            p2p_threshold: NormalSpec::new(15.0, 3.0),
        }
    }
}

/// Distributions from which agents of one archetype are sampled.
///
/// Rates are in events per day, amounts and thresholds in currency units.
/// An action missing from `rates` is never taken by agents of this archetype.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ArchetypeSpec {
    pub name: String,
    pub kind: AgentKind,
    pub rates: BTreeMap<Action, NormalSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub amounts: BTreeMap<Action, NormalSpec>,
    #[cfg_attr(feature = "serde", serde(default = "default_threshold"))]
    pub p2p_threshold: NormalSpec,
    #[cfg_attr(feature = "serde", serde(default = "default_id_success"))]
    pub id_success_prob: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub initial_cash: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub rent: Option<ScheduleSpec>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub paycheque: Option<ScheduleSpec>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub loan: Option<LoanSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bad_actor: BadActorOverrides,
}

#[cfg(feature = "serde")]
fn default_threshold() -> NormalSpec {
    NormalSpec::fixed(0.0)
}

#[cfg(feature = "serde")]
fn default_id_success() -> f64 {
    1.0
}

pub const DEFAULT_AMOUNT: NormalSpec = NormalSpec::new(10.0, 0.0);

impl ArchetypeSpec {
    /// A minimal archetype with no actions; fill in with the builder-style
    /// helpers or by direct field access.
    pub fn new(name: impl Into<String>, kind: AgentKind) -> Self {
        ArchetypeSpec {
            name: name.into(),
            kind,
            rates: BTreeMap::new(),
            amounts: BTreeMap::new(),
            p2p_threshold: NormalSpec::fixed(0.0),
            id_success_prob: 1.0,
            initial_cash: 0.0,
            rent: None,
            paycheque: None,
            loan: None,
            bad_actor: BadActorOverrides::default(),
        }
    }

    pub fn with_rate(mut self, action: Action, dist: NormalSpec) -> Self {
        self.rates.insert(action, dist);
        self
    }

    pub fn with_amount(mut self, action: Action, dist: NormalSpec) -> Self {
        self.amounts.insert(action, dist);
        self
    }

    pub fn amount(&self, action: Action) -> NormalSpec {
        self.amounts.get(&action).copied().unwrap_or(DEFAULT_AMOUNT)
    }

    /// Every action this archetype can ever take.
    pub fn allowed_actions(&self) -> impl Iterator<Item = Action> + '_ {
        let scheduled = [
            self.rent.map(|_| Action::PayRent),
            self.paycheque.map(|_| Action::DepositPaycheque),
            self.loan.map(|_| Action::RepayLoan),
        ];
        self.rates.keys().copied().chain(scheduled.into_iter().flatten())
    }
}

/// One block of the initial population.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PopulationEntry {
    pub archetype: String,
    pub count: u32,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bad_actor_fraction: f64,
}

/// Standard cycle lengths, days.
pub const RENT_PERIOD_DAYS: f64 = 30.0;
pub const PAYCHEQUE_PERIOD_DAYS: f64 = 14.0;
pub const LOAN_PERIOD_DAYS: f64 = 7.0;

pub const DEFAULT_UNVERIFIED_CAP: f64 = 10.0;
pub const DEFAULT_BTC_PRICE: f64 = 1.0;
pub const DEFAULT_BOOST_MULTIPLIER: f64 = 1.0e6;

/// Everything the engine needs to build and run a world.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldParams {
    pub seed: u64,
    /// Simulated days.
    pub max_time: f64,
    pub population: Vec<PopulationEntry>,
    pub archetypes: Vec<ArchetypeSpec>,
    /// Cap on single cash_in / cash_out amounts before id verification.
    pub unverified_cap: f64,
    /// Currency units per BTC unit.
    pub btc_price: f64,
    /// Boosted rate as a multiple of the sum of all non-boosted rates.
    pub boost_multiplier: f64,
    /// Static arrival rate of new customers, per day; 0 disables arrivals.
    pub new_customer_rate: f64,
}

impl WorldParams {
    pub fn new(seed: u64, max_time: f64) -> Self {
        WorldParams {
            seed,
            max_time,
            population: Vec::new(),
            archetypes: Vec::new(),
            unverified_cap: DEFAULT_UNVERIFIED_CAP,
            btc_price: DEFAULT_BTC_PRICE,
            boost_multiplier: DEFAULT_BOOST_MULTIPLIER,
            new_customer_rate: 0.0,
        }
    }

    pub fn archetype_index(&self, name: &str) -> Option<usize> {
        self.archetypes.iter().position(|a| a.name == name)
    }

    pub fn total_population(&self) -> u64 {
        self.population.iter().map(|p| u64::from(p.count)).sum()
    }
}
