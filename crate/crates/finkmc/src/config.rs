//! Scenario files.
//!
//! A scenario is one JSON document. Unknown keys are rejected everywhere and
//! `schema_version` must be present. See `scenarios/baseline.json` for a
//! complete example.

use std::fmt;
use std::path::Path;

use chrono::NaiveDateTime;
use finkmc_core::spec::{DEFAULT_BOOST_MULTIPLIER, DEFAULT_BTC_PRICE, DEFAULT_UNVERIFIED_CAP};
use finkmc_core::{Action, AgentKind, ArchetypeSpec, NormalSpec, PopulationEntry, WorldParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logio::MAX_DISTINCT_TOKENS;

pub const SCHEMA_VERSION: u32 = 1;

pub const REQUIRED_KEYS: [&str; 5] = ["schema_version", "seed", "max_time", "population", "archetypes"];

const EPOCH_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

const BASELINE_JSON: &str = include_str!("../scenarios/baseline.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub schema_version: u32,
    /// Free-form notes; ignored by the simulator.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub seed: u64,
    /// Calendar time of simulated day 0.
    #[serde(default = "default_epoch", with = "epoch_serde")]
    pub epoch: NaiveDateTime,
    /// Simulated days.
    pub max_time: f64,
    pub population: Vec<PopulationEntry>,
    pub archetypes: Vec<ArchetypeSpec>,
    #[serde(default = "default_unverified_cap")]
    pub unverified_cap: f64,
    #[serde(default = "default_btc_price")]
    pub btc_price: f64,
    #[serde(default = "default_boost_multiplier")]
    pub boost_multiplier: f64,
    #[serde(default)]
    pub new_customer_rate: f64,
}

fn default_epoch() -> NaiveDateTime {
    NaiveDateTime::parse_from_str("2022-09-01 00:00:00", EPOCH_FORMAT).expect("valid literal")
}

fn default_unverified_cap() -> f64 {
    DEFAULT_UNVERIFIED_CAP
}

fn default_btc_price() -> f64 {
    DEFAULT_BTC_PRICE
}

fn default_boost_multiplier() -> f64 {
    DEFAULT_BOOST_MULTIPLIER
}

mod epoch_serde {
    use super::EPOCH_FORMAT;
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(dt: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&dt.format(EPOCH_FORMAT).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let s = String::deserialize(d)?;
        NaiveDateTime::parse_from_str(&s, EPOCH_FORMAT)
            .map_err(|e| serde::de::Error::custom(format!("epoch `{s}` is not YYYY-MM-DD HH:MM:SS: {e}")))
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty config; required keys: {}", REQUIRED_KEYS.join(", "))]
    Empty,
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
}

impl ConfigError {
    pub fn is_io(&self) -> bool {
        matches!(self, ConfigError::Io { .. })
    }
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        if text.trim().is_empty() {
            return Err(ConfigError::Empty);
        }
        serde_json::from_str(text).map_err(|e| {
            let (line, column, message) = (e.line(), e.column(), e.to_string());
            match e.classify() {
                serde_json::error::Category::Data => ConfigError::Schema { line, column, message },
                _ => ConfigError::Syntax { line, column, message },
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Engine parameters, with `seed` as the effective seed.
    pub fn world_params(&self) -> WorldParams {
        WorldParams {
            seed: self.seed,
            max_time: self.max_time,
            population: self.population.clone(),
            archetypes: self.archetypes.clone(),
            unverified_cap: self.unverified_cap,
            btc_price: self.btc_price,
            boost_multiplier: self.boost_multiplier,
            new_customer_rate: self.new_customer_rate,
        }
    }

    pub fn total_agents(&self) -> u64 {
        self.population.iter().map(|p| u64::from(p.count)).sum()
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<SimulationConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    SimulationConfig::from_json(&text)
}

/// The shipped reference scenario: 1000 agents, half of them bad actors,
/// eight simulated days.
pub fn baseline_scenario() -> SimulationConfig {
    SimulationConfig::from_json(BASELINE_JSON).expect("shipped baseline parses")
}

pub fn baseline_json() -> &'static str {
    BASELINE_JSON
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    UnsupportedSchemaVersion,
    NonPositiveMaxTime,
    EmptyPopulation,
    ZeroCount,
    FractionOutOfRange,
    ProbabilityOutOfRange,
    UnknownArchetype,
    DuplicateArchetype,
    NegativeStd,
    NonFinite,
    NonPositiveParameter,
    NegativeParameter,
    DisallowedForBusiness,
    ScheduledActionRate,
    PopulationTooLarge,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::UnsupportedSchemaVersion => "unsupported_schema_version",
            ViolationCode::NonPositiveMaxTime => "non_positive_max_time",
            ViolationCode::EmptyPopulation => "empty_population",
            ViolationCode::ZeroCount => "zero_count",
            ViolationCode::FractionOutOfRange => "fraction_out_of_range",
            ViolationCode::ProbabilityOutOfRange => "probability_out_of_range",
            ViolationCode::UnknownArchetype => "unknown_archetype",
            ViolationCode::DuplicateArchetype => "duplicate_archetype",
            ViolationCode::NegativeStd => "negative_std",
            ViolationCode::NonFinite => "non_finite",
            ViolationCode::NonPositiveParameter => "non_positive_parameter",
            ViolationCode::NegativeParameter => "negative_parameter",
            ViolationCode::DisallowedForBusiness => "disallowed_for_business",
            ViolationCode::ScheduledActionRate => "scheduled_action_rate",
            ViolationCode::PopulationTooLarge => "population_too_large",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    /// JSON-path-like location, e.g. `archetypes[2].rates.btc_buy.std`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.code.as_str(), self.path, self.message)
    }
}

struct Checker(Vec<Violation>);

impl Checker {
    fn push(&mut self, code: ViolationCode, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { code, path: path.into(), message: message.into() });
    }

    fn finite(&mut self, path: &str, v: f64) -> bool {
        if !v.is_finite() {
            self.push(ViolationCode::NonFinite, path, format!("value {v} is not finite"));
            return false;
        }
        true
    }

    fn positive(&mut self, path: &str, v: f64) {
        if self.finite(path, v) && v <= 0.0 {
            self.push(ViolationCode::NonPositiveParameter, path, format!("must be > 0, got {v}"));
        }
    }

    fn non_negative(&mut self, path: &str, v: f64) {
        if self.finite(path, v) && v < 0.0 {
            self.push(ViolationCode::NegativeParameter, path, format!("must be >= 0, got {v}"));
        }
    }

    fn probability(&mut self, path: &str, v: f64) {
        if self.finite(path, v) && !(0.0..=1.0).contains(&v) {
            self.push(ViolationCode::ProbabilityOutOfRange, path, format!("must be in [0, 1], got {v}"));
        }
    }

    fn normal(&mut self, path: &str, n: &NormalSpec) {
        self.finite(&format!("{path}.mean"), n.mean);
        if self.finite(&format!("{path}.std"), n.std) && n.std < 0.0 {
            self.push(ViolationCode::NegativeStd, format!("{path}.std"), "negative standard deviation");
        }
    }

    fn optional_period(&mut self, path: &str, period: Option<f64>, first_due: Option<f64>) {
        if let Some(p) = period {
            self.positive(&format!("{path}.period_days"), p);
        }
        if let Some(d) = first_due {
            self.non_negative(&format!("{path}.first_due_days"), d);
        }
    }
}

/// Every invariant the scenario breaks; empty when it is runnable.
pub fn validate_config(cfg: &SimulationConfig) -> Vec<Violation> {
    let mut c = Checker(Vec::new());

    if cfg.schema_version != SCHEMA_VERSION {
        c.push(
            ViolationCode::UnsupportedSchemaVersion,
            "schema_version",
            format!("expected {SCHEMA_VERSION}, got {}", cfg.schema_version),
        );
    }
    if c.finite("max_time", cfg.max_time) && cfg.max_time <= 0.0 {
        c.push(ViolationCode::NonPositiveMaxTime, "max_time", format!("must be > 0, got {}", cfg.max_time));
    }
    c.positive("unverified_cap", cfg.unverified_cap);
    c.positive("btc_price", cfg.btc_price);
    c.positive("boost_multiplier", cfg.boost_multiplier);
    c.non_negative("new_customer_rate", cfg.new_customer_rate);

    for (i, a) in cfg.archetypes.iter().enumerate() {
        let base = format!("archetypes[{i}]");
        if cfg.archetypes[..i].iter().any(|b| b.name == a.name) {
            c.push(ViolationCode::DuplicateArchetype, format!("{base}.name"), format!("archetype `{}` defined twice", a.name));
        }
        for (action, dist) in &a.rates {
            let path = format!("{base}.rates.{action}");
            c.normal(&path, dist);
            if action.is_scheduled() {
                c.push(
                    ViolationCode::ScheduledActionRate,
                    path.clone(),
                    format!("{action} is scheduled; configure it with a rent/paycheque/loan block"),
                );
            }
        }
        for (action, dist) in &a.amounts {
            c.normal(&format!("{base}.amounts.{action}"), dist);
        }
        c.normal(&format!("{base}.p2p_threshold"), &a.p2p_threshold);
        c.probability(&format!("{base}.id_success_prob"), a.id_success_prob);
        c.non_negative(&format!("{base}.initial_cash"), a.initial_cash);
        c.probability(&format!("{base}.bad_actor.id_success_prob"), a.bad_actor.id_success_prob);
        c.normal(&format!("{base}.bad_actor.p2p_amount"), &a.bad_actor.p2p_amount);
        c.normal(&format!("{base}.bad_actor.p2p_threshold"), &a.bad_actor.p2p_threshold);
        if let Some(r) = &a.rent {
            c.normal(&format!("{base}.rent.amount"), &r.amount);
            c.optional_period(&format!("{base}.rent"), r.period_days, r.first_due_days);
        }
        if let Some(p) = &a.paycheque {
            c.normal(&format!("{base}.paycheque.amount"), &p.amount);
            c.optional_period(&format!("{base}.paycheque"), p.period_days, p.first_due_days);
        }
        if let Some(l) = &a.loan {
            c.normal(&format!("{base}.loan.original"), &l.original);
            let path = format!("{base}.loan.repayment_fraction");
            if c.finite(&path, l.repayment_fraction) && !(l.repayment_fraction > 0.0 && l.repayment_fraction <= 1.0) {
                c.push(ViolationCode::FractionOutOfRange, path, format!("must be in (0, 1], got {}", l.repayment_fraction));
            }
            c.optional_period(&format!("{base}.loan"), l.period_days, l.first_due_days);
        }
        if a.kind == AgentKind::Business {
            for action in a.allowed_actions().filter(|x| x.is_individual_only()) {
                let key = match action {
                    Action::PayRent => "rent".to_string(),
                    Action::RepayLoan => "loan".to_string(),
                    other => format!("rates.{other}"),
                };
                c.push(
                    ViolationCode::DisallowedForBusiness,
                    format!("{base}.{key}"),
                    format!("action disallowed for business kind: {action}"),
                );
            }
        }
    }

    if cfg.population.is_empty() {
        c.push(ViolationCode::EmptyPopulation, "population", "at least one population entry is required");
    }
    for (i, p) in cfg.population.iter().enumerate() {
        let base = format!("population[{i}]");
        if p.count == 0 {
            c.push(ViolationCode::ZeroCount, format!("{base}.count"), "count must be > 0");
        }
        if c.finite(&format!("{base}.bad_actor_fraction"), p.bad_actor_fraction)
            && !(0.0..=1.0).contains(&p.bad_actor_fraction)
        {
            c.push(
                ViolationCode::FractionOutOfRange,
                format!("{base}.bad_actor_fraction"),
                format!("must be in [0, 1], got {}", p.bad_actor_fraction),
            );
        }
        if !cfg.archetypes.iter().any(|a| a.name == p.archetype) {
            c.push(ViolationCode::UnknownArchetype, format!("{base}.archetype"), format!("no archetype named `{}`", p.archetype));
        }
    }
    if cfg.total_agents() > MAX_DISTINCT_TOKENS {
        c.push(
            ViolationCode::PopulationTooLarge,
            "population",
            format!("{} agents; tokens are only distinct for up to {MAX_DISTINCT_TOKENS}", cfg.total_agents()),
        );
    }
    c.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use finkmc_core::ScheduleSpec;

    #[test]
    fn baseline_is_valid_and_sized() {
        let b = baseline_scenario();
        assert_eq!(validate_config(&b), vec![]);
        assert_eq!(b.total_agents(), 1000);
        assert_eq!(b.max_time, 8.0);
        assert!(b.population.iter().all(|p| p.bad_actor_fraction == 0.5));
    }

    #[test]
    fn baseline_has_exactly_half_bad_actors() {
        let w = finkmc_core::World::build(baseline_scenario().world_params()).unwrap();
        assert_eq!(w.agents.len(), 1000);
        assert_eq!(w.agents.iter().filter(|a| a.is_bad_actor).count(), 500);
    }

    #[test]
    fn baseline_bad_actor_parameters() {
        let b = baseline_scenario();
        for a in &b.archetypes {
            assert_eq!(a.bad_actor.id_success_prob, 0.5);
            assert_eq!(a.bad_actor.p2p_amount, NormalSpec::new(5.0, 3.0));
            assert_eq!(a.bad_actor.p2p_threshold, NormalSpec::new(15.0, 3.0));
            assert_eq!(a.id_success_prob, 0.75);
            assert_eq!(a.amount(Action::P2pSend), NormalSpec::new(8.0, 3.0));
            assert_eq!(a.p2p_threshold, NormalSpec::new(30.0, 3.0));
        }
    }

    #[test]
    fn population_beyond_distinct_tokens_is_rejected() {
        let mut b = baseline_scenario();
        b.population[0].count = (MAX_DISTINCT_TOKENS - 600) as u32;
        assert_eq!(validate_config(&b), vec![]);
        b.population[0].count += 1;
        let v = validate_config(&b);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::PopulationTooLarge);
    }

    #[test]
    fn empty_text_lists_required_keys() {
        let err = SimulationConfig::from_json("  \n").unwrap_err();
        let msg = err.to_string();
        for k in REQUIRED_KEYS {
            assert!(msg.contains(k), "{msg}");
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match SimulationConfig::from_json("{\n  \"seed\": 1,,\n}") {
            Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(baseline_json()).unwrap();
        v["archetypes"][0]["colour"] = serde_json::json!("blue");
        let err = SimulationConfig::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn missing_key_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(baseline_json()).unwrap();
        v.as_object_mut().unwrap().remove("max_time");
        let err = SimulationConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("max_time"), "{err}");
    }

    #[test]
    fn negative_std_is_reported() {
        let mut b = baseline_scenario();
        b.archetypes[0].rates.insert(Action::CashIn, NormalSpec::new(1.0, -1.0));
        let v = validate_config(&b);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::NegativeStd);
        assert_eq!(v[0].message, "negative standard deviation");
    }

    #[test]
    fn business_rent_is_disallowed() {
        let mut b = baseline_scenario();
        let biz = b.archetypes.iter_mut().find(|a| a.kind == AgentKind::Business).unwrap();
        biz.rent = Some(ScheduleSpec { amount: NormalSpec::fixed(10.0), period_days: None, first_due_days: None });
        let v = validate_config(&b);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::DisallowedForBusiness);
        assert!(v[0].message.contains("action disallowed for business kind"));
    }

    #[test]
    fn fraction_range_and_references() {
        let mut b = baseline_scenario();
        b.population[0].bad_actor_fraction = 1.5;
        b.population[1].archetype = "nobody".into();
        b.population[2].count = 0;
        b.max_time = 0.0;
        let codes: Vec<_> = validate_config(&b).iter().map(|v| v.code).collect();
        assert_eq!(
            codes,
            [
                ViolationCode::NonPositiveMaxTime,
                ViolationCode::FractionOutOfRange,
                ViolationCode::UnknownArchetype,
                ViolationCode::ZeroCount
            ]
        );
    }

    #[test]
    fn scheduled_actions_cannot_have_free_rates() {
        let mut b = baseline_scenario();
        b.archetypes[0].rates.insert(Action::DepositPaycheque, NormalSpec::fixed(1.0));
        let v = validate_config(&b);
        assert_eq!(v[0].code, ViolationCode::ScheduledActionRate);
    }

    #[test]
    fn round_trip_is_identity() {
        let b = baseline_scenario();
        assert_eq!(SimulationConfig::from_json(&b.to_json()).unwrap(), b);
    }
}
