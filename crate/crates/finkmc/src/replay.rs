//! Re-applies a log to the initial population and checks every balance rule
//! along the way.

use std::collections::HashMap;

use finkmc_core::agents::btc_for;
use finkmc_core::{Action, Agent, AgentId, AgentKind, Cents, World, WorldParams};
use thiserror::Error;

use crate::logio::{token_for, LogAction, LogRecord, LogValue, Token};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayedAgent {
    pub token: Token,
    pub kind: AgentKind,
    pub cash: Cents,
    pub btc: f64,
    pub loan_balance: Cents,
    pub id_verified: bool,
}

impl ReplayedAgent {
    fn from_agent(a: &Agent) -> Self {
        ReplayedAgent {
            token: token_for(u64::from(a.id)),
            kind: a.kind,
            cash: a.cash,
            btc: a.btc,
            loan_balance: a.loan_balance,
            id_verified: a.id_verified,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("log row {row}: {message}")]
pub struct ReplayError {
    /// 1-based index among data rows.
    pub row: usize,
    pub message: String,
}

/// Replays `records` against the population `params` builds. Arrivals take
/// the next free id, as in the engine.
pub fn replay(params: &WorldParams, records: &[LogRecord]) -> Result<Vec<ReplayedAgent>, ReplayError> {
    let world = World::build(params.clone()).map_err(|_| ReplayError { row: 0, message: "unknown archetype".into() })?;
    let mut agents: Vec<ReplayedAgent> = world.agents.iter().map(ReplayedAgent::from_agent).collect();
    let mut index: HashMap<Token, usize> = agents.iter().enumerate().map(|(i, a)| (a.token.clone(), i)).collect();

    for (i, r) in records.iter().enumerate() {
        let row = i + 1;
        let fail = |message: String| ReplayError { row, message };
        let amount = match r.value {
            LogValue::Amount(c) if c.0 >= 0 => c,
            LogValue::Amount(c) => return Err(fail(format!("negative amount {c}"))),
            _ => Cents::ZERO,
        };

        if r.action == LogAction::CustomerJoin {
            let id = agents.len() as AgentId;
            if r.initiating_token != token_for(u64::from(id)) {
                return Err(fail(format!("arrival should have token {}", token_for(u64::from(id)))));
            }
            let arrival = World::sample_arrival(params, id, 0.0).ok_or_else(|| fail("no archetype to arrive".into()))?;
            if arrival.cash != amount {
                return Err(fail(format!("arrival opening balance {amount} differs from {}", arrival.cash)));
            }
            index.insert(r.initiating_token.clone(), agents.len());
            agents.push(ReplayedAgent::from_agent(&arrival));
            continue;
        }
        let LogAction::Action(action) = r.action else { unreachable!() };
        let who = *index
            .get(&r.initiating_token)
            .ok_or_else(|| fail(format!("unknown token {}", r.initiating_token)))?;
        let a = &mut agents[who];
        if a.kind == AgentKind::Business && action.is_individual_only() {
            return Err(fail(format!("business emitted {}", action.log_name())));
        }
        match action {
            Action::IdVerification => {
                if a.id_verified {
                    return Err(fail("verification attempted after success".into()));
                }
                a.id_verified = r.value == LogValue::Bool(true);
            }
            Action::CashIn | Action::DepositPaycheque => a.cash += amount,
            Action::CashOut | Action::PayRent => a.cash -= amount,
            Action::BtcBuy => {
                if !a.id_verified {
                    return Err(fail("btc_buy before verification".into()));
                }
                a.cash -= amount;
                a.btc += btc_for(amount, params.btc_price);
            }
            Action::RepayLoan => {
                a.cash -= amount;
                a.loan_balance -= amount;
                if a.loan_balance.0 < 0 {
                    return Err(fail("loan repaid beyond its balance".into()));
                }
            }
            Action::P2pSend => {
                a.cash -= amount;
                let to = r.receiving_token.as_ref().expect("shape checked on read");
                if *to == r.initiating_token {
                    return Err(fail("p2p transfer to self".into()));
                }
                let to = *index.get(to).ok_or_else(|| fail(format!("unknown receiver {to}")))?;
                agents[to].cash += amount;
            }
        }
        if agents[who].cash.0 < 0 {
            return Err(fail(format!("{} balance went negative", agents[who].token)));
        }
    }
    Ok(agents)
}

/// Compares replayed state with the engine's final world, field by field.
pub fn diff_against(replayed: &[ReplayedAgent], world: &World) -> Vec<String> {
    let mut out = Vec::new();
    if replayed.len() != world.agents.len() {
        out.push(format!("{} agents replayed, {} simulated", replayed.len(), world.agents.len()));
    }
    for (r, a) in replayed.iter().zip(&world.agents) {
        let sim = ReplayedAgent::from_agent(a);
        if *r != sim {
            out.push(format!("{}: replayed {r:?}, simulated {sim:?}", r.token));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logio::read_log;
    use finkmc_core::{ArchetypeSpec, NormalSpec, PopulationEntry};

    fn params() -> WorldParams {
        let mut p = WorldParams::new(1, 1.0);
        let mut person = ArchetypeSpec::new("person", AgentKind::Individual);
        person.initial_cash = 10.0;
        p.archetypes.push(person);
        p.archetypes.push(ArchetypeSpec::new("shop", AgentKind::Business).with_rate(Action::CashIn, NormalSpec::fixed(1.0)));
        p.population.push(PopulationEntry { archetype: "person".into(), count: 2, bad_actor_fraction: 0.0 });
        p.population.push(PopulationEntry { archetype: "shop".into(), count: 1, bad_actor_fraction: 0.0 });
        p
    }

    fn log(rows: &[&str]) -> Vec<LogRecord> {
        read_log(rows.join("\n").as_bytes()).unwrap()
    }

    const A: &str = "C_b6589fc6";
    const B: &str = "C_356a192b";
    const SHOP: &str = "C_da4b9237";

    #[test]
    fn tokens_used_below() {
        assert_eq!(token_for(1).as_str(), B);
        assert_eq!(token_for(2).as_str(), SHOP);
    }

    #[test]
    fn balances_follow_the_log() {
        let rows = [
            format!("2022-09-01 00:00:01.00,{A},p2p_sent,4.00,{B}"),
            format!("2022-09-01 00:00:02.00,{A},id_verification,True,"),
            format!("2022-09-01 00:00:03.00,{A},btc_buy,2.50,"),
            format!("2022-09-01 00:00:04.00,{SHOP},cash_in,1.00,"),
        ];
        let out = replay(&params(), &log(&rows.iter().map(String::as_str).collect::<Vec<_>>())).unwrap();
        assert_eq!(out[0].cash, Cents(350));
        assert_eq!(out[0].btc, 2.5);
        assert_eq!(out[1].cash, Cents(1400));
        assert_eq!(out[2].cash, Cents(100));
    }

    #[test]
    fn rule_breaks_are_reported_with_row() {
        let cases = [
            (format!("2022-09-01 00:00:01.00,{A},cash_out,10.01,"), "negative"),
            (format!("2022-09-01 00:00:01.00,{A},btc_buy,1.00,"), "before verification"),
            (format!("2022-09-01 00:00:01.00,{SHOP},pay_rent,0.00,"), "business"),
            (format!("2022-09-01 00:00:01.00,{A},repay_loan,1.00,"), "loan"),
            (format!("2022-09-01 00:00:01.00,{A},p2p_sent,1.00,{A}"), "self"),
        ];
        for (row, needle) in cases {
            let rows = [format!("2022-09-01 00:00:00.00,{B},cash_in,1.00,"), row];
            let err = replay(&params(), &log(&rows.iter().map(String::as_str).collect::<Vec<_>>())).unwrap_err();
            assert_eq!(err.row, 2);
            assert!(err.message.contains(needle), "{needle}: {}", err.message);
        }
    }

    #[test]
    fn second_verification_after_success_is_rejected() {
        let rows = [
            format!("2022-09-01 00:00:00.00,{A},id_verification,True,"),
            format!("2022-09-01 00:00:01.00,{A},id_verification,False,"),
        ];
        let err = replay(&params(), &log(&rows.iter().map(String::as_str).collect::<Vec<_>>())).unwrap_err();
        assert_eq!(err.row, 2);
    }
}
