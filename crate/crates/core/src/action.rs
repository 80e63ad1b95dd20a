//! The closed set of things an agent can do on the platform.

use core::fmt;
use core::ops::{Index, IndexMut};
use core::str::FromStr;

/// An agent-initiated action.
///
/// The first five are free-running stochastic actions whose rates are sampled
/// per agent. The last three are scheduled payments driven by the boost
/// mechanism in [`crate::scheduler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Action {
    CashIn,
    CashOut,
    P2pSend,
    IdVerification,
    BtcBuy,
    PayRent,
    DepositPaycheque,
    RepayLoan,
}

impl Action {
    pub const COUNT: usize = 8;

    pub const ALL: [Action; Self::COUNT] = [
        Action::CashIn,
        Action::CashOut,
        Action::P2pSend,
        Action::IdVerification,
        Action::BtcBuy,
        Action::PayRent,
        Action::DepositPaycheque,
        Action::RepayLoan,
    ];

    /// Actions with a sampled, free-running rate.
    pub const STOCHASTIC: [Action; 5] = [
        Action::CashIn,
        Action::CashOut,
        Action::P2pSend,
        Action::IdVerification,
        Action::BtcBuy,
    ];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn is_scheduled(self) -> bool {
        matches!(
            self,
            Action::PayRent | Action::DepositPaycheque | Action::RepayLoan
        )
    }

    /// Whether the action removes cash from the initiating agent.
    pub const fn is_outflow(self) -> bool {
        matches!(
            self,
            Action::CashOut | Action::P2pSend | Action::BtcBuy | Action::PayRent | Action::RepayLoan
        )
    }

    /// Actions a business account may never take.
    pub const fn is_individual_only(self) -> bool {
        matches!(self, Action::PayRent | Action::RepayLoan | Action::BtcBuy)
    }

    /// Configuration name (`p2p_send`, `cash_in`, ...).
    pub const fn name(self) -> &'static str {
        match self {
            Action::CashIn => "cash_in",
            Action::CashOut => "cash_out",
            Action::P2pSend => "p2p_send",
            Action::IdVerification => "id_verification",
            Action::BtcBuy => "btc_buy",
            Action::PayRent => "pay_rent",
            Action::DepositPaycheque => "deposit_paycheque",
            Action::RepayLoan => "repay_loan",
        }
    }

    /// Name written to the event log. Peer transfers are logged in the past
    /// tense as `p2p_sent`; every other action keeps its configuration name.
    pub const fn log_name(self) -> &'static str {
        match self {
            Action::P2pSend => "p2p_sent",
            other => other.name(),
        }
    }

    pub fn from_log_name(s: &str) -> Option<Action> {
        if s == "p2p_sent" {
            return Some(Action::P2pSend);
        }
        match s.parse::<Action>() {
            Ok(Action::P2pSend) => None,
            Ok(a) => Some(a),
            Err(_) => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownAction;

impl fmt::Display for UnknownAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown action name")
    }
}

impl FromStr for Action {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or(UnknownAction)
    }
}

/// Dense per-action storage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionMap<T>(pub [T; Action::COUNT]);

impl<T: Copy> ActionMap<T> {
    pub const fn splat(value: T) -> Self {
        ActionMap([value; Action::COUNT])
    }
}

impl<T> ActionMap<T> {
    pub fn iter(&self) -> impl Iterator<Item = (Action, &T)> {
        Action::ALL.iter().copied().zip(self.0.iter())
    }
}

impl<T> Index<Action> for ActionMap<T> {
    type Output = T;

    #[inline]
    fn index(&self, action: Action) -> &T {
        &self.0[action.index()]
    }
}

impl<T> IndexMut<Action> for ActionMap<T> {
    #[inline]
    fn index_mut(&mut self, action: Action) -> &mut T {
        &mut self.0[action.index()]
    }
}
