//! Integer currency amounts.
//!
//! Balances are held in hundredths of a currency unit so that every amount
//! written to the log (two decimal places) replays to the exact same balance.

use core::fmt;
use core::ops::{Add, AddAssign, Sub, SubAssign};
use core::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cents(pub i64);

impl Cents {
    pub const ZERO: Cents = Cents(0);
    /// Smallest nonzero transfer.
    pub const MIN_TRANSFER: Cents = Cents(1);

    /// Rounds a currency amount to the nearest cent.
    pub fn from_units(units: f64) -> Cents {
        Cents(libm::round(units * 100.0) as i64)
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Clamps into `[lo, hi]`; `hi` wins when the bounds cross.
    pub fn clamp_to(self, lo: Cents, hi: Cents) -> Cents {
        Cents(self.0.max(lo.0).min(hi.0))
    }
}

impl Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl AddAssign for Cents {
    fn add_assign(&mut self, rhs: Cents) {
        self.0 += rhs.0;
    }
}

impl Sub for Cents {
    type Output = Cents;
    fn sub(self, rhs: Cents) -> Cents {
        Cents(self.0 - rhs.0)
    }
}

impl SubAssign for Cents {
    fn sub_assign(&mut self, rhs: Cents) {
        self.0 -= rhs.0;
    }
}

impl core::iter::Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        Cents(iter.map(|c| c.0).sum())
    }
}

/// Renders with exactly two decimals, e.g. `2000.00`, `-0.05`.
impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{}{}.{:02}", sign, abs / 100, abs % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseCentsError;

impl fmt::Display for ParseCentsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid decimal amount")
    }
}

/// Parses a plain decimal with at most two fractional digits.
impl FromStr for Cents {
    type Err = ParseCentsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, f),
            None => (body, ""),
        };
        if whole.is_empty()
            || frac.len() > 2
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(ParseCentsError);
        }
        let whole: i64 = whole.parse().map_err(|_| ParseCentsError)?;
        let mut frac_val: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| ParseCentsError)? };
        if frac.len() == 1 {
            frac_val *= 10;
        }
        let v = whole
            .checked_mul(100)
            .and_then(|w| w.checked_add(frac_val))
            .ok_or(ParseCentsError)?;
        Ok(Cents(if neg { -v } else { v }))
    }
}
