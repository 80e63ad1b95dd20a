//! The event log: one CSV row per simulation step.
//!
//! Columns are `time,initiating_token,action,value,receiving_token`. A field
//! that an event does not have is left empty. Money is written with two
//! decimals; id verification writes `True` or `False`.

use std::fmt;
use std::io::{Read, Write};

use chrono::{NaiveDateTime, TimeDelta};
use finkmc_core::{Action, Cents, Event, EventKind, EventValue};
use sha1::{Digest, Sha1};
use thiserror::Error;

pub const HEADER: [&str; 5] = ["time", "initiating_token", "action", "value", "receiving_token"];

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Log name of the arrival event.
pub const CUSTOMER_JOIN: &str = "customer_join";

const CENTISECONDS_PER_DAY: f64 = 8_640_000.0;

/// Non-identifying agent handle: `C_` and the first 8 hex digits of the SHA-1
/// of the agent's decimal id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Accepts `C_` followed by 8 lowercase alphanumerics.
    pub fn parse(s: &str) -> Option<Token> {
        let body = s.strip_prefix("C_")?;
        (body.len() == 8 && body.bytes().all(|b| b.is_ascii_digit() || b.is_ascii_lowercase()))
            .then(|| Token(s.to_string()))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ids `0..MAX_DISTINCT_TOKENS` map to pairwise distinct tokens; id 40686
/// is the first to repeat an earlier token (that of 35097).
pub const MAX_DISTINCT_TOKENS: u64 = 40_686;

pub fn token_for(numeric_id: u64) -> Token {
    let digest = Sha1::digest(numeric_id.to_string().as_bytes());
    let mut s = String::with_capacity(10);
    s.push_str("C_");
    for b in &digest[..4] {
        s.push_str(&format!("{b:02x}"));
    }
    Token(s)
}

/// `epoch + sim_time` as `YYYY-MM-DD HH:MM:SS.ss`, rounded to the nearest
/// centisecond.
pub fn format_timestamp(sim_time: f64, epoch: NaiveDateTime) -> String {
    let cs = (sim_time * CENTISECONDS_PER_DAY).round() as i64;
    let dt = epoch + TimeDelta::milliseconds(cs * 10);
    format!("{}.{:02}", dt.format(TIMESTAMP_FORMAT), cs.rem_euclid(100))
}

/// Centiseconds since the Unix epoch for a log timestamp.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let (whole, frac) = s.split_once('.')?;
    if frac.len() != 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let dt = NaiveDateTime::parse_from_str(whole, TIMESTAMP_FORMAT).ok()?;
    let cs: i64 = frac.parse().ok()?;
    Some(dt.and_utc().timestamp() * 100 + cs)
}

/// The action column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogAction {
    Action(Action),
    CustomerJoin,
}

impl LogAction {
    pub fn name(self) -> &'static str {
        match self {
            LogAction::Action(a) => a.log_name(),
            LogAction::CustomerJoin => CUSTOMER_JOIN,
        }
    }

    pub fn parse(s: &str) -> Option<LogAction> {
        if s == CUSTOMER_JOIN {
            Some(LogAction::CustomerJoin)
        } else {
            Action::from_log_name(s).map(LogAction::Action)
        }
    }
}

impl From<EventKind> for LogAction {
    fn from(k: EventKind) -> Self {
        match k {
            EventKind::Action(a) => LogAction::Action(a),
            EventKind::CustomerJoin => LogAction::CustomerJoin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogValue {
    Amount(Cents),
    Bool(bool),
    Null,
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogValue::Amount(c) => write!(f, "{c}"),
            LogValue::Bool(true) => f.write_str("True"),
            LogValue::Bool(false) => f.write_str("False"),
            LogValue::Null => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub time: String,
    pub initiating_token: Token,
    pub action: LogAction,
    pub value: LogValue,
    pub receiving_token: Option<Token>,
}

impl LogRecord {
    pub fn from_event(event: &Event, epoch: NaiveDateTime) -> LogRecord {
        LogRecord {
            time: format_timestamp(event.time, epoch),
            initiating_token: token_for(u64::from(event.agent)),
            action: event.kind.into(),
            value: match event.value {
                EventValue::Amount(c) => LogValue::Amount(c),
                EventValue::Verified(b) => LogValue::Bool(b),
                EventValue::None => LogValue::Null,
            },
            receiving_token: event.counterparty.map(|id| token_for(u64::from(id))),
        }
    }

    /// Checks the NULL pattern: a receiver iff p2p, a boolean iff id
    /// verification, an amount for every other action.
    pub fn check_shape(&self) -> Result<(), String> {
        let is_p2p = self.action == LogAction::Action(Action::P2pSend);
        let is_verification = self.action == LogAction::Action(Action::IdVerification);
        if is_p2p != self.receiving_token.is_some() {
            return Err(if is_p2p {
                "p2p_sent row without receiving_token".into()
            } else {
                format!("{} row must not have a receiving_token", self.action.name())
            });
        }
        match (is_verification, self.value) {
            (true, LogValue::Bool(_)) | (false, LogValue::Amount(_)) => Ok(()),
            (true, _) => Err("id_verification value must be True or False".into()),
            (false, _) => Err(format!("{} value must be a decimal amount", self.action.name())),
        }
    }

    pub fn centiseconds(&self) -> Option<i64> {
        parse_timestamp(&self.time)
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed log row {row}: {message}")]
    Malformed { row: u64, message: String },
    #[error("record violates log schema: {0}")]
    Shape(String),
}

/// Buffered CSV writer for log records.
pub struct LogWriter<W: Write> {
    inner: csv::Writer<W>,
    rows: u64,
}

impl<W: Write> LogWriter<W> {
    pub fn new(sink: W, header: bool) -> Result<Self, LogError> {
        let mut inner = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(sink);
        if header {
            inner.write_record(HEADER)?;
        }
        Ok(LogWriter { inner, rows: 0 })
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        record.check_shape().map_err(LogError::Shape)?;
        let value = record.value.to_string();
        let receiving = record.receiving_token.as_ref().map_or("", Token::as_str);
        self.inner.write_record([
            record.time.as_str(),
            record.initiating_token.as_str(),
            record.action.name(),
            value.as_str(),
            receiving,
        ])?;
        self.rows += 1;
        Ok(())
    }

    /// Data rows written so far.
    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn finish(mut self) -> Result<W, LogError> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| LogError::Io(e.into_error()))
    }
}

/// Parses a whole log. A leading header row is optional. Any malformed row is
/// an error naming its 1-based line number.
pub fn read_log<R: Read>(source: R) -> Result<Vec<LogRecord>, LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut out = Vec::new();
    let mut last_cs = i64::MIN;
    for (i, row) in reader.records().enumerate() {
        let line = row.as_ref().ok().and_then(|r| r.position()).map_or(i as u64 + 1, |p| p.line());
        let row = row.map_err(|e| LogError::Malformed { row: line, message: e.to_string() })?;
        if i == 0 && row.iter().eq(HEADER.iter().copied()) {
            continue;
        }
        let bad = |message: String| LogError::Malformed { row: line, message };
        if row.len() != HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", HEADER.len(), row.len())));
        }
        let cs = parse_timestamp(&row[0]).ok_or_else(|| bad(format!("invalid timestamp `{}`", &row[0])))?;
        if cs < last_cs {
            return Err(bad("timestamp earlier than the previous row".into()));
        }
        last_cs = cs;
        let initiating_token = Token::parse(&row[1]).ok_or_else(|| bad(format!("invalid token `{}`", &row[1])))?;
        let action = LogAction::parse(&row[2]).ok_or_else(|| bad(format!("unknown action `{}`", &row[2])))?;
        let value = match &row[3] {
            "" => LogValue::Null,
            "True" => LogValue::Bool(true),
            "False" => LogValue::Bool(false),
            v => LogValue::Amount(v.parse().map_err(|_| bad(format!("invalid value `{v}`")))?),
        };
        let receiving_token = match &row[4] {
            "" => None,
            t => Some(Token::parse(t).ok_or_else(|| bad(format!("invalid receiving token `{t}`")))?),
        };
        let record = LogRecord { time: row[0].to_string(), initiating_token, action, value, receiving_token };
        record.check_shape().map_err(bad)?;
        out.push(record);
    }
    Ok(out)
}

/// Writes `events` as a complete log.
pub fn write_events<W: Write>(
    events: &[Event],
    epoch: NaiveDateTime,
    sink: W,
    header: bool,
) -> Result<W, LogError> {
    let mut w = LogWriter::new(sink, header)?;
    for e in events {
        w.append(&LogRecord::from_event(e, epoch))?;
    }
    w.finish()
}
