//! Per-customer feature table built from an event log.
//!
//! One row per initiating token, sorted by token. Time differences are in
//! seconds. Standard deviations are sample deviations (divide by n - 1).
//! A statistic that is undefined (no gap, or one gap for the deviation) is
//! written as an empty field.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use finkmc_core::{Action, AgentId, Cents, World, WorldParams};
use thiserror::Error;

use crate::logio::{token_for, LogAction, LogRecord, LogValue, Token};

/// The actions that get their own columns, in column order, with their
/// column prefix.
pub const FEATURED: [(Action, &str); 5] = [
    (Action::CashIn, "cash_in"),
    (Action::IdVerification, "customer_verification"),
    (Action::CashOut, "cash_out"),
    (Action::P2pSend, "p2p_sent"),
    (Action::BtcBuy, "btc_buy"),
];

pub fn feature_columns() -> Vec<String> {
    let mut cols = vec!["total_events".to_string()];
    for suffix in ["count", "ratio", "value", "value_ratio"] {
        cols.extend(FEATURED.iter().map(|(_, p)| format!("{p}_{suffix}")));
    }
    for stat in ["mean", "median", "std"] {
        cols.push(format!("time_diff_{stat}_all"));
    }
    for (_, p) in FEATURED {
        for stat in ["mean", "median", "std"] {
            cols.push(format!("time_diff_{stat}_{p}"));
        }
    }
    cols
}

/// Mean, median and standard deviation of successive gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDiffStats {
    pub mean: f64,
    pub median: f64,
    /// `None` when there is a single gap.
    pub std: Option<f64>,
}

/// Statistics of the gaps between consecutive `times` (seconds). `None` for
/// fewer than two timestamps.
///
/// # Panics
///
/// If `times` is not sorted ascending.
pub fn time_diff_stats(times: &[f64]) -> Option<TimeDiffStats> {
    assert!(times.windows(2).all(|w| w[0] <= w[1]), "timestamps must be sorted");
    if times.len() < 2 {
        return None;
    }
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let std = (gaps.len() > 1).then(|| (gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0)).sqrt());
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    let median = if gaps.len().is_multiple_of(2) { (gaps[mid - 1] + gaps[mid]) / 2.0 } else { gaps[mid] };
    Some(TimeDiffStats { mean, median, std })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub token: Token,
    pub total_events: u64,
    /// Indexed like [`FEATURED`].
    pub counts: [u64; 5],
    pub ratios: [f64; 5],
    pub values: [f64; 5],
    pub value_ratios: [f64; 5],
    pub time_diff_all: Option<TimeDiffStats>,
    pub time_diff: [Option<TimeDiffStats>; 5],
    pub label: u8,
}

impl FeatureRow {
    fn fields(&self) -> Vec<String> {
        let mut out = vec![self.token.to_string(), self.total_events.to_string()];
        out.extend(self.counts.iter().map(u64::to_string));
        for arr in [&self.ratios, &self.values, &self.value_ratios] {
            out.extend(arr.iter().map(f64::to_string));
        }
        for stats in std::iter::once(&self.time_diff_all).chain(&self.time_diff) {
            match stats {
                Some(s) => {
                    out.push(s.mean.to_string());
                    out.push(s.median.to_string());
                    out.push(s.std.map_or_else(String::new, |x| x.to_string()));
                }
                None => out.extend([String::new(), String::new(), String::new()]),
            }
        }
        out.push(self.label.to_string());
        out
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("log row {row}: invalid timestamp")]
    Timestamp { row: usize },
    #[error("token {0} does not belong to the configured population")]
    UnknownToken(Token),
    #[error("configuration names an unknown archetype")]
    UnknownArchetype,
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn featured_index(action: LogAction) -> Option<usize> {
    match action {
        LogAction::Action(a) => FEATURED.iter().position(|(f, _)| *f == a),
        LogAction::CustomerJoin => None,
    }
}

#[derive(Default)]
struct Accumulator {
    total: u64,
    counts: [u64; 5],
    values: [Cents; 5],
    times_all: Vec<f64>,
    times: [Vec<f64>; 5],
}

/// Builds the feature rows. Labels come from `labels`; every initiating token
/// must be present there.
pub fn extract_features(records: &[LogRecord], labels: &HashMap<Token, u8>) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut per_token: BTreeMap<&Token, Accumulator> = BTreeMap::new();
    let origin = records.first().and_then(LogRecord::centiseconds).unwrap_or(0);
    for (i, r) in records.iter().enumerate() {
        let cs = r.centiseconds().ok_or(FeatureError::Timestamp { row: i + 1 })?;
        // Relative to the first row to keep the seconds small and exact.
        let t = (cs - origin) as f64 / 100.0;
        let acc = per_token.entry(&r.initiating_token).or_default();
        acc.total += 1;
        acc.times_all.push(t);
        if let Some(k) = featured_index(r.action) {
            acc.counts[k] += 1;
            acc.times[k].push(t);
            acc.values[k] += match r.value {
                LogValue::Amount(c) => c,
                // A success counts as one unit.
                LogValue::Bool(true) => Cents(100),
                _ => Cents::ZERO,
            };
        }
    }
    per_token
        .into_iter()
        .map(|(token, acc)| {
            let label = *labels.get(token).ok_or_else(|| FeatureError::UnknownToken(token.clone()))?;
            let values = acc.values.map(Cents::as_units);
            let value_total: f64 = acc.values.iter().copied().sum::<Cents>().as_units();
            Ok(FeatureRow {
                token: token.clone(),
                total_events: acc.total,
                counts: acc.counts,
                ratios: acc.counts.map(|c| c as f64 / acc.total as f64),
                values,
                value_ratios: values.map(|v| if value_total > 0.0 { v / value_total } else { 0.0 }),
                time_diff_all: time_diff_stats(&acc.times_all),
                time_diff: acc.times.each_ref().map(|t| time_diff_stats(t)),
                label,
            })
        })
        .collect()
}

/// Writes the header and rows as CSV.
pub fn write_features<W: Write>(rows: &[FeatureRow], sink: W) -> Result<W, FeatureError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let mut header = vec!["token".to_string()];
    header.extend(feature_columns());
    header.push("label".to_string());
    w.write_record(&header)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| FeatureError::Io(e.into_error()))
}

/// Ground-truth labels for every agent a run with `params` could have logged:
/// the initial population plus one arrival per `customer_join` record.
pub fn label_table(params: &WorldParams, records: &[LogRecord]) -> Result<HashMap<Token, u8>, FeatureError> {
    let world = World::build(params.clone()).map_err(|_| FeatureError::UnknownArchetype)?;
    let mut labels: HashMap<Token, u8> = world
        .agents
        .iter()
        .map(|a| (token_for(u64::from(a.id)), u8::from(a.is_bad_actor)))
        .collect();
    let joins = records.iter().filter(|r| r.action == LogAction::CustomerJoin).count();
    let first = world.agents.len() as AgentId;
    for k in 0..joins as AgentId {
        let id = first + k;
        let agent = World::sample_arrival(params, id, 0.0).ok_or(FeatureError::UnknownArchetype)?;
        labels.insert(token_for(u64::from(id)), u8::from(agent.is_bad_actor));
    }
    Ok(labels)
}

/// One field of `row` as written to CSV, by column name.
pub fn value_for(row: &FeatureRow, column: &str) -> Option<String> {
    let mut names = vec!["token".to_string()];
    names.extend(feature_columns());
    names.push("label".to_string());
    let i = names.iter().position(|n| n == column)?;
    row.fields().into_iter().nth(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logio::read_log;

    const FIXTURE: &str = "time,initiating_token,action,value,receiving_token\n\
        2022-09-01 00:00:00.00,C_b6589fc6,cash_in,10.00,\n\
        2022-09-01 00:01:00.00,C_b6589fc6,cash_in,20.00,\n\
        2022-09-01 00:03:00.00,C_b6589fc6,cash_out,5.00,\n";

    fn fixture_rows() -> Vec<FeatureRow> {
        let records = read_log(FIXTURE.as_bytes()).unwrap();
        let labels = HashMap::from([(token_for(0), 0)]);
        extract_features(&records, &labels).unwrap()
    }

    #[test]
    fn thirty_nine_columns_in_order() {
        let cols = feature_columns();
        assert_eq!(cols.len(), 39);
        assert_eq!(cols[0], "total_events");
        assert_eq!(cols[1], "cash_in_count");
        assert_eq!(cols[2], "customer_verification_count");
        assert_eq!(cols[20], "btc_buy_value_ratio");
        assert_eq!(cols[21], "time_diff_mean_all");
        assert_eq!(cols[24], "time_diff_mean_cash_in");
        assert_eq!(cols[38], "time_diff_std_btc_buy");
    }

    #[test]
    fn stats_examples() {
        assert_eq!(time_diff_stats(&[5.0]), None);
        assert_eq!(time_diff_stats(&[]), None);
        assert_eq!(time_diff_stats(&[0.0, 10.0, 20.0]), Some(TimeDiffStats { mean: 10.0, median: 10.0, std: Some(0.0) }));
        let s = time_diff_stats(&[0.0, 60.0, 180.0]).unwrap();
        assert_eq!((s.mean, s.median, s.std), (90.0, 90.0, Some(1800f64.sqrt())));
        assert!((s.std.unwrap() - 42.4264).abs() < 1e-4);
        assert_eq!(time_diff_stats(&[3.0, 5.0]), Some(TimeDiffStats { mean: 2.0, median: 2.0, std: None }));
        let s = time_diff_stats(&[0.0, 1.0, 5.0, 6.0]).unwrap();
        assert_eq!(s.median, 1.0);
    }

    #[test]
    #[should_panic(expected = "sorted")]
    fn unsorted_times_panic() {
        time_diff_stats(&[2.0, 1.0]);
    }

    #[test]
    fn fixture_row() {
        let rows = fixture_rows();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.total_events, 3);
        assert_eq!(r.counts, [2, 0, 1, 0, 0]);
        assert_eq!(r.ratios[0], 2.0 / 3.0);
        assert_eq!(r.ratios[2], 1.0 / 3.0);
        assert_eq!(r.values, [30.0, 0.0, 5.0, 0.0, 0.0]);
        assert_eq!(r.value_ratios[0], 30.0 / 35.0);
        assert_eq!(r.value_ratios[2], 5.0 / 35.0);
        assert_eq!(r.time_diff_all, Some(TimeDiffStats { mean: 90.0, median: 90.0, std: Some(1800f64.sqrt()) }));
        assert_eq!(r.time_diff[0], Some(TimeDiffStats { mean: 60.0, median: 60.0, std: None }));
        assert_eq!(r.time_diff[2], None);
        assert!(r.counts.iter().sum::<u64>() <= r.total_events);
        assert!((r.ratios.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_event_has_empty_stats() {
        let records = read_log("2022-09-01 00:00:00.00,C_b6589fc6,cash_in,10.00,\n".as_bytes()).unwrap();
        let rows = extract_features(&records, &HashMap::from([(token_for(0), 1)])).unwrap();
        let text = String::from_utf8(write_features(&rows, Vec::new()).unwrap()).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with("C_b6589fc6,1,1,0,0,0,0,1,0,0,0,0,10,0,0,0,0,1,0,0,0,0,"), "{line}");
        assert!(line.ends_with(",,,,,,,,,,,,,,,,,,1"), "{line}");
        assert_eq!(value_for(&rows[0], "time_diff_std_all").unwrap(), "");
    }

    #[test]
    fn verification_value_counts_successes() {
        let text = "2022-09-01 00:00:00.00,C_b6589fc6,id_verification,False,\n\
                    2022-09-01 00:00:01.00,C_b6589fc6,id_verification,True,\n\
                    2022-09-01 00:00:02.00,C_b6589fc6,pay_rent,3.00,\n";
        let records = read_log(text.as_bytes()).unwrap();
        let rows = extract_features(&records, &HashMap::from([(token_for(0), 0)])).unwrap();
        assert_eq!(rows[0].counts[1], 2);
        assert_eq!(rows[0].values[1], 1.0);
        assert_eq!(rows[0].total_events, 3);
        assert_eq!(rows[0].value_ratios[1], 1.0);
    }

    #[test]
    fn unknown_token_is_an_error() {
        let records = read_log(FIXTURE.as_bytes()).unwrap();
        let err = extract_features(&records, &HashMap::new()).unwrap_err();
        assert!(matches!(err, FeatureError::UnknownToken(t) if t == token_for(0)));
    }

    #[test]
    fn empty_log_gives_header_only() {
        let text = String::from_utf8(write_features(&[], Vec::new()).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("token,total_events,cash_in_count,"));
        assert!(text.trim_end().ends_with(",time_diff_std_btc_buy,label"));
    }
}
